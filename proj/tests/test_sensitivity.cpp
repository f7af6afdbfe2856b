#include <doctest.h>

#include <bit>
#include <cmath>

#include "hesskit/lanczos.hpp"
#include "hesskit/oracle.hpp"
#include "hesskit/rng.hpp"
#include "hesskit/sensitivity.hpp"
#include "test_util.hpp"

using namespace hesskit;

namespace {

SpikeBasis fixture_basis(const testutil::TrainedFixture& f, int k, std::uint64_t seed) {
  const auto idx = uniform_batch_indices(f.data, Split::train, 256, seed);
  const HvpOracle oracle = model_oracle(f.spec, f.theta, Batch::gather(f.data, idx));
  const LanczosResult lz = lanczos(oracle, lanczos_start_vector(f.theta.size(), seed + 1), 10);
  return ritz(lz, k);
}

}  // namespace

TEST_CASE("sensitivity_matrix: dead directions give zero rows") {
  const auto f = testutil::trained_fixture(1);
  // A basis vector supported only on a hidden unit's input weights where the
  // unit's outgoing weights have been zeroed: provably no effect on logits.
  MlpSpec spec = f.spec;
  ParamVector theta = f.theta;
  const int hidden = spec.layer_widths[1];
  const int classes = spec.classes();
  const int unit = 3;
  const int last_off = spec.weight_offset(1);
  for (int c = 0; c < classes; ++c) {
    theta[static_cast<std::size_t>(last_off + unit * classes + c)] = 0.0;  // cut unit 3
  }
  SpikeBasis basis;
  basis.eigenvalues = {1.0};
  ParamVector dir(theta.size());
  const int in_dim = spec.layer_widths[0];
  for (int i = 0; i < in_dim; ++i) {
    dir[static_cast<std::size_t>(i * hidden + unit)] = 1.0;  // first-layer column of unit 3
  }
  basis.vectors = {normalized(dir)};
  basis.orth_error = 0.0;

  const SensitivityMatrix s =
      sensitivity_matrix(spec, theta, basis, 0.1, f.data, Split::sensitivity);
  for (double v : s.s[0]) CHECK(v == 0.0);
}

TEST_CASE("sensitivity_matrix: theta restored bit-exactly, 2K accuracy evaluations") {
  const auto f = testutil::trained_fixture(2);
  const SpikeBasis basis = fixture_basis(f, 3, 11);
  const ParamVector snapshot = f.theta;

  split_audit::reset();
  const SensitivityMatrix s =
      sensitivity_matrix(f.spec, f.theta, basis, 0.05, f.data, Split::sensitivity);
  CHECK(split_audit::accuracy_eval_count(Split::sensitivity) == 2 * 3);
  CHECK(split_audit::accuracy_eval_count(Split::heldout) == 0);
  for (std::size_t i = 0; i < snapshot.size(); ++i) {
    CHECK(std::bit_cast<std::uint64_t>(snapshot[i]) ==
          std::bit_cast<std::uint64_t>(f.theta[i]));
  }
  CHECK(s.spikes() == 3);
  CHECK(s.classes() == 4);
  CHECK(s.probe_amplitude == 0.05);
}

TEST_CASE("sensitivity_matrix: consistent across amplitudes within quantization noise") {
  const auto f = testutil::trained_fixture(3);
  const SpikeBasis basis = fixture_basis(f, 2, 13);
  const double eps = 0.05;
  const SensitivityMatrix s1 =
      sensitivity_matrix(f.spec, f.theta, basis, eps, f.data, Split::sensitivity);
  const SensitivityMatrix s2 =
      sensitivity_matrix(f.spec, f.theta, basis, 2.0 * eps, f.data, Split::sensitivity);
  // Entries live on a 1/(2 eps n_j) lattice; with both probes inside the
  // near-linear regime the difference stays within a few quanta of the
  // coarser (smaller-eps) measurement.
  const auto counts = f.data.class_counts(Split::sensitivity);
  for (int i = 0; i < s1.spikes(); ++i) {
    for (int j = 0; j < s1.classes(); ++j) {
      const double quantum = 1.0 / (2.0 * eps * counts[static_cast<std::size_t>(j)]);
      CHECK(std::abs(s1.s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                     s2.s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) <=
            6.0 * quantum);
    }
  }
}

TEST_CASE("sensitivity_matrix: weakest class carries the largest dominant-spike entry") {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto f = testutil::trained_fixture(seed);
    const SpikeBasis basis = fixture_basis(f, 3, 100 + seed);
    const SensitivityMatrix s =
        sensitivity_matrix(f.spec, f.theta, basis, 0.06, f.data, Split::sensitivity);
    const ClassAccuracy acc = per_class_accuracy(f.spec, f.theta, f.data, Split::sensitivity);
    int weakest = 0;
    for (int c = 1; c < 4; ++c) {
      if (acc.per_class[static_cast<std::size_t>(c)] < acc.per_class[static_cast<std::size_t>(weakest)]) {
        weakest = c;
      }
    }
    int largest = 0;
    for (int c = 1; c < 4; ++c) {
      if (std::abs(s.s[0][static_cast<std::size_t>(c)]) > std::abs(s.s[0][static_cast<std::size_t>(largest)])) {
        largest = c;
      }
    }
    if (largest == weakest) ++hits;
  }
  CHECK(hits >= 3);  // direction-of-effect majority over 5 seeds
}

TEST_CASE("sensitivity_matrix: sign flip of a basis vector negates its row exactly") {
  const auto f = testutil::trained_fixture(4);
  SpikeBasis basis = fixture_basis(f, 2, 17);
  const SensitivityMatrix s1 =
      sensitivity_matrix(f.spec, f.theta, basis, 0.06, f.data, Split::sensitivity);
  scale(basis.vectors[0], -1.0);
  const SensitivityMatrix s2 =
      sensitivity_matrix(f.spec, f.theta, basis, 0.06, f.data, Split::sensitivity);
  for (int j = 0; j < s1.classes(); ++j) {
    CHECK(s2.s[0][static_cast<std::size_t>(j)] == -s1.s[0][static_cast<std::size_t>(j)]);
    CHECK(s2.s[1][static_cast<std::size_t>(j)] == s1.s[1][static_cast<std::size_t>(j)]);
  }
}

TEST_CASE("sensitivity_matrix: scale identity (eps/c, c q) with power-of-two c") {
  const auto f = testutil::trained_fixture(4);
  SpikeBasis basis = fixture_basis(f, 1, 19);
  const double eps = 0.08;
  const SensitivityMatrix s1 =
      sensitivity_matrix(f.spec, f.theta, basis, eps, f.data, Split::sensitivity);
  // Replace (eps, q) by (eps/2, 2q): the perturbations theta +- eps q are
  // bit-identical, so S matches exactly up to the 1/(2 eps) outer factor.
  scale(basis.vectors[0], 2.0);
  const SensitivityMatrix s2 =
      sensitivity_matrix(f.spec, f.theta, basis, eps / 2.0, f.data, Split::sensitivity);
  for (int j = 0; j < s1.classes(); ++j) {
    CHECK(s2.s[0][static_cast<std::size_t>(j)] == 2.0 * s1.s[0][static_cast<std::size_t>(j)]);
  }
}

TEST_CASE("sensitivity_matrix: class absent from the split aborts") {
  auto f = testutil::trained_fixture(5);
  const SpikeBasis basis = fixture_basis(f, 1, 23);
  // Drop every class-3 sample from the sensitivity split.
  std::vector<int> filtered;
  for (int i : f.data.sensitivity_idx) {
    if (f.data.labels[static_cast<std::size_t>(i)] != 3) filtered.push_back(i);
  }
  f.data.sensitivity_idx = filtered;
  CHECK_THROWS_AS(
      sensitivity_matrix(f.spec, f.theta, basis, 0.05, f.data, Split::sensitivity),
      std::invalid_argument);
}

TEST_CASE("effective_rank: uniform and rank-one spectra") {
  {
    const RankDiagnostics diag = effective_rank_from_singular_values({2.0, 2.0, 2.0, 2.0});
    CHECK(std::abs(diag.effective_rank - 4.0) <= 1e-10);
    CHECK(diag.flatness == 1.0);
  }
  {
    const RankDiagnostics diag = effective_rank_from_singular_values({3.0, 0.0, 0.0});
    CHECK(std::abs(diag.effective_rank - 1.0) <= 1e-10);
  }
  {
    SensitivityMatrix s;
    s.s = {{1.0, 2.0}, {2.0, 4.0}};  // rank one
    const RankDiagnostics diag = effective_rank(s);
    CHECK(std::abs(diag.effective_rank - 1.0) <= 1e-10);
  }
}

TEST_CASE("effective_rank: reference singular spectra") {
  {
    const RankDiagnostics diag =
        effective_rank_from_singular_values({6.41, 5.22, 3.99});
    CHECK(std::abs(diag.flatness - 6.41 / 5.22) <= 1e-12);
    CHECK(std::abs(diag.flatness - 1.23) <= 0.005);
  }
  {
    const RankDiagnostics diag = effective_rank_from_singular_values({17.4, 9.4, 3.8});
    CHECK(std::abs(diag.flatness - 17.4 / 9.4) <= 1e-12);
    CHECK(std::abs(diag.flatness - 1.86) <= 0.01);
    // Top-two energy share of the three listed values.
    CHECK(std::abs(diag.energy[0] + diag.energy[1] - 0.964) <= 5e-4);
  }
}

TEST_CASE("effective_rank: scale invariance and entropy bound") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(6));
    std::vector<double> sigma(static_cast<std::size_t>(k));
    for (auto& v : sigma) v = std::abs(rng.gaussian()) + 1e-6;
    const RankDiagnostics base = effective_rank_from_singular_values(sigma);
    CHECK(base.effective_rank >= 1.0 - 1e-12);
    CHECK(base.effective_rank <= k + 1e-12);
    double energy_sum = 0.0;
    for (double p : base.energy) energy_sum += p;
    CHECK(std::abs(energy_sum - 1.0) <= 1e-12);

    std::vector<double> scaled = sigma;
    for (auto& v : scaled) v *= 37.5;
    const RankDiagnostics other = effective_rank_from_singular_values(scaled);
    CHECK(std::abs(base.effective_rank - other.effective_rank) <= 1e-9);
  }
  CHECK_THROWS_AS(effective_rank_from_singular_values({0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("stratified_split: balanced data with a large cap returns the whole train split") {
  const Dataset ds = make_blob_fixture(fixture_preset("balanced-4", 7));
  const auto idx = stratified_split(ds, 100000, 3);
  CHECK(idx == ds.train_idx);
}

TEST_CASE("stratified_split: cap at the minority count equalizes classes") {
  const Dataset ds = make_blob_fixture(fixture_preset("imbalanced-4", 8));
  const auto counts = ds.class_counts(Split::train);
  const int cap = *std::min_element(counts.begin(), counts.end());
  const auto idx = stratified_split(ds, cap, 5);
  std::vector<int> got(4, 0);
  for (int i : idx) got[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])]++;
  for (int c = 0; c < 4; ++c) CHECK(got[static_cast<std::size_t>(c)] == cap);
}

TEST_CASE("stratified_split: cap 250 takes min(cap, available) per class") {
  BlobFixtureSpec spec = fixture_preset("imbalanced-4", 9);
  spec.total_samples = 3000;  // minority train count falls below the cap
  const Dataset ds = make_blob_fixture(spec);
  const auto counts = ds.class_counts(Split::train);
  const auto idx = stratified_split(ds, 250, 7);
  std::vector<int> got(4, 0);
  for (int i : idx) got[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])]++;
  for (int c = 0; c < 4; ++c) {
    CHECK(got[static_cast<std::size_t>(c)] ==
          std::min(250, counts[static_cast<std::size_t>(c)]));
  }
  // Deterministic given the seed.
  CHECK(stratified_split(ds, 250, 7) == idx);
}
