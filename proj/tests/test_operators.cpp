#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "hesskit/dense.hpp"
#include "hesskit/lanczos.hpp"
#include "hesskit/mlp.hpp"
#include "hesskit/oracle.hpp"
#include "hesskit/rng.hpp"
#include "test_util.hpp"

using namespace hesskit;

namespace {

void check_linear_and_symmetric(const HvpOracle& oracle, std::uint64_t seed,
                                int pairs = 20, double tol = 1e-9) {
  Rng rng(seed);
  for (int trial = 0; trial < pairs; ++trial) {
    const ParamVector u = rng.gaussian_vector(oracle.dim);
    const ParamVector v = rng.gaussian_vector(oracle.dim);
    const double a = rng.uniform(-2.0, 2.0);
    const double b = rng.uniform(-2.0, 2.0);

    ParamVector lin = u;
    scale(lin, a);
    axpy(b, v, lin);
    const ParamVector left = oracle.apply(lin);
    ParamVector right = oracle.apply(u);
    scale(right, a);
    axpy(b, oracle.apply(v), right);
    CHECK(norm(sub(left, right)) <= tol * std::max(1.0, norm(left)));

    const double uhv = dot(u, oracle.apply(v));
    const double vhu = dot(v, oracle.apply(u));
    CHECK(std::abs(uhv - vhu) <= tol * std::max({std::abs(uhv), std::abs(vhu), 1e-12}));
  }
}

}  // namespace

TEST_CASE("dense_oracle: identity and diagonal cases") {
  {
    const HvpOracle oracle = dense_oracle(Eigen::MatrixXd::Identity(5, 5));
    Rng rng(1);
    const ParamVector v = rng.gaussian_vector(5);
    CHECK(norm(sub(oracle.apply(v), v)) == 0.0);
  }
  {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    const HvpOracle oracle = dense_oracle(d);
    const ParamVector out = oracle.apply(ParamVector(std::vector<double>{1.0, 1.0}));
    CHECK(out[0] == 3.0);
    CHECK(out[1] == 1.0);
  }
}

TEST_CASE("dense_oracle: rejects asymmetry beyond tolerance") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(dense_oracle(m), std::invalid_argument);
}

TEST_CASE("dense_oracle: spectrum matches Lanczos top-5 on random symmetric 100x100") {
  Rng rng(5);
  Eigen::MatrixXd m(100, 100);
  for (int i = 0; i < 100; ++i) {
    for (int j = i; j < 100; ++j) {
      m(i, j) = rng.gaussian();
      m(j, i) = m(i, j);
    }
  }
  const HvpOracle oracle = dense_oracle(m);
  const DenseEigh exact = dense_eigh(m);
  const LanczosResult lz = lanczos(oracle, lanczos_start_vector(100, 3), 100);
  const SpikeBasis basis = ritz(lz, 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(basis.eigenvalues[static_cast<std::size_t>(i)] - exact.eigenvalues(i)) <=
          1e-8 * std::abs(exact.eigenvalues(0)));
  }
}

TEST_CASE("spiked_oracle: planted spectrum is exact") {
  SpikedOperatorSpec spec;
  spec.dim = 120;
  spec.spike_values = {828.6, 577.8, 310.7, 243.5, 153.2, 112.5, 58.9, 20.5};
  spec.bulk_scale = 0.03;
  spec.seed = 7;
  const SpikedOperator op = spiked_oracle(spec);

  // Anisotropy between the top spike and the bulk median spans 4-5 decades.
  const double anisotropy = spec.spike_values.front() / op.bulk_median;
  CHECK(anisotropy >= 1e4);
  CHECK(anisotropy <= 1e6);

  // Dense expansion reproduces the planted spectrum exactly.
  const Eigen::MatrixXd dense = densify(op.oracle);
  const DenseEigh eigh = dense_eigh(dense);
  for (std::size_t i = 0; i < op.spectrum.size(); ++i) {
    CHECK(std::abs(eigh.eigenvalues(static_cast<Eigen::Index>(i)) - op.spectrum[i]) <=
          1e-10 * std::max(1.0, std::abs(op.spectrum[i])));
  }
}

TEST_CASE("spiked_oracle: no spikes means spectrum inside clamp to bulk scale") {
  SpikedOperatorSpec spec;
  spec.dim = 40;
  spec.spike_values = {};
  spec.bulk_scale = 0.5;
  spec.seed = 9;
  const SpikedOperator op = spiked_oracle(spec);
  for (double lambda : op.spectrum) {
    CHECK(lambda >= 0.0);
    CHECK(lambda <= 0.5);
  }
  check_linear_and_symmetric(op.oracle, 31);
}

TEST_CASE("model_oracle: symmetry and linearity by sampling") {
  const auto f = testutil::trained_fixture(1);
  const auto idx = uniform_batch_indices(f.data, Split::train, 64, 3);
  const HvpOracle oracle = model_oracle(f.spec, f.theta, Batch::gather(f.data, idx));
  check_linear_and_symmetric(oracle, 17, 20);
}

TEST_CASE("model_oracle: a duplicated single sample equals the single sample") {
  const auto ds = make_blob_fixture(fixture_preset("balanced-4", 3));
  MlpSpec spec = testutil::fixture_model(ds, 12);
  Rng rng(5);
  const ParamVector theta = rng.gaussian_vector(static_cast<std::size_t>(spec.param_count()));

  Batch single = Batch::gather(ds, {ds.train_idx.front()});
  Batch repeated = single;
  for (int copy = 0; copy < 4; ++copy) {
    repeated.x.insert(repeated.x.end(), single.x.begin(), single.x.end());
    repeated.y.push_back(single.y.front());
    repeated.n++;
  }
  const HvpOracle a = model_oracle(spec, theta, single);
  const HvpOracle b = model_oracle(spec, theta, repeated);
  const ParamVector v = rng.gaussian_vector(theta.size());
  CHECK(norm(sub(a.apply(v), b.apply(v))) <= 1e-12 * std::max(1.0, norm(a.apply(v))));
}

TEST_CASE("model_oracle: nested batches preserve top-k ordering qualitatively") {
  const auto f = testutil::trained_fixture(2);
  const auto master = uniform_batch_indices(f.data, Split::train, 512, 11);
  const ParamVector q1 = lanczos_start_vector(f.theta.size(), 13);
  std::vector<std::vector<double>> tables;
  for (int n : {64, 128, 256, 512}) {
    std::vector<int> prefix(master.begin(), master.begin() + n);
    const HvpOracle oracle = model_oracle(f.spec, f.theta, Batch::gather(f.data, prefix));
    const LanczosResult lz = lanczos(oracle, q1, 10);
    tables.push_back(ritz(lz, 4).eigenvalues);
  }
  // Eigenvalue magnitudes drift across batch sizes, but each table is sorted
  // and the dominant spike stays dominant by a clear factor.
  for (const auto& tbl : tables) {
    REQUIRE(tbl.size() == 4);
    CHECK(tbl[0] > tbl[1]);
    CHECK(tbl[0] > 2.0 * tbl[1]);
  }
}

TEST_CASE("deflate: removes the top eigenvector of a diagonal operator") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
  d.diagonal() << 5.0, 2.0, 1.0;
  const HvpOracle oracle = dense_oracle(d);
  ParamVector top(3);
  top[0] = 1.0;
  const HvpOracle deflated = deflate(oracle, {top});

  // Top eigenvalue of the deflated operator is 2.
  const LanczosResult lz = lanczos(deflated, lanczos_start_vector(3, 3), 3);
  const SpikeBasis basis = ritz(lz, 1);
  CHECK(basis.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-10));

  // Deflated directions map to zero.
  CHECK(norm(deflated.apply(top)) <= 1e-8);
}

TEST_CASE("deflate: empty basis leaves the oracle unchanged") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4) * 3.0;
  const HvpOracle oracle = dense_oracle(m);
  const HvpOracle same = deflate(oracle, {});
  Rng rng(7);
  const ParamVector v = rng.gaussian_vector(4);
  CHECK(norm(sub(same.apply(v), oracle.apply(v))) == 0.0);
}

TEST_CASE("deflate: rank-deficient basis aborts") {
  const HvpOracle oracle = dense_oracle(Eigen::MatrixXd::Identity(4, 4));
  ParamVector a(4), b(4);
  a[0] = 1.0;
  b[0] = 2.0;  // colinear with a
  CHECK_THROWS_AS(deflate(oracle, {a, b}), std::invalid_argument);
}

TEST_CASE("deflate: top-4 deflation exposes spikes 5-8 of a planted operator") {
  SpikedOperatorSpec spec;
  spec.dim = 200;
  spec.spike_values = {828.6, 577.8, 310.7, 243.5, 153.2, 112.5, 58.9, 20.5};
  spec.bulk_scale = 0.03;
  spec.seed = 21;
  const SpikedOperator op = spiked_oracle(spec);

  const LanczosResult first = lanczos(op.oracle, lanczos_start_vector(200, 23), 12);
  const SpikeBasis top4 = ritz(first, 4);
  const HvpOracle deflated = deflate(op.oracle, top4.vectors);

  const LanczosResult second = lanczos(deflated, lanczos_start_vector(200, 25), 12);
  const SpikeBasis next4 = ritz(second, 4);
  for (int i = 0; i < 4; ++i) {
    const double expected = spec.spike_values[static_cast<std::size_t>(4 + i)];
    CHECK(std::abs(next4.eigenvalues[static_cast<std::size_t>(i)] - expected) <=
          1e-6 * expected);
  }
  double cross = 0.0;
  for (const auto& q_new : next4.vectors) {
    for (const auto& q_old : top4.vectors) {
      cross = std::max(cross, std::abs(dot(q_new, q_old)));
    }
  }
  CHECK(cross < 1e-6);
}

TEST_CASE("deflate: composing disjoint deflations equals deflating the union") {
  Rng rng(27);
  Eigen::MatrixXd m(30, 30);
  for (int i = 0; i < 30; ++i) {
    for (int j = i; j < 30; ++j) {
      m(i, j) = rng.gaussian();
      m(j, i) = m(i, j);
    }
  }
  const HvpOracle oracle = dense_oracle(m);
  const DenseEigh eigh = dense_eigh(m);
  std::vector<ParamVector> first, second, all;
  for (int i = 0; i < 6; ++i) {
    ParamVector v(30);
    for (int r = 0; r < 30; ++r) v[static_cast<std::size_t>(r)] = eigh.eigenvectors(r, i);
    all.push_back(v);
    (i < 3 ? first : second).push_back(std::move(v));
  }
  const HvpOracle composed = deflate(deflate(oracle, first), second);
  const HvpOracle joint = deflate(oracle, all);
  for (int trial = 0; trial < 5; ++trial) {
    const ParamVector v = rng.gaussian_vector(30);
    CHECK(norm(sub(composed.apply(v), joint.apply(v))) <=
          1e-8 * std::max(1.0, norm(joint.apply(v))));
  }
}

TEST_CASE("batch helpers: stratified composition caps every class") {
  const auto ds = make_blob_fixture(fixture_preset("imbalanced-4", 4));
  const auto idx = stratified_batch_indices(ds, Split::train, 32, 17);
  std::vector<int> counts(4, 0);
  for (int i : idx) counts[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])]++;
  for (int c = 0; c < 4; ++c) CHECK(counts[static_cast<std::size_t>(c)] == 32);

  const auto uni = uniform_batch_indices(ds, Split::train, 256, 19);
  CHECK(uni.size() == 256);
}
