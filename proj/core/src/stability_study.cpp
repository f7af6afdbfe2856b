#include "hesskit/stability_study.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "hesskit/oracle.hpp"
#include "hesskit/rng.hpp"

namespace hesskit {

namespace {

/// Median per-apply time, repeating until each measurement spans >= 20 ms so
/// tiny models do not drown in timer noise.
double time_hvp_seconds(const HvpOracle& oracle, const ParamVector& probe) {
  using clock = std::chrono::steady_clock;
  std::vector<double> samples;
  for (int rep = 0; rep < 3; ++rep) {
    int applies = 1;
    for (;;) {
      const auto start = clock::now();
      for (int i = 0; i < applies; ++i) {
        volatile double sink = oracle.apply(probe)[0];
        (void)sink;
      }
      const double elapsed = std::chrono::duration<double>(clock::now() - start).count();
      if (elapsed >= 0.02) {
        samples.push_back(elapsed / applies);
        break;
      }
      applies *= 4;
    }
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

}  // namespace

StabilityStudy stability_study(const MlpSpec& spec, const ParamVector& theta,
                               const Dataset& data, const StabilityStudyConfig& config) {
  if (config.batch_sizes.empty()) throw std::invalid_argument("stability_study: no batch sizes");
  for (std::size_t i = 0; i + 1 < config.batch_sizes.size(); ++i) {
    if (config.batch_sizes[i] >= config.batch_sizes[i + 1]) {
      throw std::invalid_argument("stability_study: batch sizes must be increasing");
    }
  }

  const int n_max = config.batch_sizes.back();
  const auto master = uniform_batch_indices(data, Split::train, n_max, config.batch_seed);
  if (static_cast<int>(master.size()) < n_max) {
    throw std::invalid_argument("stability_study: train split smaller than largest batch");
  }
  const ParamVector q1 = lanczos_start_vector(theta.size(), config.lanczos_seed);
  const int top_k = config.top_k > 0 ? config.top_k : config.lanczos_m;

  struct Entry {
    int n;
    SpikeBasis basis;
    double hvp_s;
    double lanczos_s;
  };
  std::vector<Entry> entries;
  for (int n : config.batch_sizes) {
    std::vector<int> prefix(master.begin(), master.begin() + n);
    const HvpOracle oracle = model_oracle(spec, theta, Batch::gather(data, prefix));
    const double hvp_s = time_hvp_seconds(oracle, q1);
    const auto start = std::chrono::steady_clock::now();
    const LanczosResult lz = lanczos(oracle, q1, config.lanczos_m, 1e-10);
    const double lanczos_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const int take = std::min<int>(top_k, static_cast<int>(lz.t.order()));
    entries.push_back({n, ritz(lz, take), hvp_s, lanczos_s});
  }

  StabilityStudy study;
  study.reference_n = n_max;
  const SpikeBasis& reference = entries.back().basis;
  for (const auto& entry : entries) {
    StabilityRow row;
    row.n = entry.n;
    row.eigenvalues = entry.basis.eigenvalues;
    std::vector<int> ks;
    const int limit = static_cast<int>(std::min(entry.basis.size(), reference.size()));
    for (int k : config.ks) {
      if (k <= limit) ks.push_back(k);
    }
    row.vs_reference = subspace_stability(entry.basis, reference, ks);
    row.hvp_seconds = entry.hvp_s;
    row.lanczos_seconds = entry.lanczos_s;
    study.rows.push_back(std::move(row));
  }
  return study;
}

}  // namespace hesskit
