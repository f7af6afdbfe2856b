#pragma once

#include <cstdint>
#include <vector>

#include "hesskit/dataset.hpp"
#include "hesskit/mlp.hpp"
#include "hesskit/stability.hpp"

namespace hesskit {

struct StabilityStudyConfig {
  std::vector<int> batch_sizes{64, 128, 256, 512};  // nested prefixes of one master batch
  std::vector<int> ks{3};
  int lanczos_m = 10;
  int top_k = 0;  // Ritz pairs compared; 0 -> lanczos_m
  std::uint64_t batch_seed = 3;
  std::uint64_t lanczos_seed = 5;  // fixed start vector across batch sizes
};

struct StabilityRow {
  int n = 0;
  std::vector<double> eigenvalues;
  StabilityReport vs_reference;  // largest n is the reference
  double hvp_seconds = 0.0;
  double lanczos_seconds = 0.0;
};

struct StabilityStudy {
  std::vector<StabilityRow> rows;  // ascending n; last row is the reference
  int reference_n = 0;
};

/// Nested-batch eigenstructure study: same Lanczos start vector, mini-batches
/// that are prefixes of one seeded master batch, cosine/angle comparisons
/// against the largest batch, and per-HVP / per-Lanczos timings.
StabilityStudy stability_study(const MlpSpec& spec, const ParamVector& theta,
                               const Dataset& data, const StabilityStudyConfig& config);

}  // namespace hesskit
