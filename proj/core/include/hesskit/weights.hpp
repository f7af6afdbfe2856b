#pragma once

#include <vector>

namespace hesskit {

struct WeightConfig {
  double p_exponent = 1.0;          // 0, 1/2, 1, 2 are the documented modes
  double protect_threshold = 0.85;  // classes above it get the no-degradation constraint
  double protect_floor = -0.01;     // minimum allowed predicted per-class change
};

struct ClassWeights {
  std::vector<double> w;  // non-negative, sums to 1
  bool all_perfect = false;
};

/// w_j = e_j^p / sum_k e_k^p with e_j = 1 - a_j; p = 0 gives uniform weights
/// even when some errors vanish (0^0 := 1). When every class is perfect and
/// p > 0, uniform weights come back with the perfection flag set.
ClassWeights class_weights(const std::vector<double>& accuracies, const WeightConfig& config);

enum class WeightTarget { min_sigma, max_worst };

struct RecommendedExponent {
  double p = 1.0;
  double error_ratio = 0.0;
  bool defaulted = false;  // fewer than two nonzero errors
};

/// Error-ratio rule: e_max/e_min < 5 -> (min_sigma: 2, max_worst: 1);
/// >= 5 -> (min_sigma: 1/2, max_worst: 0). Ratio uses nonzero errors only.
RecommendedExponent recommend_p(const std::vector<double>& accuracies, WeightTarget target);

}  // namespace hesskit
