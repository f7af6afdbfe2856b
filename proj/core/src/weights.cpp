#include "hesskit/weights.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hesskit {

ClassWeights class_weights(const std::vector<double>& accuracies, const WeightConfig& config) {
  if (accuracies.empty()) throw std::invalid_argument("class_weights: no classes");
  if (config.p_exponent < 0.0) throw std::invalid_argument("class_weights: p must be >= 0");
  const auto c = accuracies.size();
  ClassWeights out;
  out.w.assign(c, 1.0 / static_cast<double>(c));
  if (config.p_exponent == 0.0) return out;

  std::vector<double> powered(c);
  double total = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    const double e = 1.0 - accuracies[j];
    powered[j] = std::pow(std::max(e, 0.0), config.p_exponent);
    total += powered[j];
  }
  if (total == 0.0) {
    out.all_perfect = true;  // uniform weights already in place
    return out;
  }
  for (std::size_t j = 0; j < c; ++j) out.w[j] = powered[j] / total;
  return out;
}

RecommendedExponent recommend_p(const std::vector<double>& accuracies, WeightTarget target) {
  RecommendedExponent out;
  double e_min = 0.0, e_max = 0.0;
  int nonzero = 0;
  for (double a : accuracies) {
    const double e = 1.0 - a;
    if (e <= 0.0) continue;
    if (nonzero == 0) {
      e_min = e_max = e;
    } else {
      e_min = std::min(e_min, e);
      e_max = std::max(e_max, e);
    }
    ++nonzero;
  }
  if (nonzero < 2) {
    out.p = 1.0;
    out.defaulted = true;
    return out;
  }
  out.error_ratio = e_max / e_min;
  const bool severe = out.error_ratio >= 5.0;
  if (target == WeightTarget::min_sigma) {
    out.p = severe ? 0.5 : 2.0;
  } else {
    out.p = severe ? 0.0 : 1.0;
  }
  return out;
}

}  // namespace hesskit
