#include "hesskit/amplitude.hpp"

#include <cmath>
#include <stdexcept>

namespace hesskit {

AmplitudeController::AmplitudeController(int total_iterations, double alpha_min,
                                         double alpha_max0)
    : AmplitudeController(std::max(0.0, 1.0 - 4.0 / std::max(total_iterations, 1)),
                          std::max(0.0, 1.0 - 1.0 / std::max(total_iterations, 1)),
                          alpha_min, alpha_max0) {}

AmplitudeController::AmplitudeController(double beta1, double beta2, double alpha_min,
                                         double alpha_max0)
    : beta1_(beta1), beta2_(beta2), alpha_min_(alpha_min), alpha_max0_(alpha_max0),
      current_(alpha_max0) {
  if (!(alpha_max0 >= alpha_min) || !(alpha_min >= 0.0)) {
    throw std::invalid_argument("AmplitudeController: need 0 <= alpha_min <= alpha_max0");
  }
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw std::invalid_argument("AmplitudeController: betas must lie in [0, 1)");
  }
}

double AmplitudeController::update(double g) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * g;
  v_ = beta2_ * v_ + (1.0 - beta2_) * g * g;
  const double m_hat = m_ / (1.0 - std::pow(beta1_, t_));
  const double v_hat = v_ / (1.0 - std::pow(beta2_, t_));
  snr_ = m_hat / (std::sqrt(v_hat) + kSnrEpsilon);
  current_ = alpha_min_ + 0.5 * (1.0 + std::tanh(5.0 * snr_)) * (alpha_max0_ - alpha_min_);
  return current_;
}

void AmplitudeController::restore(double m, double v, int t, double current_alpha) {
  m_ = m;
  v_ = v;
  t_ = t;
  current_ = current_alpha;
}

}  // namespace hesskit
