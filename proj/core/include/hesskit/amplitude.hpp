#pragma once

namespace hesskit {

/// Adam-style perturbation budget controller. Moments of the improvement
/// signal g_t use beta_1 = 1 - 4/T and beta_2 = 1 - 1/T (EMA windows T/4 and
/// T); the bias-corrected signal-to-noise ratio drives
///   alpha = alpha_min + (1 + tanh(5 SNR)) / 2 * (alpha_max0 - alpha_min),
/// so the emitted amplitude always stays inside [alpha_min, alpha_max0] and
/// is monotone in the SNR.
class AmplitudeController {
public:
  AmplitudeController(int total_iterations, double alpha_min, double alpha_max0);
  /// Custom betas (the multiplicative-decay limit uses beta -> 0).
  AmplitudeController(double beta1, double beta2, double alpha_min, double alpha_max0);

  /// Feeds one improvement signal and returns the new amplitude.
  double update(double g);

  double current() const { return current_; }
  double last_snr() const { return snr_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  int iteration() const { return t_; }

  double moment_m() const { return m_; }
  double moment_v() const { return v_; }
  /// Resume support: restores moments and the iteration counter.
  void restore(double m, double v, int t, double current_alpha);

private:
  double beta1_ = 0.0;
  double beta2_ = 0.0;
  double alpha_min_ = 0.0;
  double alpha_max0_ = 0.0;
  double m_ = 0.0;
  double v_ = 0.0;
  int t_ = 0;
  double snr_ = 0.0;
  double current_;

  static constexpr double kSnrEpsilon = 1e-8;
};

}  // namespace hesskit
