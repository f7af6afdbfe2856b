#pragma once

#include <functional>
#include <vector>

#include "hesskit/dataset.hpp"
#include "hesskit/lanczos.hpp"
#include "hesskit/sensitivity.hpp"
#include "hesskit/solver.hpp"
#include "hesskit/weights.hpp"

namespace hesskit {

struct SweepPoint {
  double alpha_max = 0.0;
  double alpha_norm = 0.0;      // ||alpha*||_2
  double predicted_norm = 0.0;  // ||S^t alpha*||_2 (definitional)
  double measured_norm = 0.0;
  double error_norm = 0.0;      // ||predicted - measured||_2
};

struct AdditiveFit {
  double c = 0.0;  // constant floor
  double b = 0.0;  // linear-term coefficient
  double d = 0.0;  // exponent
  double r2 = 0.0;
  bool converged = false;
};

struct PowerLawFit {
  double coefficient = 0.0;
  double exponent = 0.0;
  double r2 = 0.0;
};

struct LinearizationSweepLog {
  std::vector<SweepPoint> points;
  AdditiveFit additive;   // error ~ c + b * ||alpha||^d
  PowerLawFit power_law;  // comparison fit on the same points
  double norm_correlation = 0.0;  // Pearson corr of predicted vs measured norms
};

/// Per grid point: solve under an L2 budget of that size, predict S^t alpha,
/// apply the perturbation, measure the per-class accuracy change, roll back.
/// S is computed once by the caller and reused across the sweep.
LinearizationSweepLog linearization_sweep(const MlpSpec& spec, const ParamVector& theta,
                                          const Dataset& data, const SpikeBasis& basis,
                                          const SensitivityMatrix& s,
                                          const std::vector<double>& alpha_grid,
                                          const WeightConfig& protect, Split eval_split);

/// Grid/measurement-agnostic core: `measure` maps a coefficient vector to the
/// observed per-class delta. Exposed so synthetic responders can drive it.
LinearizationSweepLog linearization_sweep_core(
    const SensitivityMatrix& s, const std::vector<double>& baseline_acc,
    const std::vector<double>& alpha_grid, const WeightConfig& protect,
    const std::function<std::vector<double>(const std::vector<double>&)>& measure);

/// 38-point logarithmic grid spanning [lo, hi].
std::vector<double> log_grid(double lo, double hi, int points = 38);

}  // namespace hesskit
