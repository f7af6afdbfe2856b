#pragma once

#include <vector>

#include "hesskit/sensitivity.hpp"
#include "hesskit/weights.hpp"

namespace hesskit {

enum class BudgetMode { global_l2, per_spike_box };

struct BudgetConfig {
  BudgetMode mode = BudgetMode::global_l2;
  double alpha_max = 0.02;
  std::vector<double> eigenvalues;  // box mode: per-spike curvatures
};

struct PerSpikeBounds {
  std::vector<double> bounds;       // alpha_max * sqrt(lambda_min / lambda_i)
  std::vector<bool> excluded;       // non-positive eigenvalues, bound forced to 0
  bool any_excluded = false;
};

/// Box half-widths equalizing the second-order cost alpha_i^2 lambda_i across
/// spikes. Non-positive eigenvalues are excluded with a warning flag.
PerSpikeBounds per_spike_bounds(const std::vector<double>& eigenvalues, double alpha_max);

struct SolveResult {
  std::vector<double> alpha;
  double objective = 0.0;
  bool infeasible = false;  // protection constraints unsatisfiable: alpha = 0

  /// Exact post-hoc feasibility check (budget and every protection row).
  bool feasible_exact(const BudgetConfig& budget,
                      const std::vector<std::vector<double>>& protect_rows,
                      double protect_floor) const;
};

/// Maximizes (S w)^t alpha over the budget set intersected with the
/// no-degradation half-spaces (S^t alpha)_j >= protect_floor for every class j
/// with accuracy above protect_threshold. Linear objective over a convex set,
/// solved by constant-step projected gradient with Dykstra projections and a
/// final exact-feasibility pull toward the origin.
SolveResult solve_coefficients(const SensitivityMatrix& s,
                               const std::vector<double>& accuracies,
                               const std::vector<double>& weights,
                               const BudgetConfig& budget, const WeightConfig& protect,
                               int iterations = 1000);

}  // namespace hesskit
