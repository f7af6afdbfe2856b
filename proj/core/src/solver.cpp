#include "hesskit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hesskit {

PerSpikeBounds per_spike_bounds(const std::vector<double>& eigenvalues, double alpha_max) {
  if (eigenvalues.empty()) throw std::invalid_argument("per_spike_bounds: no eigenvalues");
  if (!(alpha_max > 0.0)) throw std::invalid_argument("per_spike_bounds: alpha_max must be > 0");
  PerSpikeBounds out;
  out.bounds.assign(eigenvalues.size(), 0.0);
  out.excluded.assign(eigenvalues.size(), false);
  double lambda_min = 0.0;
  bool have_positive = false;
  for (double l : eigenvalues) {
    if (l > 0.0) {
      lambda_min = have_positive ? std::min(lambda_min, l) : l;
      have_positive = true;
    }
  }
  if (!have_positive) throw std::invalid_argument("per_spike_bounds: no positive eigenvalues");
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues[i] > 0.0) {
      out.bounds[i] = alpha_max * std::sqrt(lambda_min / eigenvalues[i]);
    } else {
      out.excluded[i] = true;
      out.any_excluded = true;
    }
  }
  return out;
}

namespace {

struct Feasible {
  BudgetMode mode;
  double radius = 0.0;                       // global_l2
  std::vector<double> box;                   // per_spike_box half-widths
  std::vector<std::vector<double>> rows;     // protection rows of S^t (one per protected class)
  double floor = 0.0;

  std::size_t dim() const { return mode == BudgetMode::global_l2 ? 0 : box.size(); }

  void project_budget(std::vector<double>& x) const {
    if (mode == BudgetMode::global_l2) {
      double n2 = 0.0;
      for (double v : x) n2 += v * v;
      const double n = std::sqrt(n2);
      if (n > radius && n > 0.0) {
        const double f = radius / n;
        for (auto& v : x) v *= f;
      }
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::clamp(x[i], -box[i], box[i]);
      }
    }
  }

  static void project_halfspace(std::vector<double>& x, const std::vector<double>& row,
                                double floor) {
    double val = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      val += row[i] * x[i];
      n2 += row[i] * row[i];
    }
    if (val >= floor || n2 == 0.0) return;
    const double shift = (floor - val) / n2;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += shift * row[i];
  }

  bool satisfied(const std::vector<double>& x) const {
    if (mode == BudgetMode::global_l2) {
      double n2 = 0.0;
      for (double v : x) n2 += v * v;
      if (std::sqrt(n2) > radius) return false;
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i]) > box[i]) return false;
      }
    }
    for (const auto& row : rows) {
      double val = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) val += row[i] * x[i];
      if (val < floor) return false;
    }
    return true;
  }

  /// Dykstra's alternating projection onto the intersection.
  void project(std::vector<double>& x, int max_cycles = 300) const {
    const std::size_t n_sets = 1 + rows.size();
    const std::size_t k = x.size();
    std::vector<std::vector<double>> increments(n_sets, std::vector<double>(k, 0.0));
    std::vector<double> prev(k);
    for (int cycle = 0; cycle < max_cycles; ++cycle) {
      prev = x;
      for (std::size_t s = 0; s < n_sets; ++s) {
        auto& inc = increments[s];
        for (std::size_t i = 0; i < k; ++i) x[i] += inc[i];
        const std::vector<double> before = x;
        if (s == 0) project_budget(x);
        else project_halfspace(x, rows[s - 1], floor);
        for (std::size_t i = 0; i < k; ++i) inc[i] = before[i] - x[i];
      }
      double change = 0.0;
      for (std::size_t i = 0; i < k; ++i) change = std::max(change, std::abs(x[i] - prev[i]));
      if (change < 1e-15) break;
    }
  }

  /// Shrinks x toward the origin until every constraint holds exactly. Works
  /// whenever 0 is feasible (floor <= 0); returns false otherwise.
  bool pull_to_exact(std::vector<double>& x) const {
    for (int round = 0; round < 64; ++round) {
      if (satisfied(x)) return true;
      double t = 1.0;
      if (mode == BudgetMode::global_l2) {
        double n2 = 0.0;
        for (double v : x) n2 += v * v;
        const double n = std::sqrt(n2);
        if (n > radius && n > 0.0) t = std::min(t, radius / n);
      } else {
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (std::abs(x[i]) > box[i]) {
            t = std::min(t, box[i] / std::abs(x[i]));
          }
        }
      }
      for (const auto& row : rows) {
        double val = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) val += row[i] * x[i];
        if (val < floor) {
          if (floor > 0.0) return false;  // shrinking cannot help
          if (val < 0.0) t = std::min(t, floor / val);
        }
      }
      const double shrink = std::min(t, 1.0) * (1.0 - 4.0 * std::numeric_limits<double>::epsilon());
      for (auto& v : x) v *= shrink;
    }
    return satisfied(x);
  }
};

}  // namespace

bool SolveResult::feasible_exact(const BudgetConfig& budget,
                                 const std::vector<std::vector<double>>& protect_rows,
                                 double protect_floor) const {
  Feasible fs;
  fs.mode = budget.mode;
  fs.radius = budget.alpha_max;
  if (budget.mode == BudgetMode::per_spike_box) {
    fs.box = per_spike_bounds(budget.eigenvalues, budget.alpha_max).bounds;
  }
  fs.rows = protect_rows;
  fs.floor = protect_floor;
  return fs.satisfied(alpha);
}

SolveResult solve_coefficients(const SensitivityMatrix& s,
                               const std::vector<double>& accuracies,
                               const std::vector<double>& weights,
                               const BudgetConfig& budget, const WeightConfig& protect,
                               int iterations) {
  const int k = s.spikes();
  const int c = s.classes();
  if (static_cast<int>(accuracies.size()) != c) {
    throw std::invalid_argument("solve_coefficients: accuracy size mismatch");
  }
  if (!(budget.alpha_max > 0.0)) throw std::invalid_argument("solve_coefficients: bad budget");

  const std::vector<double> objective = s.weighted_objective(weights);

  Feasible fs;
  fs.mode = budget.mode;
  fs.radius = budget.alpha_max;
  if (budget.mode == BudgetMode::per_spike_box) {
    if (static_cast<int>(budget.eigenvalues.size()) != k) {
      throw std::invalid_argument("solve_coefficients: box mode needs K eigenvalues");
    }
    fs.box = per_spike_bounds(budget.eigenvalues, budget.alpha_max).bounds;
  }
  fs.floor = protect.protect_floor;
  for (int j = 0; j < c; ++j) {
    if (accuracies[static_cast<std::size_t>(j)] > protect.protect_threshold) {
      std::vector<double> row(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) row[static_cast<std::size_t>(i)] = s.s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      fs.rows.push_back(std::move(row));
    }
  }

  SolveResult result;
  result.alpha.assign(static_cast<std::size_t>(k), 0.0);

  double c_norm = 0.0;
  for (double v : objective) c_norm += v * v;
  c_norm = std::sqrt(c_norm);
  if (c_norm == 0.0) {
    // Zero objective; alpha = 0 is optimal. Still flag infeasibility when
    // even the origin violates a positive floor.
    result.infeasible = !fs.satisfied(result.alpha);
    return result;
  }

  const double scale = budget.mode == BudgetMode::global_l2
                           ? budget.alpha_max
                           : *std::max_element(fs.box.begin(), fs.box.end());
  const double base_step = scale / c_norm;

  // Multi-scale projected ascent; every candidate is pulled to exact
  // feasibility before it competes for the best objective.
  std::vector<double> x(static_cast<std::size_t>(k), 0.0);
  std::vector<double> best = x;
  double best_obj = 0.0;
  bool have_feasible = fs.satisfied(best);
  const double step_scales[] = {200.0, 50.0, 10.0, 2.0, 0.5, 0.1, 0.02};
  const int per_stage = std::max(1, iterations / 7);
  for (double mult : step_scales) {
    const double step = mult * base_step;
    for (int it = 0; it < per_stage; ++it) {
      for (int i = 0; i < k; ++i) x[static_cast<std::size_t>(i)] += step * objective[static_cast<std::size_t>(i)];
      fs.project(x);
      std::vector<double> candidate = x;
      if (!fs.pull_to_exact(candidate)) continue;
      double obj = 0.0;
      for (int i = 0; i < k; ++i) obj += objective[static_cast<std::size_t>(i)] * candidate[static_cast<std::size_t>(i)];
      if (!have_feasible || obj > best_obj) {
        best = candidate;
        best_obj = obj;
        have_feasible = true;
      }
    }
  }

  if (!have_feasible) {
    result.alpha.assign(static_cast<std::size_t>(k), 0.0);
    result.infeasible = true;
    return result;
  }
  result.alpha = best;
  result.objective = 0.0;
  for (int i = 0; i < k; ++i) result.objective += objective[static_cast<std::size_t>(i)] * result.alpha[static_cast<std::size_t>(i)];
  return result;
}

}  // namespace hesskit
