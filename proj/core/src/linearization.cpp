#include "hesskit/linearization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hesskit/weights.hpp"

namespace hesskit {

namespace {

double norm2(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// For fixed d the model c + b x^d is linear in (c, b): closed-form least
/// squares, clamped to the non-negative orthant via the boundary candidates.
void fit_cb_for_d(const std::vector<double>& x, const std::vector<double>& e, double d,
                  double* c_out, double* b_out, double* sse_out) {
  const std::size_t n = x.size();
  double s1 = static_cast<double>(n), sv = 0.0, svv = 0.0, se = 0.0, sev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::pow(x[i], d);
    sv += v;
    svv += v * v;
    se += e[i];
    sev += e[i] * v;
  }
  const auto sse_of = [&](double c, double b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = e[i] - c - b * std::pow(x[i], d);
      acc += r * r;
    }
    return acc;
  };
  double best_c = 0.0, best_b = 0.0, best_sse = std::numeric_limits<double>::infinity();
  const double det = s1 * svv - sv * sv;
  if (det != 0.0) {
    const double c = (se * svv - sev * sv) / det;
    const double b = (s1 * sev - sv * se) / det;
    if (c >= 0.0 && b >= 0.0) {
      best_c = c;
      best_b = b;
      best_sse = sse_of(c, b);
    }
  }
  if (svv > 0.0) {
    const double b = std::max(0.0, sev / svv);  // c = 0 boundary
    const double sse = sse_of(0.0, b);
    if (sse < best_sse) {
      best_c = 0.0;
      best_b = b;
      best_sse = sse;
    }
  }
  {
    const double c = std::max(0.0, se / s1);  // b = 0 boundary
    const double sse = sse_of(c, 0.0);
    if (sse < best_sse) {
      best_c = c;
      best_b = 0.0;
      best_sse = sse;
    }
  }
  *c_out = best_c;
  *b_out = best_b;
  *sse_out = best_sse;
}

AdditiveFit fit_additive(const std::vector<double>& x, const std::vector<double>& e) {
  AdditiveFit fit;
  std::vector<double> xs, es;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) {
      xs.push_back(x[i]);
      es.push_back(e[i]);
    }
  }
  if (xs.size() < 4) return fit;

  double mean_e = 0.0;
  for (double v : es) mean_e += v;
  mean_e /= static_cast<double>(es.size());
  double sstot = 0.0;
  for (double v : es) sstot += (v - mean_e) * (v - mean_e);

  // Coarse scan over the exponent, then golden-section refinement.
  double best_d = 1.0, best_sse = std::numeric_limits<double>::infinity();
  double c = 0.0, b = 0.0;
  for (double d = 0.2; d <= 3.0 + 1e-12; d += 0.05) {
    double cd, bd, sse;
    fit_cb_for_d(xs, es, d, &cd, &bd, &sse);
    if (sse < best_sse) {
      best_sse = sse;
      best_d = d;
      c = cd;
      b = bd;
    }
  }
  double lo = std::max(0.05, best_d - 0.05), hi = best_d + 0.05;
  const double phi = 0.6180339887498949;
  for (int it = 0; it < 60; ++it) {
    const double m1 = hi - phi * (hi - lo);
    const double m2 = lo + phi * (hi - lo);
    double c1, b1, s1, c2, b2, s2;
    fit_cb_for_d(xs, es, m1, &c1, &b1, &s1);
    fit_cb_for_d(xs, es, m2, &c2, &b2, &s2);
    if (s1 < s2) {
      hi = m2;
      if (s1 < best_sse) {
        best_sse = s1;
        best_d = m1;
        c = c1;
        b = b1;
      }
    } else {
      lo = m1;
      if (s2 < best_sse) {
        best_sse = s2;
        best_d = m2;
        c = c2;
        b = b2;
      }
    }
  }
  fit.c = c;
  fit.b = b;
  fit.d = best_d;
  fit.r2 = sstot > 0.0 ? 1.0 - best_sse / sstot : 1.0;
  fit.converged = true;
  return fit;
}

PowerLawFit fit_power_law(const std::vector<double>& x, const std::vector<double>& e) {
  PowerLawFit fit;
  std::vector<double> lx, le;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && e[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      le.push_back(std::log(e[i]));
    }
  }
  const std::size_t n = lx.size();
  if (n < 2) return fit;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += lx[i];
    sy += le[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * le[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return fit;
  fit.exponent = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - fit.exponent * sx) / n;
  fit.coefficient = std::exp(intercept);
  double mean = sy / n, sse = 0.0, sstot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pred = intercept + fit.exponent * lx[i];
    sse += (le[i] - pred) * (le[i] - pred);
    sstot += (le[i] - mean) * (le[i] - mean);
  }
  fit.r2 = sstot > 0.0 ? 1.0 - sse / sstot : 1.0;
  return fit;
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) {
    throw std::invalid_argument("log_grid: need 0 < lo < hi and points >= 2");
  }
  std::vector<double> out(static_cast<std::size_t>(points));
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < points; ++i) {
    out[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (points - 1));
  }
  return out;
}

LinearizationSweepLog linearization_sweep_core(
    const SensitivityMatrix& s, const std::vector<double>& baseline_acc,
    const std::vector<double>& alpha_grid, const WeightConfig& protect,
    const std::function<std::vector<double>(const std::vector<double>&)>& measure) {
  LinearizationSweepLog log;
  const ClassWeights w = class_weights(baseline_acc, protect);

  for (double amax : alpha_grid) {
    SweepPoint point;
    point.alpha_max = amax;
    std::vector<double> alpha(static_cast<std::size_t>(s.spikes()), 0.0);
    if (amax > 0.0) {
      BudgetConfig budget;
      budget.mode = BudgetMode::global_l2;
      budget.alpha_max = amax;
      const SolveResult solved = solve_coefficients(s, baseline_acc, w.w, budget, protect);
      if (!solved.infeasible) alpha = solved.alpha;
    }
    point.alpha_norm = norm2(alpha);
    const std::vector<double> predicted = s.predict_delta(alpha);
    point.predicted_norm = norm2(predicted);
    const std::vector<double> measured = measure(alpha);
    point.measured_norm = norm2(measured);
    std::vector<double> diff(predicted.size());
    for (std::size_t j = 0; j < predicted.size(); ++j) diff[j] = predicted[j] - measured[j];
    point.error_norm = norm2(diff);
    log.points.push_back(point);
  }

  std::vector<double> xs, errs, preds, meas;
  for (const auto& p : log.points) {
    xs.push_back(p.alpha_norm);
    errs.push_back(p.error_norm);
    preds.push_back(p.predicted_norm);
    meas.push_back(p.measured_norm);
  }
  log.additive = fit_additive(xs, errs);
  log.power_law = fit_power_law(xs, errs);
  log.norm_correlation = pearson(preds, meas);
  return log;
}

LinearizationSweepLog linearization_sweep(const MlpSpec& spec, const ParamVector& theta,
                                          const Dataset& data, const SpikeBasis& basis,
                                          const SensitivityMatrix& s,
                                          const std::vector<double>& alpha_grid,
                                          const WeightConfig& protect, Split eval_split) {
  basis.validate();
  const ClassAccuracy baseline = per_class_accuracy(spec, theta, data, eval_split);
  auto measure = [&](const std::vector<double>& alpha) {
    ParamVector candidate = theta;  // apply, measure, roll back (copy semantics)
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (alpha[i] != 0.0) axpy(alpha[i], basis.vectors[i], candidate);
    }
    const ClassAccuracy acc = per_class_accuracy(spec, candidate, data, eval_split);
    std::vector<double> delta(acc.per_class.size());
    for (std::size_t j = 0; j < delta.size(); ++j) {
      delta[j] = acc.per_class[j] - baseline.per_class[j];
    }
    return delta;
  };
  return linearization_sweep_core(s, baseline.per_class, alpha_grid, protect, measure);
}

}  // namespace hesskit
