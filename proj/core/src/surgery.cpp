#include "hesskit/surgery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hesskit/oracle.hpp"
#include "hesskit/orthogonal.hpp"
#include "hesskit/rng.hpp"

namespace hesskit {

namespace {

constexpr std::uint64_t kHvpStream = 0x48;
constexpr std::uint64_t kStartStream = 0x71;

/// Top-k positive Ritz pairs of a seeded mini-batch Hessian at theta.
SpikeBasis spike_basis_at(const MlpSpec& spec, const ParamVector& theta, const Dataset& data,
                          int lanczos_m, double lanczos_tol, int k_spikes, int hvp_batch,
                          bool stratified, int per_class, std::uint64_t hvp_seed,
                          std::uint64_t start_seed,
                          const std::vector<ParamVector>* deflate_against = nullptr) {
  const auto indices = stratified
                           ? stratified_batch_indices(data, Split::train, per_class, hvp_seed)
                           : uniform_batch_indices(data, Split::train, hvp_batch, hvp_seed);
  HvpOracle oracle = model_oracle(spec, theta, Batch::gather(data, indices));
  ParamVector q1 = lanczos_start_vector(theta.size(), start_seed);
  if (deflate_against != nullptr && !deflate_against->empty()) {
    oracle = deflate(oracle, *deflate_against);
    // The start vector must live in the deflated subspace, or the Krylov
    // basis inherits its overlap with the deflated directions.
    q1 = normalized(gram_schmidt_residual(q1, *deflate_against));
  }
  const LanczosResult lz = lanczos(oracle, q1, lanczos_m, lanczos_tol);
  const int order = static_cast<int>(lz.t.order());
  SpikeBasis all = ritz(lz, std::min(k_spikes == 0 ? order : std::max(k_spikes, 1), order),
                        oracle.provenance);
  // Negative Ritz directions are reported by the spectrum tooling but never
  // used for perturbations.
  SpikeBasis basis;
  basis.source = all.source;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all.eigenvalues[i] <= 0.0) continue;
    basis.eigenvalues.push_back(all.eigenvalues[i]);
    basis.vectors.push_back(all.vectors[i]);
  }
  basis.orth_error = all.orth_error;
  return basis;
}

double weight_exponent(const SurgeryConfig& config, const std::vector<double>& acc) {
  if (config.p_exponent >= 0.0) return config.p_exponent;
  return recommend_p(acc, config.target).p;
}

}  // namespace

SurgeryState init_surgery_state(const MlpSpec& spec, const ParamVector& theta0,
                                const Dataset& data, const SurgeryConfig& config) {
  if (data.sensitivity_idx.empty() || data.heldout_idx.empty()) {
    throw std::invalid_argument("surgery: sensitivity and heldout splits must be non-empty");
  }
  SurgeryState state;
  state.theta = theta0;
  state.accuracy = per_class_accuracy(spec, theta0, data, Split::sensitivity);
  state.sigma0 = state.accuracy.sigma;
  state.controller_alpha = config.alpha_max0;
  return state;
}

IterationRecord surgery_step(SurgeryState& state, const MlpSpec& spec, const Dataset& data,
                             const SurgeryConfig& config) {
  const int t = state.next_iteration();
  AmplitudeController controller(config.iterations, config.alpha_min, config.alpha_max0);
  controller.restore(state.controller_m, state.controller_v, state.controller_t,
                     state.controller_alpha);

  IterationRecord rec;
  rec.t = t;
  rec.alpha_used = controller.current();
  rec.hvp_seed = derive_seed(config.seed, kHvpStream, static_cast<std::uint64_t>(t));

  const SpikeBasis basis = spike_basis_at(
      spec, state.theta, data, config.lanczos_m, config.lanczos_tol, config.k_spikes,
      config.hvp_batch, config.hvp_stratified, config.hvp_per_class, rec.hvp_seed,
      derive_seed(config.seed, kStartStream, static_cast<std::uint64_t>(t)));
  rec.eigenvalues = basis.eigenvalues;

  const double sigma_prev = state.accuracy.sigma;
  double g = 0.0;

  if (basis.size() == 0) {
    rec.skipped = true;
  } else {
    const double eps = controller.current();  // eps^(t) tied to alpha_max^(t)
    const SensitivityMatrix s =
        sensitivity_matrix(spec, state.theta, basis, eps, data, Split::sensitivity);

    WeightConfig wc;
    wc.p_exponent = weight_exponent(config, state.accuracy.per_class);
    wc.protect_threshold = config.protect_threshold;
    wc.protect_floor = config.protect_floor;
    const ClassWeights w = class_weights(state.accuracy.per_class, wc);

    BudgetConfig budget;
    budget.mode = config.budget_mode;
    budget.alpha_max = controller.current();
    if (budget.mode == BudgetMode::per_spike_box) budget.eigenvalues = basis.eigenvalues;

    const SolveResult solved =
        solve_coefficients(s, state.accuracy.per_class, w.w, budget, wc);
    if (solved.infeasible) {
      rec.skipped = true;
    } else {
      rec.alpha_star = solved.alpha;
      double alpha_norm = 0.0;
      for (double a : solved.alpha) alpha_norm += a * a;

      ParamVector candidate = state.theta;
      if (alpha_norm > 0.0) {
        for (std::size_t i = 0; i < basis.size(); ++i) {
          axpy(solved.alpha[i], basis.vectors[i], candidate);
        }
      }
      const ClassAccuracy cand_acc =
          per_class_accuracy(spec, candidate, data, Split::sensitivity);
      double delta_max = 0.0;
      for (std::size_t j = 0; j < cand_acc.per_class.size(); ++j) {
        if (state.accuracy.defined[j] && cand_acc.defined[j]) {
          delta_max = std::max(delta_max,
                               state.accuracy.per_class[j] - cand_acc.per_class[j]);
        }
      }

      if (cand_acc.sigma > sigma_prev + config.sigma_guard ||
          delta_max > config.class_drop_guard) {
        rec.rolled_back = true;  // previous theta kept bit-exactly
        g = -delta_max;
      } else {
        rec.accepted = true;
        state.theta = std::move(candidate);
        state.accuracy = cand_acc;
        g = sigma_prev - cand_acc.sigma;
      }
    }
  }

  rec.g = g;
  controller.update(g);
  rec.snr = controller.last_snr();
  state.controller_m = controller.moment_m();
  state.controller_v = controller.moment_v();
  state.controller_t = controller.iteration();
  state.controller_alpha = controller.current();

  rec.per_class_acc = state.accuracy.per_class;
  rec.sigma = state.accuracy.sigma;
  state.log.push_back(rec);
  return rec;
}

SurgeryRun run_surgery(const MlpSpec& spec, const ParamVector& theta0, const Dataset& data,
                       const SurgeryConfig& config) {
  SurgeryRun run;
  run.heldout_before = per_class_accuracy(spec, theta0, data, Split::heldout);
  run.state = init_surgery_state(spec, theta0, data, config);
  {
    split_audit::ScopeGuard guard(false, "surgery-loop");
    for (int t = 0; t < config.iterations; ++t) {
      surgery_step(run.state, spec, data, config);
    }
  }
  run.heldout_after = per_class_accuracy(spec, run.state.theta, data, Split::heldout);
  return run;
}

DeflatedSurgeryRun run_deflated_surgery(const MlpSpec& spec, const ParamVector& theta0,
                                        const Dataset& data,
                                        const DeflatedSurgeryConfig& config) {
  if (config.phases < 1) throw std::invalid_argument("deflated surgery: phases must be >= 1");

  DeflatedSurgeryRun run;
  run.theta = theta0;
  run.heldout_before = per_class_accuracy(spec, theta0, data, Split::heldout);

  std::vector<ParamVector> accumulated;
  double lambda_max_phase1 = 0.0;

  split_audit::ScopeGuard guard(false, "deflated-surgery-loop");
  ClassAccuracy acc = per_class_accuracy(spec, run.theta, data, Split::sensitivity);

  for (int phase = 1; phase <= config.phases; ++phase) {
    DeflatedPhaseRecord rec;
    rec.phase = phase;
    rec.first_spike = static_cast<int>(accumulated.size()) + 1;

    if (static_cast<int>(accumulated.size()) + config.spikes_per_phase >
        config.max_stored_vectors) {
      rec.stopped_by_memory_guard = true;
      rec.sigma = acc.sigma;
      rec.global = acc.global;
      run.phases.push_back(rec);
      break;
    }

    // Re-orthogonalize the accumulated basis before wrapping the oracle.
    if (!accumulated.empty()) accumulated = qr_orthonormalize(accumulated);

    const std::uint64_t hvp_seed = derive_seed(config.seed, kHvpStream, 1000 + static_cast<std::uint64_t>(phase));
    const SpikeBasis basis = spike_basis_at(
        spec, run.theta, data, config.lanczos_m, config.lanczos_tol,
        config.spikes_per_phase, config.hvp_batch, false, 0, hvp_seed,
        derive_seed(config.seed, kStartStream, 1000 + static_cast<std::uint64_t>(phase)),
        accumulated.empty() ? nullptr : &accumulated);
    if (basis.size() == 0) {
      throw std::runtime_error("deflated surgery: no positive spikes recovered in phase " +
                               std::to_string(phase));
    }
    rec.last_spike = rec.first_spike + static_cast<int>(basis.size()) - 1;
    rec.lambda_max = basis.eigenvalues.front();
    if (phase == 1) lambda_max_phase1 = rec.lambda_max;
    rec.alpha_max = phase == 1 ? config.alpha_max1
                               : config.alpha_max1 *
                                     std::sqrt(lambda_max_phase1 / rec.lambda_max);

    double cross = 0.0;
    for (const auto& q_new : basis.vectors) {
      for (const auto& q_old : accumulated) {
        cross = std::max(cross, std::abs(dot(q_new, q_old)));
      }
    }
    rec.cross_corr_max = cross;

    for (int it = 0; it < config.iters_per_phase; ++it) {
      const SensitivityMatrix s =
          sensitivity_matrix(spec, run.theta, basis, rec.alpha_max, data, Split::sensitivity);
      WeightConfig wc;
      wc.p_exponent = config.p_exponent >= 0.0
                          ? config.p_exponent
                          : recommend_p(acc.per_class, config.target).p;
      wc.protect_threshold = config.protect_threshold;
      wc.protect_floor = config.protect_floor;
      const ClassWeights w = class_weights(acc.per_class, wc);
      BudgetConfig budget;
      budget.mode = BudgetMode::global_l2;
      budget.alpha_max = rec.alpha_max;
      const SolveResult solved = solve_coefficients(s, acc.per_class, w.w, budget, wc);
      if (solved.infeasible) continue;

      double alpha_norm = 0.0;
      for (double a : solved.alpha) alpha_norm += a * a;
      if (alpha_norm == 0.0) continue;

      ParamVector candidate = run.theta;
      for (std::size_t i = 0; i < basis.size(); ++i) {
        axpy(solved.alpha[i], basis.vectors[i], candidate);
      }
      const ClassAccuracy cand_acc =
          per_class_accuracy(spec, candidate, data, Split::sensitivity);
      double delta_max = 0.0;
      for (std::size_t j = 0; j < cand_acc.per_class.size(); ++j) {
        if (acc.defined[j] && cand_acc.defined[j]) {
          delta_max = std::max(delta_max, acc.per_class[j] - cand_acc.per_class[j]);
        }
      }
      if (cand_acc.sigma > acc.sigma + config.sigma_guard ||
          delta_max > config.class_drop_guard) {
        continue;  // rollback: keep previous weights
      }
      run.theta = std::move(candidate);
      acc = cand_acc;
    }

    rec.sigma = acc.sigma;
    rec.global = acc.global;
    run.phases.push_back(rec);
    for (const auto& v : basis.vectors) accumulated.push_back(v);
  }

  run.heldout_after = per_class_accuracy(spec, run.theta, data, Split::heldout);
  return run;
}

DecileReport decile_report(const ClassAccuracy& before, const ClassAccuracy& after,
                           int groups) {
  if (before.per_class.size() != after.per_class.size()) {
    throw std::invalid_argument("decile_report: class sets differ");
  }
  if (groups < 1) throw std::invalid_argument("decile_report: groups must be >= 1");
  const int c = static_cast<int>(before.per_class.size());

  DecileReport report;
  if (groups > c) {
    report.collapsed = true;
    groups = c;
  }

  std::vector<int> order(static_cast<std::size_t>(c));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return before.per_class[static_cast<std::size_t>(a)] <
           before.per_class[static_cast<std::size_t>(b)];
  });

  // Equal-count groups, remainders spread over the leading (weakest) groups.
  const int base = c / groups;
  const int extra = c % groups;
  int cursor = 0;
  for (int grp = 0; grp < groups; ++grp) {
    const int size = base + (grp < extra ? 1 : 0);
    DecileRow row;
    row.count = size;
    for (int i = 0; i < size; ++i) {
      const int cls = order[static_cast<std::size_t>(cursor + i)];
      row.baseline_mean += before.per_class[static_cast<std::size_t>(cls)];
      row.delta_mean += after.per_class[static_cast<std::size_t>(cls)] -
                        before.per_class[static_cast<std::size_t>(cls)];
    }
    row.baseline_mean /= size;
    row.delta_mean /= size;
    report.rows.push_back(row);
    cursor += size;
  }
  return report;
}

}  // namespace hesskit
