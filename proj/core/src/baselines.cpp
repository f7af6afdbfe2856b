#include "hesskit/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "hesskit/posthoc.hpp"
#include "hesskit/rng.hpp"

namespace hesskit {

namespace {

BaselineRow make_row(const std::string& method, const ClassAccuracy& acc, double base_sigma) {
  BaselineRow row;
  row.method = method;
  row.global = acc.global;
  row.sigma = acc.sigma;
  row.delta_sigma = acc.sigma - base_sigma;
  row.per_class = acc.per_class;
  std::vector<int> order(acc.per_class.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return acc.per_class[static_cast<std::size_t>(a)] < acc.per_class[static_cast<std::size_t>(b)];
  });
  for (std::size_t i = 0; i < std::min<std::size_t>(2, order.size()); ++i) {
    row.weakest_classes.push_back(order[i]);
  }
  return row;
}

}  // namespace

std::vector<double> inverse_frequency_weights(const Dataset& ds) {
  const auto counts = ds.class_counts(Split::train);
  int total = 0;
  for (int c : counts) total += c;
  std::vector<double> w(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw std::invalid_argument("inverse_frequency_weights: empty class");
    w[c] = static_cast<double>(total) / (static_cast<double>(counts.size()) * counts[c]);
  }
  return w;
}

const BaselineRow& BaselineComparison::row(const std::string& method) const {
  for (const auto& r : rows) {
    if (r.method == method) return r;
  }
  throw std::out_of_range("no baseline row named " + method);
}

BaselineComparison compare_baselines(const MlpSpec& spec, const ParamVector& theta0,
                                     const Dataset& data,
                                     const BaselineComparisonConfig& config) {
  BaselineComparison cmp;
  const ClassAccuracy base = per_class_accuracy(spec, theta0, data, Split::heldout);
  cmp.rows.push_back(make_row("baseline", base, base.sigma));

  {
    MlpSpec focal_spec = spec;
    focal_spec.loss = LossKind::focal;
    focal_spec.focal_gamma = config.focal_gamma;
    const TrainResult ft = train(focal_spec, data, config.finetune, &theta0);
    cmp.rows.push_back(make_row(
        "focal_finetune", per_class_accuracy(spec, ft.theta, data, Split::heldout),
        base.sigma));

    SurgeryConfig after = config.surgery;
    after.seed = derive_seed(config.surgery.seed, 0xf1);
    const SurgeryRun run = run_surgery(spec, ft.theta, data, after);
    cmp.rows.push_back(make_row("surgery_after_focal", run.heldout_after, base.sigma));
  }

  {
    MlpSpec weighted_spec = spec;
    weighted_spec.loss = LossKind::weighted_ce;
    weighted_spec.class_weights = inverse_frequency_weights(data);
    const TrainResult ft = train(weighted_spec, data, config.finetune, &theta0);
    cmp.rows.push_back(make_row(
        "class_weighted_finetune", per_class_accuracy(spec, ft.theta, data, Split::heldout),
        base.sigma));
  }

  {
    double best_sigma = 0.0;
    ClassAccuracy best_acc;
    for (double tau : config.tau_sweep) {
      const TauNormalizeResult tn = tau_normalize(spec, theta0, tau);
      const ClassAccuracy acc = per_class_accuracy(spec, tn.theta, data, Split::heldout);
      if (cmp.best_tau == 0.0 || acc.sigma < best_sigma) {
        best_sigma = acc.sigma;
        best_acc = acc;
        cmp.best_tau = tau;
      }
    }
    cmp.rows.push_back(make_row("tau_norm", best_acc, base.sigma));
  }

  cmp.rows.push_back(make_row(
      "logit_adjust",
      logit_adjust_accuracy(spec, theta0, data, Split::heldout, class_priors(data),
                            config.logit_adjust_tau),
      base.sigma));

  {
    const SurgeryRun run = run_surgery(spec, theta0, data, config.surgery);
    cmp.rows.push_back(make_row("surgery", run.heldout_after, base.sigma));
  }

  return cmp;
}

}  // namespace hesskit
