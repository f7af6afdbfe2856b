#pragma once

#include <string>
#include <vector>

#include "hesskit/dataset.hpp"
#include "hesskit/mlp.hpp"
#include "hesskit/surgery.hpp"
#include "hesskit/train.hpp"

namespace hesskit {

struct BaselineRow {
  std::string method;
  double global = 0.0;
  double sigma = 0.0;
  double delta_sigma = 0.0;  // vs the untouched baseline
  std::vector<double> per_class;
  std::vector<int> weakest_classes;  // two lowest-accuracy classes
};

struct BaselineComparisonConfig {
  TrainConfig finetune;        // focal / class-weighted fine-tuning runs
  double focal_gamma = 2.0;
  std::vector<double> tau_sweep{0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  double logit_adjust_tau = 1.0;
  SurgeryConfig surgery;
};

struct BaselineComparison {
  std::vector<BaselineRow> rows;
  double best_tau = 0.0;

  const BaselineRow& row(const std::string& method) const;
};

/// Heldout-split comparison of the rebalancing methods: untouched baseline,
/// focal fine-tune, inverse-frequency class-weighted fine-tune, tau-norm
/// (swept, best sigma), logit adjustment, surgery, and surgery after focal.
BaselineComparison compare_baselines(const MlpSpec& spec, const ParamVector& theta0,
                                     const Dataset& data,
                                     const BaselineComparisonConfig& config);

/// Inverse-frequency class weights, mean-normalized (w_c ~ N / (C n_c)).
std::vector<double> inverse_frequency_weights(const Dataset& ds);

}  // namespace hesskit
