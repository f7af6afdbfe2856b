#pragma once

#include <vector>

#include "hesskit/dataset.hpp"
#include "hesskit/mlp.hpp"
#include "hesskit/param_vector.hpp"

namespace hesskit {

struct TauNormalizeResult {
  ParamVector theta;
  std::vector<int> zero_norm_columns;  // left unchanged, reported
};

/// Rescales each final-layer classifier column w_c by 1/||w_c||^tau. Biases
/// and all earlier layers are untouched; zero-norm columns are left alone.
TauNormalizeResult tau_normalize(const MlpSpec& spec, const ParamVector& theta, double tau);

/// Post-hoc prior correction: predictions become argmax_c (logit_c - tau*log pi_c).
/// Priors must be positive and sum to 1.
std::vector<int> logit_adjust_predict(const std::vector<double>& logits, int classes,
                                      const std::vector<double>& priors, double tau);

/// Accuracy of logit-adjusted predictions on a split.
ClassAccuracy logit_adjust_accuracy(const MlpSpec& spec, const ParamVector& theta,
                                    const Dataset& ds, Split split,
                                    const std::vector<double>& priors, double tau);

/// Training-split class frequencies (the priors logit adjustment corrects for).
std::vector<double> class_priors(const Dataset& ds);

}  // namespace hesskit
