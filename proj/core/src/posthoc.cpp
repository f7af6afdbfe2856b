#include "hesskit/posthoc.hpp"

#include <cmath>
#include <stdexcept>

namespace hesskit {

TauNormalizeResult tau_normalize(const MlpSpec& spec, const ParamVector& theta, double tau) {
  spec.validate();
  if (tau < 0.0) throw std::invalid_argument("tau_normalize: tau must be >= 0");
  if (static_cast<int>(theta.size()) != spec.param_count()) {
    throw std::invalid_argument("tau_normalize: theta dimension mismatch");
  }

  TauNormalizeResult result;
  result.theta = theta;
  if (tau == 0.0) return result;  // identity, bit-exact

  const int last = spec.layers() - 1;
  const int in = spec.layer_widths[static_cast<std::size_t>(last)];
  const int out = spec.classes();
  const int off = spec.weight_offset(last);
  for (int c = 0; c < out; ++c) {
    double norm_sq = 0.0;
    for (int i = 0; i < in; ++i) {
      const double wic = theta[static_cast<std::size_t>(off + i * out + c)];
      norm_sq += wic * wic;
    }
    if (norm_sq == 0.0) {
      result.zero_norm_columns.push_back(c);
      continue;
    }
    const double factor = 1.0 / std::pow(std::sqrt(norm_sq), tau);
    for (int i = 0; i < in; ++i) {
      result.theta[static_cast<std::size_t>(off + i * out + c)] *= factor;
    }
  }
  return result;
}

std::vector<int> logit_adjust_predict(const std::vector<double>& logits, int classes,
                                      const std::vector<double>& priors, double tau) {
  if (static_cast<int>(priors.size()) != classes) {
    throw std::invalid_argument("logit_adjust: priors size mismatch");
  }
  double sum = 0.0;
  for (double p : priors) {
    if (!(p > 0.0)) throw std::invalid_argument("logit_adjust: non-positive prior");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("logit_adjust: priors must sum to 1");

  const int n = static_cast<int>(logits.size()) / classes;
  std::vector<int> pred(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const double* row = logits.data() + static_cast<std::size_t>(s) * classes;
    int best = 0;
    double best_score = row[0] - tau * std::log(priors[0]);
    for (int c = 1; c < classes; ++c) {
      const double score = row[c] - tau * std::log(priors[static_cast<std::size_t>(c)]);
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    pred[static_cast<std::size_t>(s)] = best;
  }
  return pred;
}

ClassAccuracy logit_adjust_accuracy(const MlpSpec& spec, const ParamVector& theta,
                                    const Dataset& ds, Split split,
                                    const std::vector<double>& priors, double tau) {
  const Batch batch = Batch::gather(ds, ds.split(split));
  const auto z = logits(spec, theta, batch);
  const auto pred = logit_adjust_predict(z, ds.classes, priors, tau);
  std::vector<int> counts(static_cast<std::size_t>(ds.classes), 0);
  std::vector<int> correct(static_cast<std::size_t>(ds.classes), 0);
  for (int s = 0; s < batch.n; ++s) {
    const int y = batch.y[static_cast<std::size_t>(s)];
    counts[static_cast<std::size_t>(y)]++;
    if (pred[static_cast<std::size_t>(s)] == y) correct[static_cast<std::size_t>(y)]++;
  }
  std::vector<double> per_class(static_cast<std::size_t>(ds.classes), 0.0);
  for (int c = 0; c < ds.classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) {
      per_class[static_cast<std::size_t>(c)] =
          static_cast<double>(correct[static_cast<std::size_t>(c)]) / counts[static_cast<std::size_t>(c)];
    }
  }
  return ClassAccuracy::from_values(std::move(per_class), std::move(counts));
}

std::vector<double> class_priors(const Dataset& ds) {
  const auto counts = ds.class_counts(Split::train);
  int total = 0;
  for (int c : counts) total += c;
  std::vector<double> priors(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    priors[c] = static_cast<double>(counts[c]) / total;
  }
  return priors;
}

}  // namespace hesskit
