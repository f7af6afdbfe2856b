#include "hesskit/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "hesskit/rng.hpp"

namespace hesskit {

std::vector<double> SensitivityMatrix::weighted_objective(const std::vector<double>& w) const {
  if (static_cast<int>(w.size()) != classes()) {
    throw std::invalid_argument("weighted_objective: weight size mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(spikes()), 0.0);
  for (int i = 0; i < spikes(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < classes(); ++j) acc += s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

std::vector<double> SensitivityMatrix::predict_delta(const std::vector<double>& alpha) const {
  if (static_cast<int>(alpha.size()) != spikes()) {
    throw std::invalid_argument("predict_delta: alpha size mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(classes()), 0.0);
  for (int j = 0; j < classes(); ++j) {
    double acc = 0.0;
    for (int i = 0; i < spikes(); ++i) acc += s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * alpha[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(j)] = acc;
  }
  return out;
}

SensitivityMatrix sensitivity_matrix(const MlpSpec& spec, const ParamVector& theta,
                                     const SpikeBasis& basis, double eps,
                                     const Dataset& ds, Split split) {
  if (!(eps > 0.0)) throw std::invalid_argument("sensitivity_matrix: eps must be > 0");
  basis.validate();
  const auto counts = ds.class_counts(split);
  int min_count = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      throw std::invalid_argument("sensitivity_matrix: class " + std::to_string(c) +
                                  " absent from split, sensitivity undefined");
    }
    min_count = (c == 0) ? counts[c] : std::min(min_count, counts[c]);
  }

  SensitivityMatrix result;
  result.probe_amplitude = eps;
  result.noise_floor = 1.0 / (2.0 * eps * min_count);
  result.basis_source = basis.source;
  result.split_used = split_name(split);

  const int k = static_cast<int>(basis.size());
  result.s.assign(static_cast<std::size_t>(k),
                  std::vector<double>(static_cast<std::size_t>(ds.classes), 0.0));
  for (int i = 0; i < k; ++i) {
    // 2K accuracy evaluations total, working copies only.
    ParamVector plus = theta;
    axpy(eps, basis.vectors[static_cast<std::size_t>(i)], plus);
    const ClassAccuracy acc_plus = per_class_accuracy(spec, plus, ds, split);

    ParamVector minus = theta;
    axpy(-eps, basis.vectors[static_cast<std::size_t>(i)], minus);
    const ClassAccuracy acc_minus = per_class_accuracy(spec, minus, ds, split);

    for (int j = 0; j < ds.classes; ++j) {
      result.s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          (acc_plus.per_class[static_cast<std::size_t>(j)] -
           acc_minus.per_class[static_cast<std::size_t>(j)]) /
          (2.0 * eps);
    }
  }
  return result;
}

RankDiagnostics effective_rank_from_singular_values(const std::vector<double>& sigma) {
  RankDiagnostics diag;
  diag.singular_values = sigma;
  std::sort(diag.singular_values.begin(), diag.singular_values.end(), std::greater<>());
  double energy_total = 0.0;
  for (double v : diag.singular_values) energy_total += v * v;
  if (energy_total == 0.0) {
    throw std::invalid_argument("effective_rank: all-zero matrix, rank undefined");
  }
  diag.frobenius = std::sqrt(energy_total);
  double entropy = 0.0;
  for (double v : diag.singular_values) {
    const double p = v * v / energy_total;
    diag.energy.push_back(p);
    if (p > 0.0) entropy -= p * std::log(p);
  }
  diag.effective_rank = std::exp(entropy);
  diag.flatness = diag.singular_values.size() > 1 && diag.singular_values[1] > 0.0
                      ? diag.singular_values[0] / diag.singular_values[1]
                      : std::numeric_limits<double>::infinity();
  return diag;
}

RankDiagnostics effective_rank(const SensitivityMatrix& s) {
  const int k = s.spikes();
  const int c = s.classes();
  if (k == 0 || c == 0) throw std::invalid_argument("effective_rank: empty matrix");
  Eigen::MatrixXd m(k, c);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = s.s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  std::vector<double> sigma(svd.singularValues().data(),
                            svd.singularValues().data() + svd.singularValues().size());
  return effective_rank_from_singular_values(sigma);
}

std::vector<int> stratified_split(const Dataset& ds, int per_class_cap, std::uint64_t seed) {
  if (per_class_cap < 1) throw std::invalid_argument("stratified_split: cap must be >= 1");
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.classes));
  for (int i : ds.split(Split::train)) {
    by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
  }
  Rng rng(seed);
  std::vector<int> out;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) {
      throw std::invalid_argument("stratified_split: class " + std::to_string(c) + " empty");
    }
    if (static_cast<int>(idx.size()) > per_class_cap) {
      rng.shuffle(idx);
      idx.resize(static_cast<std::size_t>(per_class_cap));
    }
    out.insert(out.end(), idx.begin(), idx.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hesskit
