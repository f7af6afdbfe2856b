#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hesskit/dataset.hpp"
#include "hesskit/lanczos.hpp"
#include "hesskit/mlp.hpp"

namespace hesskit {

/// Central-difference sensitivity of per-class accuracy along each spike:
/// S[i][j] = (acc_j(theta + eps q_i) - acc_j(theta - eps q_i)) / (2 eps).
/// Units: accuracy fraction per unit perturbation amplitude.
struct SensitivityMatrix {
  std::vector<std::vector<double>> s;  // K rows, C columns
  double probe_amplitude = 0.0;
  double noise_floor = 0.0;  // 1 / (2 eps min_j n_j), accuracy quantization
  std::string basis_source;
  std::string split_used;

  int spikes() const { return static_cast<int>(s.size()); }
  int classes() const { return s.empty() ? 0 : static_cast<int>(s.front().size()); }
  /// (S w)_i for a class-weight vector w.
  std::vector<double> weighted_objective(const std::vector<double>& w) const;
  /// (S^t alpha)_j, the predicted per-class accuracy change.
  std::vector<double> predict_delta(const std::vector<double>& alpha) const;
};

/// Exactly 2K accuracy evaluations on the given split; theta itself is never
/// mutated (perturbations act on a working copy). Throws if any class is
/// absent from the split.
SensitivityMatrix sensitivity_matrix(const MlpSpec& spec, const ParamVector& theta,
                                     const SpikeBasis& basis, double eps,
                                     const Dataset& ds, Split split);

struct RankDiagnostics {
  std::vector<double> singular_values;  // descending
  std::vector<double> energy;           // p_i = s_i^2 / sum, sums to 1
  double effective_rank = 0.0;          // exp(-sum p_i log p_i)
  double flatness = 0.0;                // sigma_1 / sigma_2
  double frobenius = 0.0;
};

/// Entropic effective rank of S (0 log 0 := 0). Throws on an all-zero matrix.
RankDiagnostics effective_rank(const SensitivityMatrix& s);
RankDiagnostics effective_rank_from_singular_values(const std::vector<double>& sigma);

/// At most `per_class_cap` train-split samples per class (all samples of
/// smaller classes), seeded subsampling, ascending index order.
std::vector<int> stratified_split(const Dataset& ds, int per_class_cap, std::uint64_t seed);

}  // namespace hesskit
