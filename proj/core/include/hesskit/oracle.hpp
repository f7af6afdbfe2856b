#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hesskit/dataset.hpp"
#include "hesskit/mlp.hpp"
#include "hesskit/param_vector.hpp"

namespace hesskit {

/// Matrix-free symmetric operator. apply must be linear and symmetric; both
/// are contract properties checked by sampling in the tests, not at runtime.
struct HvpOracle {
  std::function<ParamVector(const ParamVector&)> apply;
  std::size_t dim = 0;
  double cost_hint = 0.0;  // expected seconds per apply
  std::string provenance;

  ParamVector operator()(const ParamVector& v) const { return apply(v); }
};

/// Synthetic operator with an exactly known spectrum: `spike_values` planted
/// along a seeded random orthonormal frame, remaining eigenvalues drawn
/// uniformly from [0, bulk_scale].
struct SpikedOperatorSpec {
  std::size_t dim = 200;
  std::vector<double> spike_values;  // descending positive
  double bulk_scale = 0.03;
  std::uint64_t seed = 1;
};

struct SpikedOperator {
  HvpOracle oracle;
  std::vector<double> spectrum;            // full spectrum, descending
  std::vector<ParamVector> spike_vectors;  // planted directions for the spikes
  double bulk_median = 0.0;                // median of the planted bulk draws
};

/// Wraps a dense symmetric matrix; apply(v) = Mv with a sequential matvec.
HvpOracle dense_oracle(const Eigen::MatrixXd& m, double sym_tol = 1e-8);

SpikedOperator spiked_oracle(const SpikedOperatorSpec& spec);

/// Dense expansion of a spiked operator (columns of the identity pushed
/// through apply); oracle-scale only.
Eigen::MatrixXd densify(const HvpOracle& oracle);

/// Mini-batch model Hessian: apply(v) = hvp(spec, theta, batch, v). The batch
/// is fixed for the oracle's lifetime (one stochastic Hessian).
HvpOracle model_oracle(const MlpSpec& spec, const ParamVector& theta, Batch hvp_batch);

/// Symmetric deflation: apply(v) = (I - QQ^t) H (I - QQ^t) v. The supplied
/// basis is re-orthogonalized by QR first; a basis that loses rank beyond
/// `orth_tol` aborts.
HvpOracle deflate(const HvpOracle& oracle, const std::vector<ParamVector>& q_prev,
                  double orth_tol = 1e-8);

/// Seeded HVP batch composition helpers (uniform draw or per-class cap).
std::vector<int> uniform_batch_indices(const Dataset& ds, Split split, int n,
                                       std::uint64_t seed);
std::vector<int> stratified_batch_indices(const Dataset& ds, Split split, int per_class,
                                          std::uint64_t seed);

}  // namespace hesskit
