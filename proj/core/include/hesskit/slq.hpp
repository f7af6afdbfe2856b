#pragma once

#include <cstdint>
#include <vector>

#include "hesskit/oracle.hpp"

namespace hesskit {

struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> density;  // phi_sigma(t) >= 0 on the grid
  double sigma2 = 0.0;
  int probes = 0;
  int order = 0;

  /// Trapezoidal integral over the grid.
  double integral() const;
};

/// Gauss quadrature rule of one probe: Ritz nodes with raw weights
/// ||v||^2 * U_{1,i}^2, so that sum_i w_i f(l_i) = v^t f(H) v exactly on the
/// Krylov space. Weights are non-negative and sum to ||v||^2.
struct ProbeQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
  double probe_norm2 = 0.0;
};

ProbeQuadrature slq_probe_quadrature(const HvpOracle& oracle, const ParamVector& probe,
                                     int m, double tol = 1e-10);

/// Stochastic Lanczos quadrature density estimate: k probes v ~ N(0, I/p),
/// each probe contributes its normalized quadrature weights U_{1,i}^2 (sum 1)
/// smeared with a Gaussian kernel of bandwidth sigma^2, averaged in fixed
/// probe order. Deterministic given the seed.
DensityEstimate slq_density(const HvpOracle& oracle, int m, int k, double sigma2,
                            const std::vector<double>& grid, std::uint64_t seed);

/// Uniform grid covering [lo - 5 sigma, hi + 5 sigma].
std::vector<double> slq_auto_grid(double lo, double hi, double sigma2, int points = 600);

struct ProbeConvergence {
  std::vector<int> k_values;
  std::vector<double> l1_distance;  // to the k_ref-probe reference
  double fitted_slope = 0.0;        // log-log slope of distance vs k
  int k_ref = 0;
};

/// L1 distance of the k-probe estimate to a high-k reference built from the
/// same probe stream (prefix-nested), per requested k; k_ref defaults to
/// 10 * max(k_values).
ProbeConvergence probe_convergence(const HvpOracle& oracle, int m, double sigma2,
                                   const std::vector<double>& grid,
                                   const std::vector<int>& k_values, std::uint64_t seed,
                                   int k_ref = 0);

}  // namespace hesskit
