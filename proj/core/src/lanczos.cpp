#include "hesskit/lanczos.hpp"

#include <cmath>
#include <stdexcept>

#include "hesskit/orthogonal.hpp"
#include "hesskit/rng.hpp"

namespace hesskit {

LanczosResult lanczos(const HvpOracle& oracle, const ParamVector& q1, int m, double tol) {
  if (m < 1) throw std::invalid_argument("lanczos: order must be >= 1");
  if (q1.size() != oracle.dim) throw std::invalid_argument("lanczos: q1 dimension mismatch");
  if (std::abs(norm(q1) - 1.0) > 1e-12) {
    throw std::invalid_argument("lanczos: q1 must be unit norm");
  }

  LanczosResult result;
  result.q.push_back(q1);
  double beta_prev = 0.0;
  double running_max = 0.0;

  for (int j = 0; j < m; ++j) {
    const ParamVector& qj = result.q[static_cast<std::size_t>(j)];
    ParamVector z = oracle.apply(qj);
    if (j > 0) axpy(-beta_prev, result.q[static_cast<std::size_t>(j) - 1], z);
    const double alpha = dot(qj, z);
    axpy(-alpha, qj, z);
    z = gram_schmidt_residual(z, result.q);
    const double beta = norm(z);

    result.t.diag.push_back(alpha);
    running_max = std::max({running_max, std::abs(alpha), beta});

    if (j + 1 == m) break;
    if (beta <= tol * running_max || beta == 0.0) {
      result.exhausted = true;
      break;
    }
    result.t.offdiag.push_back(beta);
    scale(z, 1.0 / beta);
    result.q.push_back(std::move(z));
    beta_prev = beta;
  }
  return result;
}

ParamVector lanczos_start_vector(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  return normalized(rng.gaussian_vector(dim));
}

void SpikeBasis::validate() const {
  if (eigenvalues.size() != vectors.size()) {
    throw std::invalid_argument("SpikeBasis: eigenvalue/vector count mismatch");
  }
  for (std::size_t i = 0; i + 1 < eigenvalues.size(); ++i) {
    if (eigenvalues[i] < eigenvalues[i + 1]) {
      throw std::invalid_argument("SpikeBasis: eigenvalues must be descending");
    }
  }
}

SpikeBasis ritz(const LanczosResult& lz, int top_k, const std::string& source) {
  const int m = static_cast<int>(lz.t.order());
  if (top_k < 1 || top_k > m) throw std::invalid_argument("ritz: top_k out of range");

  const TridiagEigh eigh = tridiag_eigh(lz.t);
  SpikeBasis basis;
  basis.source = source;
  for (int i = 0; i < top_k; ++i) {
    basis.eigenvalues.push_back(eigh.eigenvalues[static_cast<std::size_t>(i)]);
    ParamVector v(lz.q.front().size());
    for (int j = 0; j < m; ++j) {
      axpy(eigh.eigenvectors(j, i), lz.q[static_cast<std::size_t>(j)], v);
    }
    basis.vectors.push_back(normalized(v));
  }
  basis.orth_error = orthonormality_error(basis.vectors);
  basis.validate();
  return basis;
}

}  // namespace hesskit
