#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hesskit/oracle.hpp"
#include "hesskit/param_vector.hpp"
#include "hesskit/tridiagonal.hpp"

namespace hesskit {

struct LanczosResult {
  TridiagonalMatrix t;
  std::vector<ParamVector> q;  // orthonormal Krylov basis, one entry per step
  bool exhausted = false;      // early break, Krylov subspace exhausted
};

/// Lanczos tridiagonalization with full reorthogonalization at every step.
/// q1 must be unit norm. Breaks early when the residual norm falls below
/// tol * (running max of |alpha|, |beta|).
LanczosResult lanczos(const HvpOracle& oracle, const ParamVector& q1, int m,
                      double tol = 1e-10);

/// Convenience: seeded Gaussian start vector, normalized.
ParamVector lanczos_start_vector(std::size_t dim, std::uint64_t seed);

/// Ordered Ritz pairs lifted back to the full space.
struct SpikeBasis {
  std::vector<double> eigenvalues;    // descending
  std::vector<ParamVector> vectors;   // unit norm, pairwise orthogonal
  std::string source;
  double orth_error = 0.0;            // worst-case |<q_i, q_j>| / norm defect

  std::size_t size() const { return eigenvalues.size(); }
  void validate() const;
};

/// Top-k eigenpairs of T lifted through Q, explicitly renormalized.
SpikeBasis ritz(const LanczosResult& lz, int top_k, const std::string& source = "");

}  // namespace hesskit
