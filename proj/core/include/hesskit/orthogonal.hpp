#pragma once

#include <vector>

#include "hesskit/param_vector.hpp"

namespace hesskit {

/// Classical Gram-Schmidt residual of z against an orthonormal basis, with a
/// conditional second pass when any inner product still exceeds `tol` after
/// the first (twice-is-enough policy). A zero residual is a valid return.
ParamVector gram_schmidt_residual(const ParamVector& z,
                                  const std::vector<ParamVector>& basis,
                                  double tol = 1e-10);

/// Gram-Schmidt QR pass over `vectors`: returns an orthonormal set spanning
/// the same subspace. Vectors whose residual norm falls below `drop_tol`
/// relative to their original norm are dropped (rank deficiency).
std::vector<ParamVector> qr_orthonormalize(const std::vector<ParamVector>& vectors,
                                           double drop_tol = 1e-12);

/// Largest |<u_i, u_j>| over i != j plus largest |1 - ||u_i|||; zero for a
/// perfectly orthonormal set.
double orthonormality_error(const std::vector<ParamVector>& vectors);

}  // namespace hesskit
