#include "hesskit/orthogonal.hpp"

#include <cmath>

namespace hesskit {

ParamVector gram_schmidt_residual(const ParamVector& z,
                                  const std::vector<ParamVector>& basis,
                                  double tol) {
  ParamVector r = z;
  for (const auto& q : basis) axpy(-dot(q, r), q, r);

  bool needs_second_pass = false;
  for (const auto& q : basis) {
    if (std::abs(dot(q, r)) > tol) {
      needs_second_pass = true;
      break;
    }
  }
  if (needs_second_pass) {
    for (const auto& q : basis) axpy(-dot(q, r), q, r);
  }
  return r;
}

std::vector<ParamVector> qr_orthonormalize(const std::vector<ParamVector>& vectors,
                                           double drop_tol) {
  std::vector<ParamVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    const double original = norm(v);
    if (original == 0.0) continue;
    ParamVector r = gram_schmidt_residual(v, out);
    const double rn = norm(r);
    if (rn <= drop_tol * original) continue;
    scale(r, 1.0 / rn);
    out.push_back(std::move(r));
  }
  return out;
}

double orthonormality_error(const std::vector<ParamVector>& vectors) {
  double worst = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    worst = std::max(worst, std::abs(1.0 - norm(vectors[i])));
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      worst = std::max(worst, std::abs(dot(vectors[i], vectors[j])));
    }
  }
  return worst;
}

}  // namespace hesskit
