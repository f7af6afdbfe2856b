#pragma once

#include <vector>

#include "hesskit/lanczos.hpp"

namespace hesskit {

struct PrincipalAngles {
  int k = 0;
  double max_degrees = 0.0;
  double mean_degrees = 0.0;
};

struct StabilityReport {
  double matched_cosine_mean = 0.0;
  double matched_cosine_min = 0.0;
  double diagonal_cosine_mean = 0.0;
  std::vector<PrincipalAngles> angles;  // one entry per requested k
};

/// Compares two spike bases: matched cosines use a greedy optimal assignment
/// on |cosine|, diagonal cosines pair index to index, principal angles come
/// from the singular values of Qa^t Qb restricted to the top-k columns.
StabilityReport subspace_stability(const SpikeBasis& a, const SpikeBasis& b,
                                   const std::vector<int>& ks);

}  // namespace hesskit
