#include "hesskit/stability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace hesskit {

StabilityReport subspace_stability(const SpikeBasis& a, const SpikeBasis& b,
                                   const std::vector<int>& ks) {
  if (a.vectors.empty() || b.vectors.empty()) {
    throw std::invalid_argument("subspace_stability: empty basis");
  }
  if (a.vectors.front().size() != b.vectors.front().size()) {
    throw std::invalid_argument("subspace_stability: ambient dimension mismatch");
  }
  const int ka = static_cast<int>(a.size());
  const int kb = static_cast<int>(b.size());
  const int n_pairs = std::min(ka, kb);

  Eigen::MatrixXd cos_matrix(ka, kb);
  for (int i = 0; i < ka; ++i) {
    for (int j = 0; j < kb; ++j) {
      cos_matrix(i, j) = std::abs(dot(a.vectors[static_cast<std::size_t>(i)],
                                      b.vectors[static_cast<std::size_t>(j)]));
    }
  }

  StabilityReport report;

  // Optimal assignment on |cosine| (bitmask DP over the smaller side), so the
  // matched mean can never fall below the index-to-index pairing.
  {
    const bool a_small = ka <= kb;
    const int rows = a_small ? ka : kb;
    const int cols = a_small ? kb : ka;
    if (cols > 24) throw std::invalid_argument("subspace_stability: basis too large");
    const auto cost = [&](int r, int c) {
      return a_small ? cos_matrix(r, c) : cos_matrix(c, r);
    };
    const std::size_t n_masks = std::size_t{1} << cols;
    std::vector<double> best(n_masks, -1.0);
    std::vector<int> chosen(n_masks, -1);
    best[0] = 0.0;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if (best[mask] < 0.0) continue;
      const int row = __builtin_popcountll(mask);
      if (row >= rows) continue;
      for (int c = 0; c < cols; ++c) {
        if (mask & (std::size_t{1} << c)) continue;
        const std::size_t next = mask | (std::size_t{1} << c);
        const double value = best[mask] + cost(row, c);
        if (value > best[next]) {
          best[next] = value;
          chosen[next] = c;
        }
      }
    }
    std::size_t best_mask = 0;
    double best_sum = -1.0;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if (__builtin_popcountll(mask) == rows && best[mask] > best_sum) {
        best_sum = best[mask];
        best_mask = mask;
      }
    }
    double min_c = 1.0;
    std::size_t mask = best_mask;
    for (int row = rows - 1; row >= 0; --row) {
      const int c = chosen[mask];
      min_c = std::min(min_c, cost(row, c));
      mask &= ~(std::size_t{1} << c);
    }
    report.matched_cosine_mean = best_sum / n_pairs;
    report.matched_cosine_min = min_c;
  }

  {
    double sum = 0.0;
    for (int i = 0; i < n_pairs; ++i) sum += cos_matrix(i, i);
    report.diagonal_cosine_mean = sum / n_pairs;
  }

  for (int k : ks) {
    if (k < 1 || k > n_pairs) {
      throw std::invalid_argument("subspace_stability: k exceeds basis size");
    }
    Eigen::MatrixXd overlap(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        overlap(i, j) = dot(a.vectors[static_cast<std::size_t>(i)],
                            b.vectors[static_cast<std::size_t>(j)]);
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(overlap);
    PrincipalAngles pa;
    pa.k = k;
    double sum = 0.0;
    double worst = 0.0;
    for (int i = 0; i < k; ++i) {
      const double c = std::clamp(svd.singularValues()(i), 0.0, 1.0);
      const double deg = std::acos(c) * 180.0 / 3.14159265358979323846;
      sum += deg;
      worst = std::max(worst, deg);
    }
    pa.max_degrees = worst;
    pa.mean_degrees = sum / k;
    report.angles.push_back(pa);
  }
  return report;
}

}  // namespace hesskit
