#include "hesskit/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hesskit {

void TridiagonalMatrix::validate() const {
  if (!diag.empty() && offdiag.size() != diag.size() - 1) {
    throw std::invalid_argument("TridiagonalMatrix: offdiag must have order-1 entries");
  }
  if (diag.empty() && !offdiag.empty()) {
    throw std::invalid_argument("TridiagonalMatrix: offdiag without diagonal");
  }
}

Eigen::MatrixXd TridiagonalMatrix::dense() const {
  validate();
  const auto n = static_cast<Eigen::Index>(order());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = diag[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    m(i, i + 1) = offdiag[static_cast<std::size_t>(i)];
    m(i + 1, i) = offdiag[static_cast<std::size_t>(i)];
  }
  return m;
}

namespace {

double hypot2(double a, double b) { return std::hypot(a, b); }

}  // namespace

TridiagEigh tridiag_eigh(const TridiagonalMatrix& t) {
  t.validate();
  const int n = static_cast<int>(t.order());
  TridiagEigh result;
  if (n == 0) {
    result.eigenvectors.resize(0, 0);
    return result;
  }

  std::vector<double> d = t.diag;
  std::vector<double> e(t.offdiag.begin(), t.offdiag.end());
  e.push_back(0.0);
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(n, n);

  // Implicit-shift QL with Wilkinson shifts, rotations accumulated into z.
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (++iter == 50) {
          throw std::runtime_error("tridiag_eigh: QL iteration failed to converge");
        }
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = hypot2(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        for (int i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = hypot2(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            f = z(k, i + 1);
            z(k, i + 1) = s * z(k, i) + c * f;
            z(k, i) = c * z(k, i) - s * f;
          }
        }
        if (r == 0.0 && m - 1 >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return d[a] > d[b]; });

  result.eigenvalues.resize(static_cast<std::size_t>(n));
  result.eigenvectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    result.eigenvalues[static_cast<std::size_t>(i)] = d[order[static_cast<std::size_t>(i)]];
    result.eigenvectors.col(i) = z.col(order[static_cast<std::size_t>(i)]);
    result.eigenvectors.col(i).normalize();
  }
  return result;
}

}  // namespace hesskit
