#pragma once

#include <vector>

#include <Eigen/Core>

namespace hesskit {

/// Symmetric tridiagonal matrix; only the diagonal and one off-diagonal are
/// stored. offdiag.size() must equal diag.size() - 1 (empty diag allowed).
struct TridiagonalMatrix {
  std::vector<double> diag;
  std::vector<double> offdiag;

  std::size_t order() const { return diag.size(); }
  void validate() const;
  Eigen::MatrixXd dense() const;
};

struct TridiagEigh {
  std::vector<double> eigenvalues;  // descending
  Eigen::MatrixXd eigenvectors;     // column i pairs with eigenvalues[i]
};

/// Full eigendecomposition of a symmetric tridiagonal matrix by implicit-shift
/// QL iteration with accumulated rotations. Eigenvalues come back descending,
/// eigenvector columns unit-norm.
TridiagEigh tridiag_eigh(const TridiagonalMatrix& t);

}  // namespace hesskit
