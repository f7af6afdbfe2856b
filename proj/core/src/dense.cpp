#include "hesskit/dense.hpp"

#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace hesskit {

DenseEigh dense_eigh(const Eigen::MatrixXd& m, double sym_tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("dense_eigh: not square");
  if (m.rows() > 4096) throw std::invalid_argument("dense_eigh: dimension exceeds oracle scale");
  const double scale = std::max(1.0, m.norm());
  if ((m - m.transpose()).norm() > sym_tol * scale) {
    throw std::invalid_argument("dense_eigh: input asymmetric beyond tolerance");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (m + m.transpose()));
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("dense_eigh: eigensolver failed");
  }

  const Eigen::Index n = m.rows();
  DenseEigh out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = solver.eigenvalues()(n - 1 - i);
    out.eigenvectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return out;
}

}  // namespace hesskit
