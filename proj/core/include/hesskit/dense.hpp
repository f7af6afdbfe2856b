#pragma once

#include <Eigen/Core>

namespace hesskit {

struct DenseEigh {
  Eigen::VectorXd eigenvalues;  // descending
  Eigen::MatrixXd eigenvectors; // column i pairs with eigenvalues[i]
};

/// Full spectral decomposition of a dense symmetric matrix. Desk-scale oracle
/// only (dimension capped at 4096). Throws on asymmetry beyond `sym_tol`
/// relative to the matrix norm.
DenseEigh dense_eigh(const Eigen::MatrixXd& m, double sym_tol = 1e-8);

}  // namespace hesskit
