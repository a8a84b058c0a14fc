#pragma once

#include <Eigen/Core>

namespace gsr {

/// Eigendecomposition of a symmetric matrix, `vectors * diag(values) * vectors^T`.
///
/// Eigenvalues are sorted non-increasing. Each eigenvector is oriented so its
/// first entry with magnitude above 1e-12 is positive.
struct SymmetricEigen {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;

  Eigen::MatrixXd reconstruct() const;
};

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& matrix);

/// Frobenius norm of (a - b) divided by the Frobenius norm of b
/// (absolute when b is zero).
double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Length of the packed upper triangle of a dim x dim symmetric matrix.
inline Eigen::Index packed_size(Eigen::Index dim) { return dim * (dim + 1) / 2; }

/// Packs the upper triangle row by row. With `double_off_diagonal`, entries
/// off the diagonal are doubled so that pack(P, true).dot(pack(S, false))
/// equals trace(P * S) for symmetric P and S.
Eigen::VectorXd pack_symmetric(const Eigen::MatrixXd& matrix, bool double_off_diagonal = false);
Eigen::MatrixXd unpack_symmetric(const Eigen::Ref<const Eigen::VectorXd>& packed, Eigen::Index dim);

}  // namespace gsr
