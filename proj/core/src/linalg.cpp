#include "gsr/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace gsr {

Eigen::MatrixXd SymmetricEigen::reconstruct() const {
  return vectors * values.asDiagonal() * vectors.transpose();
}

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& matrix) {
  const Eigen::Index n = matrix.rows();
  const Eigen::MatrixXd sym = 0.5 * (matrix + matrix.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);

  // Eigen returns ascending order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return solver.eigenvalues()(a) > solver.eigenvalues()(b);
  });

  SymmetricEigen out;
  out.vectors.resize(n, n);
  out.values.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.values(j) = solver.eigenvalues()(src);
    auto column = out.vectors.col(j);
    column = solver.eigenvectors().col(src);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (std::abs(column(r)) > 1e-12) {
        if (column(r) < 0) column = -column;
        break;
      }
    }
  }
  return out;
}

double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double diff = (a - b).norm();
  const double scale = b.norm();
  return scale > 0.0 ? diff / scale : diff;
}

Eigen::VectorXd pack_symmetric(const Eigen::MatrixXd& matrix, bool double_off_diagonal) {
  const Eigen::Index n = matrix.rows();
  Eigen::VectorXd packed(packed_size(n));
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < n; ++r) {
    packed(k++) = matrix(r, r);
    for (Eigen::Index c = r + 1; c < n; ++c) {
      packed(k++) = double_off_diagonal ? 2.0 * matrix(r, c) : matrix(r, c);
    }
  }
  return packed;
}

Eigen::MatrixXd unpack_symmetric(const Eigen::Ref<const Eigen::VectorXd>& packed, Eigen::Index dim) {
  Eigen::MatrixXd out(dim, dim);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < dim; ++r) {
    out(r, r) = packed(k++);
    for (Eigen::Index c = r + 1; c < dim; ++c) {
      out(r, c) = packed(k);
      out(c, r) = packed(k);
      ++k;
    }
  }
  return out;
}

}  // namespace gsr
