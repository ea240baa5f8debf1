#include "boclab/linalg.hpp"

#include "boclab/error.hpp"

#include <sstream>

namespace boclab {

SymEigen sym_eigen(const Matrix& a) {
  require_square(a, "sym_eigen");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(a));
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigendecomposition did not converge");
  }
  const Eigen::Index d = a.rows();
  SymEigen out{Vector(d), Matrix(d, d)};
  // Eigen returns ascending order with eigenvectors in columns.
  for (Eigen::Index i = 0; i < d; ++i) {
    out.values[i] = solver.eigenvalues()[d - 1 - i];
    out.vectors.row(i) = solver.eigenvectors().col(d - 1 - i).transpose();
  }
  return out;
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double asymmetry(const Matrix& a) {
  const double n = a.norm();
  if (n == 0.0) return 0.0;
  return (a - a.transpose()).norm() / n;
}

void require_square(const Matrix& a, const std::string& what) {
  if (a.rows() != a.cols()) {
    std::ostringstream msg;
    msg << what << ": expected a square matrix, got " << a.rows() << "x" << a.cols();
    throw InputError(msg.str());
  }
}

void require_same_dim(Eigen::Index a, Eigen::Index b, const std::string& what) {
  if (a != b) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw InputError(msg.str());
  }
}

}  // namespace boclab
