#pragma once

#include <Eigen/Dense>

#include <string>

namespace boclab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Row-major storage for sample matrices so that one row is one contiguous sample.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Symmetric eigendecomposition with eigenvalues sorted descending.
// Row i of `vectors` is the eigenvector of `values[i]`, so that
// A = vectors^T * diag(values) * vectors.
struct SymEigen {
  Vector values;
  Matrix vectors;
};

SymEigen sym_eigen(const Matrix& a);

// (A + A^T) / 2
Matrix symmetrize(const Matrix& a);

// ||A - A^T||_F / ||A||_F, zero for the zero matrix.
double asymmetry(const Matrix& a);

void require_square(const Matrix& a, const std::string& what);
void require_same_dim(Eigen::Index a, Eigen::Index b, const std::string& what);

}  // namespace boclab
