#pragma once

#include "boclab/linalg.hpp"

#include <cstdint>
#include <optional>

namespace boclab {

// Covariance eigenvalues, strictly positive and sorted descending.
class Spectrum {
 public:
  // Throws InputError when empty, non-positive, non-finite or not descending.
  explicit Spectrum(Vector values);

  const Vector& values() const { return values_; }
  Eigen::Index dim() const { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }

  double trace() const { return values_.sum(); }
  double inverse_trace() const { return values_.cwiseInverse().sum(); }
  double log_det() const;

  // Number of adjacent pairs whose relative gap is at most `rel_tol`.
  int degenerate_pairs(double rel_tol = 1e-12) const;

 private:
  Vector values_;
};

// lambda_i = (i+1)^(-1-alpha), 0-based i.
Spectrum powerlaw_spectrum(int d, double alpha);

// Square matrix whose rows are (approximately) orthonormal eigenvectors.
class Basis {
 public:
  // Exactly orthogonal basis; throws InvariantError if
  // orthogonality_error(matrix) exceeds `tol`.
  static Basis orthogonal(Matrix matrix, double tol = 1e-10);
  // Basis without an orthogonality requirement (flip-test composites).
  static Basis general(Matrix matrix);
  static Basis identity(int d);

  const Matrix& matrix() const { return matrix_; }
  Eigen::Index dim() const { return matrix_.rows(); }
  double orthogonality_error() const { return orth_error_; }
  bool is_orthogonal(double tol = 1e-10) const { return orth_error_ <= tol; }

 private:
  explicit Basis(Matrix matrix);
  Matrix matrix_;
  double orth_error_ = 0.0;
};

// Haar-distributed orthogonal matrix: QR of an iid Gaussian matrix with the
// columns of Q multiplied by sign(R_ii).
Basis haar_orthogonal(int d, std::uint64_t seed);

// (1/d) * ||V^T V - I||_F
double orthogonality_error(const Matrix& v);

// Inverse participation ratio (sum_n v_n^4)^-1 of the normalized vector.
double ipr(const Vector& v);

// A Gaussian class: Sigma = B^T diag(lambda) B with mean mu.
//
// When the basis is orthogonal every derived quantity (inverse, log-det,
// square root) is computed from the factors directly. Composite models with a
// non-orthogonal basis fall back to a numerical eigendecomposition of Sigma.
class CovarianceModel {
 public:
  CovarianceModel(Spectrum spectrum, Basis basis, std::optional<Vector> mean = std::nullopt);

  // Eigendecomposes a symmetric positive-definite matrix. Eigenvalues below
  // `relative_floor * lambda_max` are raised to that floor; with the default
  // floor of 0 a non-positive eigenvalue throws NumericalError.
  static CovarianceModel from_matrix(const Matrix& sigma, std::optional<Vector> mean = std::nullopt,
                                     double relative_floor = 0.0);

  // Second-moment estimate (1/N) X^T X of the rows of `x` (optionally
  // centered on the empirical mean first), eigendecomposed.
  static CovarianceModel estimate(const Matrix& x, bool center);

  const Spectrum& spectrum() const { return spectrum_; }
  const Basis& basis() const { return basis_; }
  const Vector& mean() const { return mean_; }
  Eigen::Index dim() const { return spectrum_.dim(); }
  bool has_zero_mean() const { return mean_.isZero(0.0); }

  Matrix matrix() const;
  // Sigma^-1. `relative_floor` clamps eigenvalues from below at
  // floor * lambda_max before inverting (0 means exact).
  Matrix inverse(double relative_floor = 0.0) const;
  double log_det() const;
  // Symmetric square root Sigma^(1/2).
  Matrix sqrt() const;
  // F with F F^T = Sigma, used to draw samples as mu + F z.
  Matrix sampling_factor() const;

  // Equivalent model with an exactly orthogonal eigenbasis. Identity for
  // models that already have one.
  CovarianceModel canonical() const;

  CovarianceModel with_mean(Vector mean) const;

 private:
  Spectrum spectrum_;
  Basis basis_;
  Vector mean_;
};

struct FlipOptions {
  // Project the composed basis onto the nearest orthogonal matrix
  // (polar decomposition). Off by default.
  bool reorthogonalize = false;
};

// Hybrid covariance V^T Lambda V: eigenvectors 0..tau_v-1 and eigenvalues
// 0..tau_lambda-1 from c1, the rest from c2. The result has zero mean.
// Eigen-pairs of the result are re-sorted jointly by eigenvalue, which leaves
// the matrix unchanged.
CovarianceModel compose_flip(const CovarianceModel& c1, const CovarianceModel& c2, int tau_lambda,
                             int tau_v, const FlipOptions& options = {});

}  // namespace boclab
