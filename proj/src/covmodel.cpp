#include "boclab/covmodel.hpp"

#include "boclab/error.hpp"
#include "boclab/log.hpp"
#include "boclab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace boclab {

Spectrum::Spectrum(Vector values) : values_(std::move(values)) {
  if (values_.size() == 0) throw InputError("spectrum: dimension must be at least 1");
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] <= 0.0) {
      std::ostringstream msg;
      msg << "spectrum: eigenvalue " << i << " is not strictly positive (" << values_[i] << ")";
      throw InputError(msg.str());
    }
    if (i > 0 && values_[i] > values_[i - 1]) {
      throw InputError("spectrum: eigenvalues must be sorted descending");
    }
  }
  if (const int degenerate = degenerate_pairs(); degenerate > 0) {
    std::ostringstream msg;
    msg << "spectrum has " << degenerate
        << " degenerate eigenvalue pair(s); eigenvector identity is basis-dependent there";
    log_note(msg.str());
  }
}

double Spectrum::log_det() const { return values_.array().log().sum(); }

int Spectrum::degenerate_pairs(double rel_tol) const {
  int n = 0;
  for (Eigen::Index i = 1; i < values_.size(); ++i) {
    if (values_[i - 1] - values_[i] <= rel_tol * values_[i - 1]) ++n;
  }
  return n;
}

Spectrum powerlaw_spectrum(int d, double alpha) {
  if (d < 1) throw InputError("powerlaw_spectrum: dimension must be at least 1");
  if (alpha < -1.0) throw InputError("powerlaw_spectrum: alpha < -1 gives an increasing spectrum");
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = std::pow(static_cast<double>(i + 1), -1.0 - alpha);
  return Spectrum(std::move(v));
}

double orthogonality_error(const Matrix& v) {
  require_square(v, "orthogonality_error");
  const Eigen::Index d = v.rows();
  if (d == 0) throw InputError("orthogonality_error: empty matrix");
  return (v.transpose() * v - Matrix::Identity(d, d)).norm() / static_cast<double>(d);
}

Basis::Basis(Matrix matrix) : matrix_(std::move(matrix)) {
  require_square(matrix_, "basis");
  if (matrix_.rows() == 0) throw InputError("basis: dimension must be at least 1");
  orth_error_ = boclab::orthogonality_error(matrix_);
}

Basis Basis::orthogonal(Matrix matrix, double tol) {
  Basis b(std::move(matrix));
  if (b.orth_error_ > tol) {
    std::ostringstream msg;
    msg << "basis: orthogonality error " << b.orth_error_ << " exceeds " << tol;
    throw InvariantError(msg.str());
  }
  return b;
}

Basis Basis::general(Matrix matrix) { return Basis(std::move(matrix)); }

Basis Basis::identity(int d) {
  if (d < 1) throw InputError("basis: dimension must be at least 1");
  return Basis(Matrix::Identity(d, d));
}

Basis haar_orthogonal(int d, std::uint64_t seed) {
  if (d < 1) throw InputError("haar_orthogonal: dimension must be at least 1");
  Engine engine(seed);
  std::normal_distribution<double> normal;
  Matrix g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = normal(engine);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return Basis::orthogonal(std::move(q), 1e-12);
}

double ipr(const Vector& v) {
  const double n = v.norm();
  if (v.size() == 0 || n == 0.0) throw InputError("ipr: zero vector");
  return 1.0 / (v / n).array().pow(4).sum();
}

CovarianceModel::CovarianceModel(Spectrum spectrum, Basis basis, std::optional<Vector> mean)
    : spectrum_(std::move(spectrum)), basis_(std::move(basis)) {
  require_same_dim(spectrum_.dim(), basis_.dim(), "covariance model spectrum/basis");
  mean_ = mean ? std::move(*mean) : Vector::Zero(spectrum_.dim());
  require_same_dim(mean_.size(), spectrum_.dim(), "covariance model mean");
}

CovarianceModel CovarianceModel::from_matrix(const Matrix& sigma, std::optional<Vector> mean,
                                             double relative_floor) {
  require_square(sigma, "covariance matrix");
  if (!sigma.allFinite()) throw InputError("covariance matrix has non-finite entries");
  SymEigen eig = sym_eigen(sigma);
  const double top = eig.values[0];
  if (!(top > 0.0)) throw NumericalError("covariance matrix is not positive definite");
  const double floor = relative_floor * top;
  double adjusted = 0.0;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values[i] < floor) {
      adjusted = std::max(adjusted, floor - eig.values[i]);
      eig.values[i] = floor;
    }
    if (!(eig.values[i] > 0.0)) {
      std::ostringstream msg;
      msg << "covariance matrix is not positive definite (eigenvalue " << eig.values[i] << ")";
      throw NumericalError(msg.str());
    }
  }
  if (adjusted > 0.0) {
    std::ostringstream msg;
    msg << "eigenvalues floored at " << floor << " (max adjustment " << adjusted << ")";
    log_note(msg.str());
  }
  return CovarianceModel(Spectrum(std::move(eig.values)), Basis::general(std::move(eig.vectors)),
                         std::move(mean));
}

CovarianceModel CovarianceModel::estimate(const Matrix& x, bool center) {
  if (x.rows() < 1 || x.cols() < 1) throw InputError("estimate: empty sample matrix");
  const double n = static_cast<double>(x.rows());
  if (center) {
    const Vector mu = x.colwise().mean().transpose();
    const Matrix xc = x.rowwise() - mu.transpose();
    return from_matrix(xc.transpose() * xc / n, mu);
  }
  return from_matrix(x.transpose() * x / n);
}

Matrix CovarianceModel::matrix() const {
  const Matrix& b = basis_.matrix();
  return symmetrize(b.transpose() * spectrum_.values().asDiagonal() * b);
}

Matrix CovarianceModel::inverse(double relative_floor) const {
  if (!basis_.is_orthogonal()) return canonical().inverse(relative_floor);
  const double floor = relative_floor * spectrum_[0];
  Vector inv = spectrum_.values().cwiseMax(floor).cwiseInverse();
  const Matrix& b = basis_.matrix();
  return symmetrize(b.transpose() * inv.asDiagonal() * b);
}

double CovarianceModel::log_det() const {
  if (!basis_.is_orthogonal()) return canonical().log_det();
  return spectrum_.log_det();
}

Matrix CovarianceModel::sqrt() const {
  if (!basis_.is_orthogonal()) return canonical().sqrt();
  const Matrix& b = basis_.matrix();
  return symmetrize(b.transpose() * spectrum_.values().cwiseSqrt().asDiagonal() * b);
}

Matrix CovarianceModel::sampling_factor() const {
  // Valid for any basis: (B^T sqrt(L)) (B^T sqrt(L))^T = B^T L B.
  return basis_.matrix().transpose() * spectrum_.values().cwiseSqrt().asDiagonal();
}

CovarianceModel CovarianceModel::canonical() const {
  if (basis_.is_orthogonal()) return *this;
  return from_matrix(matrix(), mean_);
}

CovarianceModel CovarianceModel::with_mean(Vector mean) const {
  return CovarianceModel(spectrum_, basis_, std::move(mean));
}

CovarianceModel compose_flip(const CovarianceModel& c1, const CovarianceModel& c2, int tau_lambda,
                             int tau_v, const FlipOptions& options) {
  require_same_dim(c1.dim(), c2.dim(), "compose_flip");
  const int d = static_cast<int>(c1.dim());
  if (tau_lambda < 0 || tau_lambda > d || tau_v < 0 || tau_v > d) {
    std::ostringstream msg;
    msg << "compose_flip: thresholds (" << tau_lambda << ", " << tau_v << ") outside [0, " << d << "]";
    throw InputError(msg.str());
  }
  const Matrix& v1 = c1.basis().matrix();
  const Matrix& v2 = c2.basis().matrix();
  Matrix v(d, d);
  Vector lambda(d);
  for (int i = 0; i < d; ++i) {
    v.row(i) = i < tau_v ? v1.row(i) : v2.row(i);
    lambda[i] = i < tau_lambda ? c1.spectrum()[i] : c2.spectrum()[i];
  }
  if (options.reorthogonalize) {
    Eigen::JacobiSVD<Matrix> svd(v, Eigen::ComputeFullU | Eigen::ComputeFullV);
    v = svd.matrixU() * svd.matrixV().transpose();
  }

  // Mixed spectra need not be descending; permuting eigen-pairs together
  // keeps V^T Lambda V intact.
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lambda[a] > lambda[b]; });
  Matrix v_sorted(d, d);
  Vector l_sorted(d);
  for (int i = 0; i < d; ++i) {
    v_sorted.row(i) = v.row(order[i]);
    l_sorted[i] = lambda[order[i]];
  }
  return CovarianceModel(Spectrum(std::move(l_sorted)), Basis::general(std::move(v_sorted)));
}

}  // namespace boclab
