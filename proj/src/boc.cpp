#include "boclab/boc.hpp"

#include "boclab/error.hpp"
#include "boclab/matrix_io.hpp"
#include "boclab/rng.hpp"
#include "boclab/sampler.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace boclab {
namespace {

// Inverse and log-determinant of an estimated covariance via its symmetric
// eigendecomposition.
struct EmpiricalFactors {
  Matrix inverse;
  double log_det = 0.0;
};

EmpiricalFactors empirical_factors(const RowMatrix& x, double ridge, const char* which) {
  if (x.rows() < 1) throw InputError(std::string("empirical_rule: no samples for class ") + which);
  const double n = static_cast<double>(x.rows());
  const Eigen::Index d = x.cols();
  Matrix sigma = (x.transpose() * x) / n;
  sigma += ridge * Matrix::Identity(d, d);
  const SymEigen eig = sym_eigen(sigma);
  const double top = eig.values[0];
  const double bottom = eig.values[d - 1];
  if (!(top > 0.0) || bottom <= 1e-10 * top) {
    std::ostringstream msg;
    msg << "empirical_rule: class " << which << " covariance is singular (" << x.rows() << " samples, d=" << d
        << ", smallest eigenvalue " << bottom << "); use N > d or ridge > 0";
    throw NumericalError(msg.str());
  }
  EmpiricalFactors f;
  f.inverse = symmetrize(eig.vectors.transpose() * eig.values.cwiseInverse().asDiagonal() * eig.vectors);
  f.log_det = eig.values.array().log().sum();
  return f;
}

void require_zero_means(const CovarianceModel& ca, const CovarianceModel& cb, const char* what) {
  if (!ca.has_zero_mean() || !cb.has_zero_mean()) {
    throw InputError(std::string(what) + ": requires zero-mean (overlapping) classes");
  }
}

// Tr(Sigma_x^-1 Sigma_y) from the factors: sum_ij (1/lx_i) ly_j (Bx By^T)_ij^2.
double trace_inv_product(const CovarianceModel& x, const CovarianceModel& y) {
  const CovarianceModel cx = x.canonical();
  const CovarianceModel cy = y.canonical();
  const Matrix overlap = cx.basis().matrix() * cy.basis().matrix().transpose();
  const Vector inv_x = cx.spectrum().values().cwiseInverse();
  const Vector& ly = cy.spectrum().values();
  return (inv_x.asDiagonal() * overlap.cwiseAbs2() * ly.asDiagonal()).sum();
}

}  // namespace

bool QuadraticRule::has_linear_term(double tol) const {
  return q.size() > 0 && q.cwiseAbs().maxCoeff() > tol;
}

double QuadraticRule::beta(const Vector& x) const {
  require_same_dim(x.size(), dim(), "beta");
  return 0.5 * (x.dot(Q * x) - 2.0 * q.dot(x) + c);
}

Vector QuadraticRule::beta(const RowMatrix& x) const {
  require_same_dim(x.cols(), dim(), "beta");
  const RowMatrix xq = x * Q;
  Vector out = xq.cwiseProduct(x).rowwise().sum();
  out -= 2.0 * (x * q);
  out.array() += c;
  return 0.5 * out;
}

QuadraticRule QuadraticRule::negated() const { return {-Q, -q, -c}; }

QuadraticRule build_rule(const CovarianceModel& ca, const CovarianceModel& cb) {
  require_same_dim(ca.dim(), cb.dim(), "build_rule");
  const Matrix ia = ca.inverse();
  const Matrix ib = cb.inverse();
  QuadraticRule r;
  r.Q = symmetrize(ib - ia);
  r.q = ib * cb.mean() - ia * ca.mean();
  r.c = cb.mean().dot(ib * cb.mean()) - ca.mean().dot(ia * ca.mean()) - (ca.log_det() - cb.log_det());
  return r;
}

ClassExpectations class_expectations(const CovarianceModel& ca, const CovarianceModel& cb) {
  require_same_dim(ca.dim(), cb.dim(), "class_expectations");
  require_zero_means(ca, cb, "class_expectations");
  const double d = static_cast<double>(ca.dim());
  const double c = cb.log_det() - ca.log_det();
  return {0.5 * (trace_inv_product(cb, ca) - d + c), 0.5 * (d - trace_inv_product(ca, cb) + c)};
}

double generalized_harmonic(int d, double s) {
  double h = 0.0;
  // Smallest terms first for s > 0.
  for (int i = d; i >= 1; --i) h += std::pow(static_cast<double>(i), -s);
  return h;
}

ClassExpectations diagonal_expectations(int d, double /*alpha_a*/, double delta_alpha) {
  if (d < 1) throw InputError("diagonal_expectations: dimension must be at least 1");
  const double dd = static_cast<double>(d);
  const double log_factorial = std::lgamma(dd + 1.0);
  return {0.5 * (generalized_harmonic(d, -delta_alpha) - dd - delta_alpha * log_factorial),
          0.5 * (dd - generalized_harmonic(d, delta_alpha) - delta_alpha * log_factorial)};
}

double rotated_expectation(const Spectrum& spectrum) {
  const double d = static_cast<double>(spectrum.dim());
  return 0.5 * (spectrum.inverse_trace() * spectrum.trace() / d - d);
}

QuadraticRule empirical_rule(const RowMatrix& xa, const RowMatrix& xb, double ridge) {
  require_same_dim(xa.cols(), xb.cols(), "empirical_rule");
  if (ridge < 0.0) throw InputError("empirical_rule: ridge must be nonnegative");
  const EmpiricalFactors fa = empirical_factors(xa, ridge, "A");
  const EmpiricalFactors fb = empirical_factors(xb, ridge, "B");
  QuadraticRule r;
  r.Q = symmetrize(fb.inverse - fa.inverse);
  r.q = Vector::Zero(xa.cols());
  r.c = fb.log_det - fa.log_det;
  return r;
}

double empirical_deviation(const QuadraticRule& pop, const QuadraticRule& emp, const RowMatrix& x) {
  require_same_dim(pop.dim(), emp.dim(), "empirical_deviation");
  if (x.rows() == 0) throw InputError("empirical_deviation: no samples");
  return (emp.beta(x) - pop.beta(x)).cwiseAbs().mean();
}

double rule_accuracy(const QuadraticRule& rule, const CovarianceModel& ca, const CovarianceModel& cb,
                     int n_mc, std::uint64_t seed) {
  if (n_mc < 1) throw InputError("accuracy: n_mc must be at least 1");
  const std::uint64_t eval = derive_seed(seed, streams::kEvaluation);
  const Vector ba = rule.beta(sample_gaussian(ca, n_mc, eval));
  const Vector bb = rule.beta(sample_gaussian(cb, n_mc, eval ^ kClassBSalt));
  const double hit_a = static_cast<double>((ba.array() > 0.0).count());
  const double hit_b = static_cast<double>((bb.array() <= 0.0).count());
  return 0.5 * (hit_a + hit_b) / n_mc;
}

double boc_accuracy(const CovarianceModel& ca, const CovarianceModel& cb, int n_mc, std::uint64_t seed) {
  return rule_accuracy(build_rule(ca, cb), ca, cb, n_mc, seed);
}

void save_rule(const std::filesystem::path& dir, const std::string& stem, const QuadraticRule& rule,
               const std::string& provenance) {
  io::write_bocm(dir / (stem + ".Q.bocm"), rule.Q);
  io::write_bocm(dir / (stem + ".q.bocm"), rule.q);
  nlohmann::json meta{{"dim", rule.dim()}, {"c", rule.c}, {"provenance", provenance}};
  io::write_file_atomic(dir / (stem + ".json"), meta.dump(2) + "\n");
}

QuadraticRule load_rule(const std::filesystem::path& dir, const std::string& stem) {
  QuadraticRule r;
  r.Q = io::read_bocm(dir / (stem + ".Q.bocm"));
  r.q = io::read_bocm(dir / (stem + ".q.bocm"));
  const auto meta = nlohmann::json::parse(io::read_file(dir / (stem + ".json")));
  r.c = meta.at("c").get<double>();
  require_square(r.Q, "load_rule");
  require_same_dim(r.q.size(), r.Q.rows(), "load_rule");
  return r;
}

}  // namespace boclab
