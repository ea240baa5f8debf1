#pragma once

#include "boclab/covmodel.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace boclab {

// Bayes-optimal two-class rule for Gaussian classes:
//   beta(x) = 1/2 (x^T Q x - 2 q^T x + c),  pick class A iff beta(x) > 0,
// with Q = Sigma_B^-1 - Sigma_A^-1, q = Sigma_B^-1 mu_B - Sigma_A^-1 mu_A and
// c = mu_B^T Sigma_B^-1 mu_B - mu_A^T Sigma_A^-1 mu_A - log(|Sigma_A| / |Sigma_B|).
struct QuadraticRule {
  Matrix Q;
  Vector q;
  double c = 0.0;

  Eigen::Index dim() const { return Q.rows(); }
  bool has_linear_term(double tol = 0.0) const;

  double beta(const Vector& x) const;
  // beta for every row of x.
  Vector beta(const RowMatrix& x) const;

  QuadraticRule negated() const;
};

QuadraticRule build_rule(const CovarianceModel& ca, const CovarianceModel& cb);

// Mean of beta under each class (zero-mean classes only):
//   beta_a = 1/2 (Tr(Sigma_B^-1 Sigma_A) - d + c)
//   beta_b = 1/2 (d - Tr(Sigma_A^-1 Sigma_B) + c),  c = -log|Sigma_B^-1 Sigma_A|.
// The overall 1/2 matches the definition of beta above.
struct ClassExpectations {
  double beta_a = 0.0;
  double beta_b = 0.0;
};

ClassExpectations class_expectations(const CovarianceModel& ca, const CovarianceModel& cb);

// H_d^(s) = sum_{i=1..d} i^-s
double generalized_harmonic(int d, double s);

// Closed form for diagonal power-law classes with exponents alpha_a and
// alpha_a + delta_alpha (the result does not depend on alpha_a).
ClassExpectations diagonal_expectations(int d, double alpha_a, double delta_alpha);

// Haar average of beta_a for two classes sharing `spectrum` in independent
// random bases: 1/2 (Tr(L^-1) Tr(L) / d - d). The class-B mean is its negation.
double rotated_expectation(const Spectrum& spectrum);

// Rule from second-moment estimates Sigma_N = X^T X / N (+ ridge I) of
// zero-mean samples. Throws NumericalError when an estimate is singular.
QuadraticRule empirical_rule(const RowMatrix& xa, const RowMatrix& xb, double ridge = 0.0);

// mean_x |beta_emp(x) - beta_pop(x)| over the rows of x.
double empirical_deviation(const QuadraticRule& pop, const QuadraticRule& emp, const RowMatrix& x);

// Monte-Carlo accuracy of sign(beta) on n_mc fresh samples per class. Class A
// draws use derive_seed(seed, streams::kEvaluation) so they never coincide
// with a training set generated from `seed`.
double boc_accuracy(const CovarianceModel& ca, const CovarianceModel& cb, int n_mc, std::uint64_t seed);
double rule_accuracy(const QuadraticRule& rule, const CovarianceModel& ca, const CovarianceModel& cb,
                     int n_mc, std::uint64_t seed);

// Q and q as BOCM blocks plus a JSON sidecar {dim, c, seed chain}.
void save_rule(const std::filesystem::path& dir, const std::string& stem, const QuadraticRule& rule,
               const std::string& provenance = "");
QuadraticRule load_rule(const std::filesystem::path& dir, const std::string& stem);

}  // namespace boclab
