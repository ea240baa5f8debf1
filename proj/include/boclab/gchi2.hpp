#pragma once

#include "boclab/boc.hpp"
#include "boclab/covmodel.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace boclab {

// Law of beta under one class: scale * sum_i w_i chi2_1 + offset.
struct GChi2Params {
  std::vector<double> weights;
  double offset = 0.0;
  double scale = 0.5;
  // Weights below 1e-12 * max|w| removed when the params were built.
  int dropped = 0;

  double mean() const;
  double variance() const;
  bool is_degenerate() const { return weights.empty(); }
};

// Weights are the eigenvalues of Sigma^(1/2) Q Sigma^(1/2) for the class
// covariance Sigma; offset = c / 2. Rules with a linear term are rejected.
GChi2Params gchi2_from_rule(const QuadraticRule& rule, const CovarianceModel& c_eval);

enum class InversionMethod { kImhof, kMonteCarlo, kDegenerate };
std::string to_string(InversionMethod m);

struct InversionResult {
  double value = 0.0;
  double error_bound = 0.0;
  InversionMethod method = InversionMethod::kImhof;
};

struct InversionOptions {
  double abs_tol = 1e-6;
  // Monte-Carlo takes over when the quadrature bound exceeds this.
  double fallback_bound = 1e-5;
  bool allow_fallback = true;
  int mc_samples = 1'000'000;
  std::uint64_t mc_seed = 0x6A09E667F3BCC908ULL;
};

// Characteristic-function inversion of one GChi2Params (Imhof's integrals).
// Construction precomputes the truncation points, which depend only on the
// weights; cdf/pdf may then be called for many t.
class GChi2Distribution {
 public:
  explicit GChi2Distribution(GChi2Params params, InversionOptions options = {});

  const GChi2Params& params() const { return params_; }

  InversionResult cdf_eval(double t) const;
  InversionResult pdf_eval(double t) const;
  double cdf(double t) const { return cdf_eval(t).value; }
  double pdf(double t) const { return pdf_eval(t).value; }

  // Quantile by bisection on the cdf.
  double quantile(double p) const;

  // Sampled law of beta, sorted ascending. Deterministic per seed.
  std::vector<double> monte_carlo_draws(int n, std::uint64_t seed) const;

 private:
  struct Envelope {
    bool truncate = false;  // a finite truncation point reaches the tolerance
    double upper = 0.0;     // truncation point
    double tail = 0.0;      // bound on the discarded tail
  };

  InversionResult imhof_cdf(double x) const;
  InversionResult imhof_pdf(double x) const;
  InversionResult fallback(double t, const InversionResult& failed, bool density) const;
  Envelope plan_envelope(int decay_offset) const;

  GChi2Params params_;
  InversionOptions options_;
  std::vector<double> lambda_;  // the nonzero weights
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
  Envelope cdf_envelope_;
  Envelope pdf_envelope_;
};

// Convenience wrappers.
double cdf(const GChi2Params& p, double t, const InversionOptions& options = {});
double pdf(const GChi2Params& p, double t, const InversionOptions& options = {});

// (P(beta <= 0 | A), P(beta > 0 | B)) for zero-mean classes. A rule with
// beta identically zero gives (0.5, 0.5).
std::pair<double, double> error_rates(const QuadraticRule& rule, const CovarianceModel& ca,
                                      const CovarianceModel& cb, const InversionOptions& options = {});

// sup_t |F(t) - F_n(t)| against the empirical cdf of `sorted_samples`.
// The exact cdf is evaluated at every `stride`-th order statistic and
// monotonicity bounds the gaps in between, so the result is an upper bound
// that is exact for stride = 1.
double ks_distance(const GChi2Distribution& dist, const std::vector<double>& sorted_samples, int stride = 1);

// Density on an evenly spaced grid of n points over [lo, hi].
std::vector<std::pair<double, double>> pdf_grid(const GChi2Distribution& dist, double lo, double hi, int n);

}  // namespace boclab
