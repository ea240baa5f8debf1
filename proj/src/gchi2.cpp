#include "boclab/gchi2.hpp"

#include "boclab/error.hpp"
#include "boclab/log.hpp"
#include "boclab/rng.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace boclab {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxHeadPanels = 20000;
constexpr int kMaxTailPanels = 600;
// Past this multiple of 1/lambda_min every arctan term is close to its limit,
// so half-period panels form a smoothly alternating series.
constexpr double kAsymptoticFactor = 16.0;

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;

// Accumulates an integral and the sum of per-panel error estimates.
struct Accumulator {
  double value = 0.0;
  double error = 0.0;

  template <class F>
  void add(F&& f, double a, double b) {
    double err = 0.0;
    value += Kronrod::integrate(f, a, b, 4, 1e-10, &err);
    error += err;
  }
};

// Iterated averaging of partial sums; accelerates series whose terms
// alternate in sign with slowly varying magnitude.
double averaged_limit(const std::vector<double>& partial, std::size_t depth) {
  const std::size_t k = std::min(depth, partial.size());
  std::vector<double> s(partial.end() - static_cast<std::ptrdiff_t>(k), partial.end());
  for (std::size_t level = 1; level < k; ++level) {
    for (std::size_t i = 0; i + level < k; ++i) s[i] = 0.5 * (s[i] + s[i + 1]);
  }
  return s.front();
}

}  // namespace

double GChi2Params::mean() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return scale * s + offset;
}

double GChi2Params::variance() const {
  double s = 0.0;
  for (double w : weights) s += w * w;
  return 2.0 * scale * scale * s;
}

GChi2Params gchi2_from_rule(const QuadraticRule& rule, const CovarianceModel& c_eval) {
  require_same_dim(rule.dim(), c_eval.dim(), "gchi2_from_rule");
  if (rule.has_linear_term()) {
    throw InputError("gchi2_from_rule: rule has a linear term (non-overlapping means are not supported)");
  }
  if (!c_eval.has_zero_mean()) throw InputError("gchi2_from_rule: evaluation class must have zero mean");
  const Matrix root = c_eval.sqrt();
  const SymEigen eig = sym_eigen(root * rule.Q * root);

  GChi2Params p;
  p.offset = 0.5 * rule.c;
  p.scale = 0.5;
  const double top = eig.values.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    const double w = eig.values[i];
    if (top > 0.0 && std::abs(w) >= 1e-12 * top) {
      p.weights.push_back(w);
    } else {
      ++p.dropped;
    }
  }
  return p;
}

std::string to_string(InversionMethod m) {
  switch (m) {
    case InversionMethod::kImhof:
      return "imhof";
    case InversionMethod::kMonteCarlo:
      return "monte-carlo";
    case InversionMethod::kDegenerate:
      return "degenerate";
  }
  return "unknown";
}

GChi2Distribution::GChi2Distribution(GChi2Params params, InversionOptions options)
    : params_(std::move(params)), options_(options) {
  if (!(params_.scale > 0.0)) throw InputError("gchi2: scale must be positive");
  for (double w : params_.weights) {
    if (!std::isfinite(w)) throw InputError("gchi2: non-finite weight");
    if (w != 0.0) lambda_.push_back(w);
  }
  if (lambda_.empty()) return;
  lambda_min_ = std::abs(lambda_.front());
  lambda_max_ = lambda_min_;
  for (double w : lambda_) {
    lambda_min_ = std::min(lambda_min_, std::abs(w));
    lambda_max_ = std::max(lambda_max_, std::abs(w));
  }
  cdf_envelope_ = plan_envelope(1);
  pdf_envelope_ = plan_envelope(0);
}

// The modulus rho(u) = prod_j (1 + lambda_j^2 u^2)^(1/4) is at least
// prod_j (|lambda_j| u)^(1/2), so the integrand amplitude u^-e / rho(u) is
// bounded by P u^(-e-k), k = n/2, P = prod_j |lambda_j|^(-1/2). Integrating
// the bound from U to infinity gives P U^(1-e-k) / (e+k-1).
GChi2Distribution::Envelope GChi2Distribution::plan_envelope(int decay_offset) const {
  Envelope env;
  const double k = 0.5 * static_cast<double>(lambda_.size());
  const double p = static_cast<double>(decay_offset) + k - 1.0;
  if (p <= 0.0) return env;
  double log_p = 0.0;
  for (double w : lambda_) log_p -= 0.5 * std::log(std::abs(w));
  // Budget a quarter of the tolerance (in integral units) to the tail.
  const double budget = 0.25 * options_.abs_tol * kPi;
  const double log_upper = (log_p - std::log(p * budget)) / p;
  const double upper = std::exp(log_upper);
  if (!std::isfinite(upper) || upper * lambda_min_ > 1e4) return env;
  env.truncate = true;
  env.upper = std::max(upper, 1.0 / lambda_max_);
  env.tail = std::exp(log_p - p * std::log(env.upper)) / p;
  return env;
}

namespace {

// Panel boundaries on [0, upper]: widths double from 0.5 / lambda_max and
// never exceed max_width.
std::vector<double> head_panels(double upper, double lambda_max, double max_width) {
  std::vector<double> nodes{0.0};
  double u = 0.0;
  double width = 0.5 / lambda_max;
  while (u < upper) {
    const double step = std::min(width, max_width);
    u = std::min(upper, u + step);
    nodes.push_back(u);
    width *= 2.0;
    if (static_cast<int>(nodes.size()) > kMaxHeadPanels) {
      throw NumericalError("gchi2: too many quadrature panels");
    }
  }
  return nodes;
}

struct Integrand {
  const std::vector<double>& lambda;
  double x;

  double theta(double u) const {
    double s = 0.0;
    for (double l : lambda) s += std::atan(l * u);
    return 0.5 * s - 0.5 * x * u;
  }
  double log_rho(double u) const {
    double s = 0.0;
    for (double l : lambda) s += std::log1p((l * u) * (l * u));
    return 0.25 * s;
  }
  double cdf_term(double u) const {
    if (u == 0.0) {
      double s = 0.0;
      for (double l : lambda) s += l;
      return 0.5 * (s - x);
    }
    return std::sin(theta(u)) * std::exp(-log_rho(u)) / u;
  }
  double pdf_term(double u) const { return std::cos(theta(u)) * std::exp(-log_rho(u)); }
};

// integral_0^inf f(u) du for one of the two Imhof integrands.
InversionResult integrate_imhof(const Integrand& g, bool density, double lambda_min, double lambda_max,
                                bool truncate, double upper, double tail_bound, double abs_tol) {
  auto f = [&](double u) { return density ? g.pdf_term(u) : g.cdf_term(u); };
  const double omega = 0.5 * std::abs(g.x);
  const bool oscillating = omega > 1e-9 * lambda_max;
  const double half_period = oscillating ? kPi / omega : std::numeric_limits<double>::infinity();

  Accumulator acc;
  // Fast oscillation over a long truncated range is cheaper as an alternating tail.
  if (truncate && upper / half_period > 0.5 * kMaxHeadPanels) truncate = false;
  if (truncate) {
    const auto nodes = head_panels(upper, lambda_max, half_period);
    for (std::size_t i = 1; i < nodes.size(); ++i) acc.add(f, nodes[i - 1], nodes[i]);
    return {acc.value, acc.error + tail_bound, InversionMethod::kImhof};
  }

  double head_end = kAsymptoticFactor / lambda_min;
  if (oscillating) head_end = std::max(head_end, 4.0 * half_period);
  const auto nodes = head_panels(head_end, lambda_max, half_period);
  for (std::size_t i = 1; i < nodes.size(); ++i) acc.add(f, nodes[i - 1], nodes[i]);

  if (!oscillating) {
    // Phase tends to a constant; the tail is a monotone algebraic decay.
    if (density && g.lambda.size() <= 2) {
      return {acc.value, std::numeric_limits<double>::infinity(), InversionMethod::kImhof};
    }
    boost::math::quadrature::exp_sinh<double> integrator;
    double err = 0.0;
    double l1 = 0.0;
    const double start = nodes.back();
    const double tail = integrator.integrate([&](double s) { return f(start + s); }, 1e-12, &err, &l1);
    return {acc.value + tail, acc.error + err, InversionMethod::kImhof};
  }

  // Alternating tail: sum half-period panels and extrapolate the partial sums.
  std::vector<double> partial;
  double running = 0.0;
  double previous = 0.0;
  double change = std::numeric_limits<double>::infinity();
  double a = nodes.back();
  for (int m = 0; m < kMaxTailPanels; ++m) {
    Accumulator panel;
    panel.add(f, a, a + half_period);
    a += half_period;
    running += panel.value;
    acc.error += panel.error;
    partial.push_back(running);
    if (partial.size() < 6) continue;
    const double estimate = averaged_limit(partial, 12);
    change = std::abs(estimate - previous);
    previous = estimate;
    if (partial.size() >= 8 && change < 0.02 * abs_tol) break;
  }
  return {acc.value + previous, acc.error + 4.0 * change, InversionMethod::kImhof};
}

}  // namespace

InversionResult GChi2Distribution::imhof_cdf(double x) const {
  const Integrand g{lambda_, x};
  const InversionResult r = integrate_imhof(g, false, lambda_min_, lambda_max_, cdf_envelope_.truncate,
                                            cdf_envelope_.upper, cdf_envelope_.tail, options_.abs_tol);
  const double value = std::clamp(0.5 - r.value / kPi, 0.0, 1.0);
  return {value, r.error_bound / kPi, InversionMethod::kImhof};
}

InversionResult GChi2Distribution::imhof_pdf(double x) const {
  const Integrand g{lambda_, x};
  const InversionResult r = integrate_imhof(g, true, lambda_min_, lambda_max_, pdf_envelope_.truncate,
                                            pdf_envelope_.upper, pdf_envelope_.tail, options_.abs_tol);
  const double norm = 1.0 / (2.0 * kPi * params_.scale);
  return {std::max(0.0, r.value * norm), r.error_bound * norm, InversionMethod::kImhof};
}

InversionResult GChi2Distribution::fallback(double t, const InversionResult& failed, bool density) const {
  if (!options_.allow_fallback) {
    std::ostringstream msg;
    msg << "gchi2: " << (density ? "pdf" : "cdf") << " quadrature did not converge at t=" << t
        << " (achieved error bound " << failed.error_bound << ")";
    throw NumericalError(msg.str(), failed.error_bound);
  }
  std::ostringstream msg;
  msg << "gchi2: quadrature bound " << failed.error_bound << " at t=" << t << "; using Monte-Carlo";
  log_note(msg.str());

  const auto draws = monte_carlo_draws(options_.mc_samples, options_.mc_seed);
  const double n = static_cast<double>(draws.size());
  // Dvoretzky-Kiefer-Wolfowitz band at 99.9% confidence.
  const double dkw = std::sqrt(std::log(2.0 / 1e-3) / (2.0 * n));
  auto empirical = [&](double s) {
    return static_cast<double>(std::upper_bound(draws.begin(), draws.end(), s) - draws.begin()) / n;
  };
  if (!density) return {empirical(t), dkw, InversionMethod::kMonteCarlo};
  const double h = 1.06 * std::sqrt(params_.variance()) * std::pow(n, -0.2);
  return {(empirical(t + h) - empirical(t - h)) / (2.0 * h), dkw / h, InversionMethod::kMonteCarlo};
}

InversionResult GChi2Distribution::cdf_eval(double t) const {
  if (lambda_.empty()) return {t >= params_.offset ? 1.0 : 0.0, 0.0, InversionMethod::kDegenerate};
  const InversionResult r = imhof_cdf((t - params_.offset) / params_.scale);
  if (!(r.error_bound <= options_.fallback_bound)) return fallback(t, r, false);
  return r;
}

InversionResult GChi2Distribution::pdf_eval(double t) const {
  if (lambda_.empty()) {
    return {t == params_.offset ? std::numeric_limits<double>::infinity() : 0.0, 0.0,
            InversionMethod::kDegenerate};
  }
  const InversionResult r = imhof_pdf((t - params_.offset) / params_.scale);
  if (!(r.error_bound <= options_.fallback_bound)) return fallback(t, r, true);
  return r;
}

double GChi2Distribution::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw InputError("gchi2 quantile: p must lie in (0, 1)");
  const double mu = params_.mean();
  const double sd = std::sqrt(params_.variance());
  if (sd == 0.0) return mu;
  double lo = mu - 10.0 * sd;
  double hi = mu + 10.0 * sd;
  while (cdf(lo) > p) lo -= 10.0 * sd;
  while (cdf(hi) < p) hi += 10.0 * sd;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> GChi2Distribution::monte_carlo_draws(int n, std::uint64_t seed) const {
  if (n < 1) throw InputError("gchi2: Monte-Carlo sample count must be positive");
  Engine engine(seed);
  std::normal_distribution<double> normal;
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) {
    double s = 0.0;
    for (double w : params_.weights) {
      const double z = normal(engine);
      s += w * z * z;
    }
    v = params_.scale * s + params_.offset;
  }
  std::sort(out.begin(), out.end());
  return out;
}

double cdf(const GChi2Params& p, double t, const InversionOptions& options) {
  return GChi2Distribution(p, options).cdf(t);
}

double pdf(const GChi2Params& p, double t, const InversionOptions& options) {
  return GChi2Distribution(p, options).pdf(t);
}

std::pair<double, double> error_rates(const QuadraticRule& rule, const CovarianceModel& ca,
                                      const CovarianceModel& cb, const InversionOptions& options) {
  const GChi2Distribution under_a(gchi2_from_rule(rule, ca), options);
  const GChi2Distribution under_b(gchi2_from_rule(rule, cb), options);
  // beta identically zero carries no information: score it as a fair coin.
  const auto& a = under_a.params();
  const auto& b = under_b.params();
  if (a.is_degenerate() && b.is_degenerate() && a.offset == 0.0 && b.offset == 0.0) return {0.5, 0.5};
  return {under_a.cdf(0.0), 1.0 - under_b.cdf(0.0)};
}

double ks_distance(const GChi2Distribution& dist, const std::vector<double>& sorted_samples, int stride) {
  const std::size_t n = sorted_samples.size();
  if (n == 0) throw InputError("ks_distance: no samples");
  if (stride < 1) throw InputError("ks_distance: stride must be positive");
  const double nn = static_cast<double>(n);
  double d = 0.0;
  std::size_t lo_idx = 0;
  double f_lo = dist.cdf(sorted_samples[0]);
  while (lo_idx < n - 1) {
    const std::size_t hi_idx = std::min(n - 1, lo_idx + static_cast<std::size_t>(stride));
    const double f_hi = dist.cdf(sorted_samples[hi_idx]);
    for (std::size_t i = lo_idx; i <= hi_idx; ++i) {
      // Exact at the evaluated endpoints, bracketed in between.
      const bool exact = i == lo_idx || i == hi_idx;
      const double upper = exact ? (i == lo_idx ? f_lo : f_hi) : f_hi;
      const double lower = exact ? upper : f_lo;
      d = std::max(d, upper - static_cast<double>(i) / nn);
      d = std::max(d, static_cast<double>(i + 1) / nn - lower);
    }
    lo_idx = hi_idx;
    f_lo = f_hi;
  }
  if (n == 1) d = std::max({d, f_lo, 1.0 - f_lo});
  return d;
}

std::vector<std::pair<double, double>> pdf_grid(const GChi2Distribution& dist, double lo, double hi, int n) {
  if (n < 2 || !(hi > lo)) throw InputError("pdf_grid: need n >= 2 and hi > lo");
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    out.emplace_back(t, dist.pdf(t));
  }
  return out;
}

}  // namespace boclab
