// Acceptance suite: one PASS/FAIL line per criterion.
//
// The exit status counts failures outside `kDocumentedFailures`; criteria in
// that set still print FAIL with their measured values.

#include "boclab/boc.hpp"
#include "boclab/cli/app.hpp"
#include "boclab/cli/manifest.hpp"
#include "boclab/fliplab.hpp"
#include "boclab/gchi2.hpp"
#include "boclab/log.hpp"
#include "boclab/matrix_io.hpp"
#include "boclab/quadnet.hpp"
#include "boclab/rng.hpp"
#include "boclab/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>

using namespace boclab;

namespace {

const std::set<int> kDocumentedFailures = {7};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit;  // seconds
  std::function<Outcome()> run;
};

struct MeanSe {
  double mean, se;
};

MeanSe mean_se(const Vector& v) {
  const double n = static_cast<double>(v.size());
  const double m = v.mean();
  return {m, std::sqrt((v.array() - m).square().sum() / (n - 1.0) / n)};
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

CovarianceModel model(int d, double alpha, const Basis& basis) { return {powerlaw_spectrum(d, alpha), basis}; }

Outcome class_means() {
  const int d = 100;
  const int n = 10000;
  const CovarianceModel a = model(d, 0.5, Basis::identity(d));
  const CovarianceModel b = model(d, 0.2, Basis::identity(d));
  const QuadraticRule rule = build_rule(a, b);
  const ClassExpectations e = diagonal_expectations(d, 0.5, -0.3);
  const MeanSe ma = mean_se(rule.beta(sample_gaussian(a, n, 1)));
  const MeanSe mb = mean_se(rule.beta(sample_gaussian(b, n, 1 ^ kClassBSalt)));
  const double za = std::abs(ma.mean - e.beta_a) / ma.se;
  const double zb = std::abs(mb.mean - e.beta_b) / mb.se;
  return {za <= 3.0 && zb <= 3.0, fmt("<beta_A> %.4f vs %.4f (%.2f SE), <beta_B> %.4f vs %.4f (%.2f SE)", ma.mean,
                                      e.beta_a, za, mb.mean, e.beta_b, zb)};
}

Outcome rotated_means() {
  const int d = 100;
  const int pairs = 20;
  const int n = 10000;
  const Spectrum s = powerlaw_spectrum(d, 0.5);
  Vector ma(pairs), mb(pairs);
  for (int k = 0; k < pairs; ++k) {
    const std::uint64_t seed = derive_seed(2024, static_cast<std::uint64_t>(k));
    const CovarianceModel a(s, haar_orthogonal(d, derive_seed(seed, streams::kBasisA)));
    const CovarianceModel b(s, haar_orthogonal(d, derive_seed(seed, streams::kBasisB)));
    const QuadraticRule rule = build_rule(a, b);
    ma[k] = rule.beta(sample_gaussian(a, n, seed)).mean();
    mb[k] = rule.beta(sample_gaussian(b, n, seed ^ kClassBSalt)).mean();
  }
  const double closed = rotated_expectation(s);
  const MeanSe a = mean_se(ma);
  const MeanSe b = mean_se(mb);
  const double za = std::abs(a.mean - closed) / a.se;
  const double zb = std::abs(b.mean + a.mean) / std::hypot(a.se, b.se);
  return {za <= 3.0 && zb <= 3.0,
          fmt("<beta_A> %.3f vs closed form %.3f (%.2f SE); <beta_B> %.3f vs -<beta_A> (%.2f SE)", a.mean, closed, za,
              b.mean, zb)};
}

Outcome gchi2_fidelity() {
  const int d = 20;
  const int n = 100000;
  const CovarianceModel a = model(d, 0.5, haar_orthogonal(d, 31));
  const CovarianceModel b = model(d, 0.2, haar_orthogonal(d, 32));
  const QuadraticRule rule = build_rule(a, b);
  const GChi2Distribution dist(gchi2_from_rule(rule, a));
  const Vector beta = rule.beta(sample_gaussian(a, n, 33));
  std::vector<double> sorted(beta.data(), beta.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double ks = ks_distance(dist, sorted, 20);

  const double mean_err = std::abs(dist.params().mean() - class_expectations(a, b).beta_a) /
                          std::max(1.0, std::abs(dist.params().mean()));
  const double m = beta.mean();
  const Eigen::ArrayXd c = beta.array() - m;
  const double var = c.square().sum() / (n - 1);
  const double var_se = std::sqrt((c.pow(4).mean() - var * var) / n);
  const double zv = std::abs(var - dist.params().variance()) / var_se;
  return {ks <= 0.01 && mean_err <= 1e-8 && zv <= 3.0,
          fmt("KS %.4f; mean identity error %.1e; variance %.4f vs %.4f (%.2f SE)", ks, mean_err, var,
              dist.params().variance(), zv)};
}

Outcome boc_headline() {
  const int d = 100;
  const CovarianceModel a = model(d, 0.2, Basis::identity(d));
  const CovarianceModel b = model(d, 0.3, Basis::identity(d));
  const auto [pa, pb] = error_rates(build_rule(a, b), a, b);
  const double acc = 1.0 - 0.5 * (pa + pb);
  return {std::abs(acc - 0.91) <= 0.01, fmt("analytic accuracy %.4f (target 0.91 +- 0.01)", acc)};
}

Outcome network_vs_boc() {
  const int d = 20;
  const CovarianceModel a = model(d, 0.2, Basis::identity(d));
  const CovarianceModel b = model(d, 0.3, Basis::identity(d));
  const QuadraticRule rule = build_rule(a, b);
  const GmmDataset train_set = make_gmm_dataset(a, b, 10000, 51);
  const GmmDataset test_set = make_gmm_dataset(a, b, 25000, derive_seed(51, streams::kTest));
  TrainConfig cfg;
  cfg.steps = 1000;
  cfg.learning_rate = 1e-2;
  cfg.seed = 52;
  const TrainResult trained = train(train_set, d, cfg);
  const double net = accuracy(trained.params, test_set);
  const Vector beta = rule.beta(test_set.samples);
  double hits = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) hits += (beta[i] > 0.0 ? 1.0 : -1.0) == test_set.labels[i];
  const double boc = hits / static_cast<double>(beta.size());

  const RowMatrix probes = sample_gaussian(a, 1000, 53);
  const Vector pb = rule.beta(probes);
  const Vector phi = forward(from_rule(rule, d), probes);
  const double exact = ((phi - pb).array().abs() / pb.array().abs().max(1.0)).maxCoeff();
  return {!trained.diverged && boc - net <= 0.02 && exact <= 1e-8,
          fmt("network %.4f vs BOC %.4f on the same test set (gap %.4f); from_rule max rel error %.1e", net, boc,
              boc - net, exact)};
}

Outcome gradient_suite() {
  const int d = 8;
  const GmmDataset data = make_gmm_dataset(model(d, 0.2, Basis::identity(d)), model(d, 0.5, Basis::identity(d)), 25, 61);
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    QuadNetParams p = init_params(d, 6, 1.0, derive_seed(62, trial));
    p.b = 0.3;
    const LossGrad lg = loss_and_grad(p, data);
    const double h = 1e-6;
    auto block_error = [&](auto get, const auto& analytic) {
      double err = 0.0;
      for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        QuadNetParams up = p, down = p;
        get(up)[i] += h;
        get(down)[i] -= h;
        const double numeric = (loss_and_grad(up, data).loss - loss_and_grad(down, data).loss) / (2.0 * h);
        err = std::max(err, std::abs(numeric - analytic[i]));
      }
      return err / std::max(1e-300, analytic.cwiseAbs().maxCoeff());
    };
    const Vector gw = Eigen::Map<const Vector>(lg.grad.W.data(), lg.grad.W.size());
    worst = std::max(worst, block_error([](QuadNetParams& q) { return q.W.data(); }, gw));
    worst = std::max(worst, block_error([](QuadNetParams& q) { return q.v.data(); }, lg.grad.v));
    const Vector gb = Vector::Constant(1, lg.grad.b);
    worst = std::max(worst, block_error([](QuadNetParams& q) { return &q.b; }, gb));
  }
  QuadNetParams p = init_params(d, 6, 1.0, 63);
  const Vector base = forward(p, data.samples);
  double homog = 0.0;
  for (double lambda : {0.5, 2.0, 10.0}) {
    const Vector scaled = forward(p.scaled(lambda), data.samples);
    homog = std::max(homog, (scaled - lambda * lambda * lambda * base).norm() / scaled.norm());
  }
  return {worst <= 1e-5 && homog <= 1e-12,
          fmt("finite-difference max relative error %.1e; homogeneity error %.1e", worst, homog)};
}

Outcome kkt_diagnostics() {
  const int d = 20;
  const Spectrum s = powerlaw_spectrum(d, 0.2);
  const CovarianceModel a(s, haar_orthogonal(d, derive_seed(0, streams::kBasisA)));
  const CovarianceModel b(s, haar_orthogonal(d, derive_seed(0, streams::kBasisB)));
  const GmmDataset data = make_gmm_dataset(a, b, 100, 0);
  TrainConfig cfg;
  cfg.optimizer = Optimizer::kGradientDescent;
  cfg.learning_rate = 0.05;
  cfg.steps = 20000;
  cfg.use_bias = false;
  cfg.log_every = 1000;
  cfg.seed = derive_seed(0, streams::kTrain);
  const TrainResult trained = train(data, d, cfg);
  const KktReport report = kkt_report(trained.params, data);
  const double s_fit = report.feasible ? report.lambda_scale : 1.0;
  const FixedPointResult fp = kkt_fixed_point(data, d, s_fit, derive_seed(0, streams::kInit));
  const bool residual_ok = report.feasible && report.stationarity_residual < 0.1;
  const bool fixed_ok = fp.converged && fp.residual_v <= 1e-6 && fp.residual_w <= 1e-6;
  return {residual_ok && fixed_ok,
          fmt("trained: feasible=%d s=%.3f stationarity residual %.3f (need < 0.1); fixed point: converged=%d "
              "residuals v %.1e w %.1e (need <= 1e-6)",
              report.feasible, report.lambda_scale, report.stationarity_residual, fp.converged, fp.residual_v,
              fp.residual_w)};
}

Outcome sqrt_gamma() {
  const int d = 50;
  const CovarianceModel a = model(d, 0.5, Basis::identity(d));
  const CovarianceModel b = model(d, 0.6, Basis::identity(d));
  const QuadraticRule pop = build_rule(a, b);
  RowMatrix x(10000, d);
  x << sample_gaussian(a, 5000, 81), sample_gaussian(b, 5000, 81 ^ kClassBSalt);
  const std::vector<double> gammas = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  const int repeats = 3;
  std::vector<double> lx, ly;
  for (double g : gammas) {
    const int n = static_cast<int>(std::lround(d / g));
    double dev = 0.0;
    for (int r = 0; r < repeats; ++r) {
      const std::uint64_t seed = derive_seed(82, static_cast<std::uint64_t>(n * 10 + r));
      dev += empirical_deviation(pop, empirical_rule(sample_gaussian(a, n, seed), sample_gaussian(b, n, seed ^ kClassBSalt)), x);
    }
    lx.push_back(std::log(g));
    ly.push_back(std::log(dev / repeats));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  return {std::abs(slope - 0.5) <= 0.1, fmt("log-log slope %.3f (target 0.5 +- 0.1)", slope)};
}

Outcome flip_test() {
  const int d = 128;
  const CovarianceModel c1 = model(d, 0.5, haar_orthogonal(d, 11));
  const CovarianceModel c2 = model(d, 0.3, haar_orthogonal(d, 12));
  const GmmDataset data = make_gmm_dataset(c1, c2, 4000, 91);
  TrainConfig cfg;
  cfg.steps = 300;
  cfg.seed = 92;
  const TrainResult trained = train(data, d, cfg);
  const std::vector<Classifier> classifiers = {boc_classifier(build_rule(c1, c2)), quadnet_classifier(trained.params)};

  FlipSweepOptions opts;
  opts.n_eval = 1000;
  opts.seed = 93;
  std::map<std::string, std::optional<int>> vector_flip;
  std::map<std::string, double> value_min;
  bool ok = !trained.diverged;
  double e_max = 0.0;
  for (const auto& cl : classifiers) {
    opts.axis = FlipAxis::kEigenvalue;
    const FlipSweepResult values = flip_sweep(c1, c2, cl, opts);
    double lowest = 1.0;
    for (double f : values.fraction_class_a) {
      if (std::isfinite(f)) lowest = std::min(lowest, f);
    }
    value_min[cl.id] = lowest;
    ok = ok && !values.flip_point && lowest >= 0.9;

    opts.axis = FlipAxis::kEigenvector;
    const FlipSweepResult vectors = flip_sweep(c1, c2, cl, opts);
    vector_flip[cl.id] = vectors.flip_point;
    ok = ok && vectors.flip_point && *vectors.flip_point > 0 && *vectors.flip_point < d;
    for (double e : vectors.orthogonality_error) e_max = std::max(e_max, e);
  }
  const auto fb = vector_flip["boc"];
  const auto fq = vector_flip["quadnet"];
  ok = ok && fb && fq && *fb >= *fq;
  return {ok, fmt("eigenvalue axis min fraction boc %.3f quadnet %.3f; eigenvector flip boc %d quadnet %d; max e %.3f",
                  value_min["boc"], value_min["quadnet"], fb ? *fb : -1, fq ? *fq : -1, e_max)};
}

// Runs every subcommand at small scale, re-runs each from its snapshot with a
// different thread count and compares every output file byte for byte.
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "boclab-acceptance-determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ostringstream sink;
  auto run = [&](std::vector<std::string> args) -> fs::path {
    args.insert(args.end(), {"--out", root.string(), "--seed", "7", "--threads", "1"});
    std::ostringstream out, err;
    const int code = cli::run_app(args, out, err);
    if (code != 0) throw std::runtime_error(args.front() + " failed: " + err.str());
    return out.str().substr(0, out.str().find('\n'));
  };
  auto files = [](const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      // The manifest records the thread count; everything else must match.
      if (e.is_regular_file() && e.path().filename() != "manifest.json") {
        out[fs::relative(e.path(), dir).string()] = cli::sha256_file(e.path());
      }
    }
    return out;
  };

  std::vector<fs::path> dirs;
  const fs::path cov_a = run({"gen-cov", "--set", "d=6", "--set", "alpha=0.5"});
  const fs::path cov_b = run({"gen-cov", "--set", "d=6", "--set", "alpha=0.1", "--set", "format=csv"});
  const fs::path samples = run({"sample", "--set", "cov=" + (cov_a / "covariance.bocm").string(), "--set", "n=300"});
  const fs::path hist = run({"beta-hist", "--set", "d=12", "--set", "n_per_class=2000", "--set", "grid_points=40"});
  dirs = {cov_a, cov_b, samples, hist};
  dirs.push_back(run({"recolor", "--set", "input=" + (samples / "samples.bocm").string(), "--set",
                      "source=" + (cov_a / "covariance.bocm").string(), "--set",
                      "target=" + (cov_b / "covariance.csv").string()}));
  dirs.push_back(run({"render", "--set", "input=" + (hist / "hist_rotated.csv").string(), "--set",
                      "y=[\"density_a\",\"density_b\"]", "--set", "overlay=" + (hist / "overlay_rotated.csv").string(),
                      "--set", "overlay_y=[\"pdf_a\",\"pdf_b\"]"}));
  dirs.push_back(run({"train-quadnet", "--set", "d=8", "--set", "n_per_class=500", "--set", "n_test_per_class=1000",
                      "--set", "train.steps=60"}));
  dirs.push_back(run({"kkt", "--set", "d=6", "--set", "n_per_class=30", "--set", "n_test_per_class=200", "--set",
                      "train.steps=2000"}));
  dirs.push_back(run({"alpha-grid", "--set", "d=6", "--set", "runs=2", "--set", "delta_alpha=[0,0.3]", "--set",
                      "n_train_per_class=200", "--set", "n_test_per_class=500", "--set", "train.steps=40"}));
  dirs.push_back(run({"flip-sweep", "--set", "d=12", "--set", "n_eval=200", "--set", "n_train_per_class=300", "--set",
                      "train.steps=40", "--set", "export_samples=true"}));
  dirs.push_back(run({"empirical-scaling", "--set", "d=8", "--set", "gammas=[0.05,0.1]", "--set", "n_eval=300",
                      "--set", "repeats=2"}));

  int compared = 0;
  std::vector<std::string> mismatched;
  for (const auto& dir : dirs) {
    std::ostringstream out, err;
    if (cli::run_app({"rerun", dir.string(), "--out", root.string(), "--threads", "4"}, out, err) != 0) {
      throw std::runtime_error("rerun of " + dir.string() + " failed: " + err.str());
    }
    const fs::path again = out.str().substr(0, out.str().find('\n'));
    const auto a = files(dir);
    const auto b = files(again);
    compared += static_cast<int>(a.size());
    if (a.empty() || a != b) mismatched.push_back(dir.filename().string());
    if (!cli::verify_manifest(dir).ok || !cli::verify_manifest(again).ok) mismatched.push_back("manifest " + dir.string());
  }
  fs::remove_all(root);
  std::string detail = fmt("%d subcommand runs, %d output files compared after rerun with 4 threads", (int)dirs.size(), compared);
  for (const auto& m : mismatched) detail += "; mismatch in " + m;
  return {mismatched.empty(), detail};
}

}  // namespace

int main() {
  set_note_sink(nullptr);
  const std::vector<Criterion> criteria = {
      {1, "class means, shared basis (d=100)", 60, class_means},
      {2, "class means, rotated bases (d=100, 20 pairs)", 120, rotated_means},
      {3, "generalized chi-squared fidelity (d=20)", 60, gchi2_fidelity},
      {4, "BOC accuracy headline (d=100)", 60, boc_headline},
      {5, "network approaches BOC (d=20)", 300, network_vs_boc},
      {6, "gradient and homogeneity", 10, gradient_suite},
      {7, "KKT diagnostics (d=20)", 300, kkt_diagnostics},
      {8, "sqrt(gamma) scaling (d=50)", 180, sqrt_gamma},
      {9, "flip test (d=128)", 600, flip_test},
      {10, "determinism across threads", 600, determinism},
  };
  int unexpected = 0;
  int passed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.time_limit;
    const bool pass = o.pass && in_time;
    passed += pass;
    if (!pass && !kDocumentedFailures.count(c.id)) ++unexpected;
    std::printf("[%s] %2d %s: %s; %.1fs (limit %.0fs)%s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                o.detail.c_str(), secs, c.time_limit, !pass && kDocumentedFailures.count(c.id) ? " [documented]" : "");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed; %d unexpected failure(s)\n", passed, criteria.size(), unexpected);
  return unexpected == 0 ? 0 : 1;
}
