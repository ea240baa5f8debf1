#include "boclab/cli/commands.hpp"

#include "boclab/boc.hpp"
#include "boclab/cli/render.hpp"
#include "boclab/covmodel.hpp"
#include "boclab/error.hpp"
#include "boclab/fliplab.hpp"
#include "boclab/gchi2.hpp"
#include "boclab/log.hpp"
#include "boclab/matrix_io.hpp"
#include "boclab/parallel.hpp"
#include "boclab/quadnet.hpp"
#include "boclab/rng.hpp"
#include "boclab/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

namespace boclab::cli {
namespace {

using Handler = std::function<void(RunContext&)>;

struct Entry {
  Handler run;
  std::string help;
};

// ---------------------------------------------------------------- helpers

Basis make_basis(const std::string& kind, int d, std::uint64_t seed) {
  if (kind == "identity") return Basis::identity(d);
  if (kind == "haar") return haar_orthogonal(d, seed);
  throw InputError("basis must be 'identity' or 'haar', got '" + kind + "'");
}

TrainConfig train_config(const Json& c, std::uint64_t seed) {
  TrainConfig t;
  t.learning_rate = get_double(c, "train.learning_rate");
  t.steps = get_int(c, "train.steps");
  t.init_scale = get_double(c, "train.init_scale");
  t.use_bias = get_bool(c, "train.use_bias");
  t.optimizer = parse_optimizer(get_string(c, "train.optimizer"));
  t.log_every = get_int(c, "train.log_every");
  t.seed = seed;
  t.validate();
  return t;
}

std::string file_ext(const Json& c) {
  const std::string f = get_string(c, "format");
  if (f == "bocm") return ".bocm";
  if (f == "csv") return ".csv";
  throw InputError("format must be 'bocm' or 'csv'");
}

int positive(const Json& c, const std::string& key) {
  const int v = get_int(c, key);
  if (v < 1) throw InputError("config: '" + key + "' must be positive");
  return v;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const Vector& v) {
  const double n = static_cast<double>(v.size());
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

// Counts of values in `bins` equal bins over [lo, hi]; values outside are dropped.
std::vector<double> histogram(const std::vector<double>& values, double lo, double hi, int bins) {
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  const double width = (hi - lo) / bins;
  for (double v : values) {
    if (v < lo || v > hi) continue;
    const int k = std::min(bins - 1, static_cast<int>((v - lo) / width));
    counts[static_cast<std::size_t>(k)] += 1.0;
  }
  return counts;
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

// Least-squares slope and intercept of y on x.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

// ---------------------------------------------------------------- beta-hist

struct ScenarioOutput {
  io::Table hist, overlay;
  std::vector<double> markers;  // analytic means
  Json summary;
  std::vector<double> marker_row_a, marker_row_b;
};

void beta_hist(RunContext& ctx) {
  const Json& c = ctx.config();
  const int d = positive(c, "d");
  const double alpha_a = get_double(c, "alpha_a");
  const double delta = get_double(c, "delta_alpha");
  const int n = positive(c, "n_per_class");
  const int bins = positive(c, "bins");
  const int grid = positive(c, "grid_points");
  if (n < 2 || grid < 2) throw InputError("beta-hist: n_per_class and grid_points must be at least 2");
  const auto scenarios = c.at("scenarios").get<std::vector<std::string>>();
  for (const auto& s : scenarios) {
    if (s != "shared-basis" && s != "rotated" && s != "both") {
      throw InputError("beta-hist: unknown scenario '" + s + "' (shared-basis, rotated, both)");
    }
  }
  const std::uint64_t seed = ctx.seed();
  const Basis oa = haar_orthogonal(d, ctx.note_seed("basis_a", derive_seed(seed, streams::kBasisA)));
  const Basis ob = haar_orthogonal(d, ctx.note_seed("basis_b", derive_seed(seed, streams::kBasisB)));
  const std::uint64_t sample_root = ctx.note_seed("samples", derive_seed(seed, streams::kRun));

  std::vector<ScenarioOutput> out(scenarios.size());
  parallel_for(scenarios.size(), ctx.threads(), [&](std::size_t k) {
    const std::string& s = scenarios[k];
    const bool rotated = s != "shared-basis";
    const double alpha_b = s == "rotated" ? alpha_a : alpha_a + delta;
    const CovarianceModel ca(powerlaw_spectrum(d, alpha_a), rotated ? oa : Basis::identity(d));
    const CovarianceModel cb(powerlaw_spectrum(d, alpha_b), rotated ? ob : Basis::identity(d));
    const QuadraticRule rule = build_rule(ca, cb);
    const std::uint64_t sseed = derive_seed(sample_root, k);
    const Vector ba = rule.beta(sample_gaussian(ca, n, sseed));
    const Vector bb = rule.beta(sample_gaussian(cb, n, sseed ^ kClassBSalt));

    const ClassExpectations analytic = class_expectations(ca, cb);
    double closed_a = nan();
    double closed_b = nan();
    if (s == "shared-basis") {
      const ClassExpectations e = diagonal_expectations(d, alpha_a, delta);
      closed_a = e.beta_a;
      closed_b = e.beta_b;
    } else if (s == "rotated") {
      closed_a = rotated_expectation(powerlaw_spectrum(d, alpha_a));
      closed_b = -closed_a;
    }
    const MeanSe ma = mean_se(ba);
    const MeanSe mb = mean_se(bb);

    std::vector<double> va = to_std(ba);
    std::vector<double> vb = to_std(bb);
    std::sort(va.begin(), va.end());
    std::sort(vb.begin(), vb.end());
    const double lo = std::min(va.front(), vb.front());
    const double hi = std::max(va.back(), vb.back());
    const auto ca_counts = histogram(va, lo, hi, bins);
    const auto cb_counts = histogram(vb, lo, hi, bins);
    const double width = (hi - lo) / bins;
    ScenarioOutput& o = out[k];
    o.hist.header = {"bin_lo", "bin_hi", "count_a", "count_b", "density_a", "density_b"};
    for (int i = 0; i < bins; ++i) {
      const auto u = static_cast<std::size_t>(i);
      o.hist.rows.push_back({lo + i * width, lo + (i + 1) * width, ca_counts[u], cb_counts[u],
                             ca_counts[u] / (n * width), cb_counts[u] / (n * width)});
    }

    const GChi2Distribution ga(gchi2_from_rule(rule, ca));
    const GChi2Distribution gb(gchi2_from_rule(rule, cb));
    o.overlay.header = {"t", "pdf_a", "pdf_b"};
    for (int i = 0; i < grid; ++i) {
      const double t = lo + (hi - lo) * i / (grid - 1);
      o.overlay.rows.push_back({t, ga.pdf(t), gb.pdf(t)});
    }
    const int stride = std::max(1, n / 200);
    o.marker_row_a = {static_cast<double>(k), 1.0, analytic.beta_a, closed_a, ma.mean, ma.se};
    o.marker_row_b = {static_cast<double>(k), -1.0, analytic.beta_b, closed_b, mb.mean, mb.se};
    o.markers = {analytic.beta_a, analytic.beta_b};
    o.summary = {{"scenario", s},
                 {"alpha_a", alpha_a},
                 {"alpha_b", alpha_b},
                 {"beta_a_analytic", analytic.beta_a},
                 {"beta_b_analytic", analytic.beta_b},
                 {"beta_a_closed_form", json_number(closed_a)},
                 {"beta_b_closed_form", json_number(closed_b)},
                 {"beta_a_empirical", ma.mean},
                 {"beta_a_standard_error", ma.se},
                 {"beta_b_empirical", mb.mean},
                 {"beta_b_standard_error", mb.se},
                 {"ks_a", ks_distance(ga, va, stride)},
                 {"ks_b", ks_distance(gb, vb, stride)},
                 {"dropped_weights_a", ga.params().dropped},
                 {"dropped_weights_b", gb.params().dropped}};
  });

  io::Table markers{{"scenario", "class", "analytic", "closed_form", "empirical_mean", "standard_error"}, {}};
  Json summary = Json::array();
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    const std::string& s = scenarios[k];
    ctx.write_table("hist_" + s + ".csv", out[k].hist);
    ctx.write_table("overlay_" + s + ".csv", out[k].overlay);
    markers.rows.push_back(out[k].marker_row_a);
    markers.rows.push_back(out[k].marker_row_b);
    summary.push_back(out[k].summary);

    PlotSpec plot;
    plot.title = "beta(x): " + s;
    plot.x_label = "beta";
    plot.y_label = "density";
    std::vector<double> lo, hi, da, db, t, pa, pb;
    for (const auto& r : out[k].hist.rows) {
      lo.push_back(r[0]);
      hi.push_back(r[1]);
      da.push_back(r[4]);
      db.push_back(r[5]);
    }
    for (const auto& r : out[k].overlay.rows) {
      t.push_back(r[0]);
      pa.push_back(r[1]);
      pb.push_back(r[2]);
    }
    plot.bars = {{"class A", lo, hi, da, "#1f77b4"}, {"class B", lo, hi, db, "#d62728"}};
    plot.curves = {{"gchi2 A", t, pa, "#0b3c6e"}, {"gchi2 B", t, pb, "#7a1010"}};
    plot.markers = {{out[k].markers[0], "", "black"}, {out[k].markers[1], "", "black"}};
    ctx.write_text("beta_" + s + ".svg", render_svg(plot));
  }
  ctx.write_table("markers.csv", markers);
  ctx.write_json("summary.json", summary);
}

// ---------------------------------------------------------------- train-quadnet

std::pair<CovarianceModel, CovarianceModel> class_pair(const Json& c, RunContext& ctx, int d, double alpha_a,
                                                       double alpha_b, const std::string& basis) {
  const std::uint64_t seed = ctx.seed();
  if (basis == "identity") {
    return {CovarianceModel(powerlaw_spectrum(d, alpha_a), Basis::identity(d)),
            CovarianceModel(powerlaw_spectrum(d, alpha_b), Basis::identity(d))};
  }
  const Basis oa = haar_orthogonal(d, ctx.note_seed("basis_a", derive_seed(seed, streams::kBasisA)));
  if (basis == "shared") {
    return {CovarianceModel(powerlaw_spectrum(d, alpha_a), oa), CovarianceModel(powerlaw_spectrum(d, alpha_b), oa)};
  }
  if (basis == "rotated") {
    const Basis ob = haar_orthogonal(d, ctx.note_seed("basis_b", derive_seed(seed, streams::kBasisB)));
    return {CovarianceModel(powerlaw_spectrum(d, alpha_a), oa), CovarianceModel(powerlaw_spectrum(d, alpha_b), ob)};
  }
  (void)c;
  throw InputError("basis must be 'identity', 'shared' or 'rotated', got '" + basis + "'");
}

void train_quadnet(RunContext& ctx) {
  const Json& c = ctx.config();
  const int d = positive(c, "d");
  const int n = positive(c, "n_per_class");
  const int n_test = positive(c, "n_test_per_class");
  const int bins = positive(c, "bins");
  const int d_h = get_int(c, "d_h") > 0 ? get_int(c, "d_h") : d;
  const auto [ca, cb] = class_pair(c, ctx, d, get_double(c, "alpha_a"), get_double(c, "alpha_b"), get_string(c, "basis"));
  const TrainConfig cfg = train_config(c, ctx.note_seed("train", derive_seed(ctx.seed(), streams::kTrain)));

  const GmmDataset train_set = make_gmm_dataset(ca, cb, n, ctx.note_seed("train_data", ctx.seed()));
  const GmmDataset test_set = make_gmm_dataset(ca, cb, n_test, ctx.note_seed("test_data", derive_seed(ctx.seed(), streams::kTest)));
  const TrainResult result = train(train_set, d_h, cfg);

  save_checkpoint(ctx.dir(), "network", result.params, cfg, result.history);
  for (const char* f : {"network.W.bocm", "network.v.bocm", "network.json", "network.history.csv"}) ctx.adopt(f);

  const QuadraticRule rule = build_rule(ca, cb);
  const Vector beta = rule.beta(test_set.samples);
  const Vector phi = forward(result.params, test_set.samples);
  const auto [pa, pb] = error_rates(rule, ca, cb);

  double boc_hits = 0.0;
  double agree = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    boc_hits += ((beta[i] > 0.0 ? 1.0 : -1.0) == test_set.labels[i]);
    agree += ((beta[i] > 0.0) == (phi[i] > 0.0));
  }
  // Network outputs on the beta scale (least squares), then compared by distribution.
  const double scale = phi.squaredNorm() > 0.0 ? phi.dot(beta) / phi.squaredNorm() : 0.0;
  std::vector<double> sp = to_std(scale * phi);
  std::vector<double> sb = to_std(beta);
  std::sort(sp.begin(), sp.end());
  std::sort(sb.begin(), sb.end());
  double w1 = 0.0;
  for (std::size_t i = 0; i < sp.size(); ++i) w1 += std::abs(sp[i] - sb[i]);
  w1 /= static_cast<double>(sp.size());

  const double lo = std::min(sp.front(), sb.front());
  const double hi = std::max(sp.back(), sb.back());
  const auto hn = histogram(sp, lo, hi, bins);
  const auto hb = histogram(sb, lo, hi, bins);
  const double width = (hi - lo) / bins;
  const double total = static_cast<double>(sp.size());
  io::Table outputs{{"bin_lo", "bin_hi", "density_network", "density_boc"}, {}};
  for (int i = 0; i < bins; ++i) {
    const auto u = static_cast<std::size_t>(i);
    outputs.rows.push_back({lo + i * width, lo + (i + 1) * width, hn[u] / (total * width), hb[u] / (total * width)});
  }
  ctx.write_table("outputs_hist.csv", outputs);

  io::Table history{{"step", "loss", "accuracy", "norm"}, {}};
  for (const auto& r : result.history) history.rows.push_back({double(r.step), r.loss, r.accuracy, r.norm});
  ctx.write_table("history.csv", history);

  PlotSpec plot;
  plot.title = "network vs BOC output";
  plot.x_label = "output (beta scale)";
  plot.y_label = "density";
  std::vector<double> blo, bhi, dn, db;
  for (const auto& r : outputs.rows) {
    blo.push_back(r[0]);
    bhi.push_back(r[1]);
    dn.push_back(r[2]);
    db.push_back(r[3]);
  }
  plot.bars = {{"network", blo, bhi, dn, "#2ca02c"}, {"BOC", blo, bhi, db, "#7f7f7f"}};
  ctx.write_text("outputs.svg", render_svg(plot));

  ctx.write_json("summary.json", {{"train_accuracy", accuracy(result.params, train_set)},
                                  {"test_accuracy", accuracy(result.params, test_set)},
                                  {"boc_test_accuracy", boc_hits / static_cast<double>(beta.size())},
                                  {"boc_analytic_accuracy", 1.0 - 0.5 * (pa + pb)},
                                  {"sign_agreement", agree / static_cast<double>(beta.size())},
                                  {"output_scale", scale},
                                  {"wasserstein_1", w1},
                                  {"steps_completed", result.steps_completed},
                                  {"diverged", result.diverged}});
  if (result.diverged) throw NumericalError("train-quadnet: training diverged; last stable state saved");
}

// ---------------------------------------------------------------- kkt

void kkt(RunContext& ctx) {
  const Json& c = ctx.config();
  const int d = positive(c, "d");
  const int n = positive(c, "n_per_class");
  const int n_test = positive(c, "n_test_per_class");
  const int d_h = get_int(c, "d_h") > 0 ? get_int(c, "d_h") : d;
  const double alpha = get_double(c, "alpha");
  const auto [ca, cb] = class_pair(c, ctx, d, alpha, alpha, "rotated");
  TrainConfig cfg = train_config(c, ctx.note_seed("train", derive_seed(ctx.seed(), streams::kTrain)));
  if (cfg.use_bias) throw InputError("kkt: train.use_bias must be false (the KKT analysis is bias-free)");

  const GmmDataset train_set = make_gmm_dataset(ca, cb, n, ctx.note_seed("train_data", ctx.seed()));
  const GmmDataset test_set = make_gmm_dataset(ca, cb, n_test, ctx.note_seed("test_data", derive_seed(ctx.seed(), streams::kTest)));
  const TrainResult result = train(train_set, d_h, cfg);
  const KktReport report = kkt_report(result.params, train_set, get_double(c, "lambda_scale"));

  FixedPointOptions fpo;
  fpo.damping = get_double(c, "fixed_point.damping");
  fpo.max_iterations = get_int(c, "fixed_point.max_iterations");
  fpo.update_tol = get_double(c, "fixed_point.update_tol");
  const double s = report.feasible && report.lambda_scale > 0.0 ? report.lambda_scale : 1.0;
  const FixedPointResult fp = kkt_fixed_point(train_set, d_h, s, ctx.note_seed("fixed_point", derive_seed(ctx.seed(), streams::kInit)), fpo);

  const QuadraticRule rule = build_rule(ca, cb);
  const Vector beta = rule.beta(test_set.samples);
  const QuadNetParams normalized = report.feasible ? result.params.scaled(1.0 / report.normalization) : result.params;
  const Vector phi = forward(normalized, test_set.samples);
  const Vector phi_fp = forward(fp.params, test_set.samples);
  io::Table table{{"index", "label", "beta", "network", "kkt"}, {}};
  double boc_hits = 0.0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    table.rows.push_back({double(i), test_set.labels[i], beta[i], phi[i], phi_fp[i]});
    boc_hits += ((beta[i] > 0.0 ? 1.0 : -1.0) == test_set.labels[i]);
  }
  ctx.write_table("kkt_outputs.csv", table);
  io::Table history{{"step", "loss", "accuracy", "norm"}, {}};
  for (const auto& r : result.history) history.rows.push_back({double(r.step), r.loss, r.accuracy, r.norm});
  ctx.write_table("history.csv", history);

  ctx.write_json("summary.json",
                 {{"feasible", report.feasible},
                  {"lambda_scale", report.lambda_scale},
                  {"stationarity_residual", json_number(report.stationarity_residual)},
                  {"margin_min", report.margin_min},
                  {"margin_violations", report.margin_violations},
                  {"train_accuracy", accuracy(result.params, train_set)},
                  {"test_accuracy", accuracy(result.params, test_set)},
                  {"boc_test_accuracy", boc_hits / static_cast<double>(beta.size())},
                  {"fixed_point_converged", fp.converged},
                  {"fixed_point_iterations", fp.iterations},
                  {"fixed_point_residual_v", fp.residual_v},
                  {"fixed_point_residual_w", fp.residual_w},
                  {"fixed_point_test_accuracy", accuracy(fp.params, test_set)}});
  if (!fp.converged) throw NumericalError("kkt: fixed-point iteration did not converge");
}

// ---------------------------------------------------------------- alpha-grid

void alpha_grid_cmd(RunContext& ctx) {
  const Json& c = ctx.config();
  AlphaGridConfig g;
  g.d = positive(c, "d");
  g.alpha = get_double(c, "alpha");
  g.delta_alpha_values = get_doubles(c, "delta_alpha");
  g.runs = positive(c, "runs");
  g.n_train_per_class = positive(c, "n_train_per_class");
  g.n_test_per_class = positive(c, "n_test_per_class");
  g.d_h = get_int(c, "d_h");
  g.random_basis = get_bool(c, "random_basis");
  g.train = train_config(c, 0);
  g.seed = ctx.seed();
  g.threads = ctx.threads();
  const AlphaGridResult r = alpha_grid(g);

  io::Table table{{"delta_alpha", "mean_accuracy", "std_accuracy", "boc_accuracy", "runs"}, {}};
  for (std::size_t i = 0; i < r.delta_alpha_values.size(); ++i) {
    table.rows.push_back({r.delta_alpha_values[i], r.mean_accuracy[i], r.std_accuracy[i], r.boc_accuracy[i],
                          static_cast<double>(r.runs)});
  }
  ctx.write_table("alpha_grid.csv", table);
  PlotSpec plot;
  plot.title = "accuracy vs delta alpha (alpha = " + io::format_double(r.alpha) + ")";
  plot.x_label = "delta alpha";
  plot.y_label = "accuracy";
  plot.curves = {{"network", r.delta_alpha_values, r.mean_accuracy, ""}, {"BOC", r.delta_alpha_values, r.boc_accuracy, ""}};
  ctx.write_text("alpha_grid.svg", render_svg(plot));
}

// ---------------------------------------------------------------- flip-sweep

void flip_sweep_cmd(RunContext& ctx) {
  const Json& c = ctx.config();
  const std::string cov1 = get_string(c, "cov_1");
  const std::string cov2 = get_string(c, "cov_2");
  std::optional<CovarianceModel> c1, c2;
  if (!cov1.empty() || !cov2.empty()) {
    if (cov1.empty() || cov2.empty()) throw InputError("flip-sweep: give both cov_1 and cov_2 or neither");
    c1 = CovarianceModel::from_matrix(io::read_matrix(cov1));
    c2 = CovarianceModel::from_matrix(io::read_matrix(cov2));
  } else {
    const int d = positive(c, "d");
    c1 = CovarianceModel(powerlaw_spectrum(d, get_double(c, "alpha_1")),
                         haar_orthogonal(d, ctx.note_seed("basis_1", derive_seed(ctx.seed(), streams::kBasisA))));
    c2 = CovarianceModel(powerlaw_spectrum(d, get_double(c, "alpha_2")),
                         haar_orthogonal(d, ctx.note_seed("basis_2", derive_seed(ctx.seed(), streams::kBasisB))));
  }
  const int d = static_cast<int>(c1->dim());
  const auto axes = c.at("axes").get<std::vector<std::string>>();
  const auto classifier_names = c.at("classifiers").get<std::vector<std::string>>();
  const std::string hold = get_string(c, "hold_at");
  if (hold != "c1" && hold != "c2") throw InputError("flip-sweep: hold_at must be 'c1' or 'c2'");

  FlipSweepOptions base;
  base.n_eval = positive(c, "n_eval");
  base.seed = ctx.note_seed("sweep", derive_seed(ctx.seed(), streams::kEvaluation));
  base.thresholds = c.at("thresholds").get<std::vector<int>>();
  base.hold_at_c1 = hold == "c1";
  base.flip.reorthogonalize = get_bool(c, "reorthogonalize");
  base.threads = ctx.threads();

  std::vector<Classifier> classifiers;
  for (const auto& name : classifier_names) {
    if (name == "boc") {
      classifiers.push_back(boc_classifier(build_rule(*c1, *c2)));
    } else if (name == "quadnet") {
      const std::string checkpoint = get_string(c, "checkpoint");
      QuadNetParams params;
      if (!checkpoint.empty()) {
        const std::filesystem::path p(checkpoint);
        params = load_checkpoint(p.parent_path(), p.filename().string());
      } else {
        const int d_h = get_int(c, "d_h") > 0 ? get_int(c, "d_h") : d;
        const TrainConfig cfg = train_config(c, ctx.note_seed("train", derive_seed(ctx.seed(), streams::kTrain)));
        const GmmDataset data = make_gmm_dataset(*c1, *c2, positive(c, "n_train_per_class"),
                                                 ctx.note_seed("train_data", ctx.seed()));
        const TrainResult r = train(data, d_h, cfg);
        if (r.diverged) throw NumericalError("flip-sweep: quadnet training diverged");
        params = r.params;
        save_checkpoint(ctx.dir(), "quadnet", params, cfg, r.history);
        for (const char* f : {"quadnet.W.bocm", "quadnet.v.bocm", "quadnet.json", "quadnet.history.csv"}) ctx.adopt(f);
      }
      classifiers.push_back(quadnet_classifier(params));
    } else {
      throw InputError("flip-sweep: unknown classifier '" + name + "' (boc, quadnet)");
    }
  }

  Json points = Json::object();
  double e_max = 0.0;
  auto write_sweep = [&](const FlipSweepResult& r, const std::string& axis) {
    io::Table t{{"tau", "fraction_class_a", "n_valid", "orthogonality_error", "floor_adjustment"}, {}};
    for (std::size_t k = 0; k < r.thresholds.size(); ++k) {
      t.rows.push_back({double(r.thresholds[k]), r.fraction_class_a[k], double(r.n_valid[k]),
                        r.orthogonality_error[k], r.floor_adjustment[k]});
      if (std::isfinite(r.orthogonality_error[k])) e_max = std::max(e_max, r.orthogonality_error[k]);
    }
    ctx.write_table("sweep_" + r.classifier_id + "_" + axis + ".csv", t);
    points[r.classifier_id][axis] = r.flip_point ? Json(*r.flip_point) : Json(nullptr);
  };

  for (const auto& axis_name : axes) {
    FlipSweepOptions o = base;
    o.axis = parse_flip_axis(axis_name);
    const std::string axis = to_string(o.axis);
    PlotSpec plot;
    plot.title = axis + " flip test";
    plot.x_label = "tau (components from c1)";
    plot.y_label = "fraction classified as c1";
    for (const auto& cl : classifiers) {
      const FlipSweepResult r = flip_sweep(*c1, *c2, cl, o);
      write_sweep(r, axis);
      std::vector<double> x(r.thresholds.begin(), r.thresholds.end());
      plot.curves.push_back({cl.id, x, r.fraction_class_a, ""});
    }
    if (get_bool(c, "export_samples")) {
      const std::vector<int> taus = o.thresholds.empty() ? default_thresholds(d) : o.thresholds;
      for (int tau : taus) {
        const RowMatrix x = sweep_samples(*c1, *c2, tau, o);
        if (x.rows() > 0) ctx.write_matrix("samples/" + axis + "_tau" + std::to_string(tau) + ".bocm", x);
      }
    }
    ctx.write_text("sweep_" + axis + ".svg", render_svg(plot));
  }

  const std::string verdicts = get_string(c, "verdicts");
  if (!verdicts.empty()) {
    const FlipAxis axis = parse_flip_axis(axes.empty() ? "eigenvector" : axes.front());
    const FlipSweepResult r = sweep_from_verdicts(axis, read_verdicts(verdicts), "external");
    write_sweep(r, to_string(axis));
  }
  ctx.write_json("flip_points.json", {{"flip_points", points}, {"orthogonality_error_max", e_max}, {"d", d}});
}

// ---------------------------------------------------------------- empirical-scaling

void empirical_scaling(RunContext& ctx) {
  const Json& c = ctx.config();
  const int d = positive(c, "d");
  const std::vector<double> gammas = get_doubles(c, "gammas");
  const int repeats = positive(c, "repeats");
  const int n_eval = positive(c, "n_eval");
  if (gammas.size() < 2) throw InputError("empirical-scaling: need at least two gamma values");
  const CovarianceModel ca(powerlaw_spectrum(d, get_double(c, "alpha_a")), Basis::identity(d));
  const CovarianceModel cb(powerlaw_spectrum(d, get_double(c, "alpha_b")), Basis::identity(d));
  const QuadraticRule pop = build_rule(ca, cb);

  const std::uint64_t eval_seed = ctx.note_seed("evaluation", derive_seed(ctx.seed(), streams::kEvaluation));
  RowMatrix x(2 * n_eval, d);
  x << sample_gaussian(ca, n_eval, eval_seed), sample_gaussian(cb, n_eval, eval_seed ^ kClassBSalt);
  const std::uint64_t root = ctx.note_seed("estimates", derive_seed(ctx.seed(), streams::kRun));

  std::vector<double> dev(gammas.size() * static_cast<std::size_t>(repeats));
  std::vector<int> sizes(gammas.size());
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    if (!(gammas[g] > 0.0 && gammas[g] < 1.0)) throw InputError("empirical-scaling: gamma must lie in (0, 1)");
    sizes[g] = static_cast<int>(std::lround(d / gammas[g]));
  }
  parallel_for(dev.size(), ctx.threads(), [&](std::size_t task) {
    const std::size_t g = task / static_cast<std::size_t>(repeats);
    const std::uint64_t s = derive_seed(root, task);
    const QuadraticRule emp = empirical_rule(sample_gaussian(ca, sizes[g], s), sample_gaussian(cb, sizes[g], s ^ kClassBSalt));
    dev[task] = empirical_deviation(pop, emp, x);
  });

  io::Table table{{"gamma", "n", "mean_deviation", "std_deviation"}, {}};
  std::vector<double> lx, ly;
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    double m = 0.0;
    for (int r = 0; r < repeats; ++r) m += dev[g * repeats + r];
    m /= repeats;
    double v = 0.0;
    for (int r = 0; r < repeats; ++r) v += (dev[g * repeats + r] - m) * (dev[g * repeats + r] - m);
    const double sd = repeats > 1 ? std::sqrt(v / (repeats - 1)) : 0.0;
    table.rows.push_back({gammas[g], double(sizes[g]), m, sd});
    lx.push_back(std::log(gammas[g]));
    ly.push_back(std::log(m));
  }
  const auto [slope, intercept] = linear_fit(lx, ly);
  ctx.write_table("scaling.csv", table);
  ctx.write_json("summary.json", {{"slope", slope}, {"intercept", intercept}, {"expected_slope", 0.5}});
  PlotSpec plot;
  plot.title = "empirical rule deviation";
  plot.x_label = "log gamma";
  plot.y_label = "log mean |beta_N - beta|";
  plot.curves = {{"measured", lx, ly, ""}};
  ctx.write_text("scaling.svg", render_svg(plot));
}

// ---------------------------------------------------------------- data utilities

CovarianceModel model_from_config(const Json& c, RunContext& ctx) {
  const int d = positive(c, "d");
  const std::string basis = get_string(c, "basis");
  return CovarianceModel(powerlaw_spectrum(d, get_double(c, "alpha")),
                         make_basis(basis, d, ctx.note_seed("basis", derive_seed(ctx.seed(), streams::kBasisA))));
}

void gen_cov(RunContext& ctx) {
  const Json& c = ctx.config();
  const std::string ext = file_ext(c);
  const CovarianceModel m = model_from_config(c, ctx);
  ctx.write_matrix("covariance" + ext, m.matrix());
  ctx.write_matrix("basis" + ext, m.basis().matrix());
  io::Table spectrum{{"index", "eigenvalue"}, {}};
  for (Eigen::Index i = 0; i < m.dim(); ++i) spectrum.rows.push_back({double(i), m.spectrum()[i]});
  ctx.write_table("spectrum.csv", spectrum);
}

void sample_cmd(RunContext& ctx) {
  const Json& c = ctx.config();
  const std::string ext = file_ext(c);
  const std::string cov = get_string(c, "cov");
  const CovarianceModel m = cov.empty() ? model_from_config(c, ctx) : CovarianceModel::from_matrix(io::read_matrix(cov));
  const RowMatrix x = sample_gaussian(m, positive(c, "n"), ctx.note_seed("samples", derive_seed(ctx.seed(), streams::kRun)));
  ctx.write_matrix("samples" + ext, x);
}

void recolor_cmd(RunContext& ctx) {
  const Json& c = ctx.config();
  const std::string ext = file_ext(c);
  for (const char* key : {"input", "source", "target"}) {
    if (get_string(c, key).empty()) throw InputError(std::string("recolor: '") + key + "' path is required");
  }
  const std::string centering = get_string(c, "centering");
  RecolorOptions opts;
  if (centering == "empirical") {
    opts.centering = Centering::kEmpirical;
  } else if (centering != "model") {
    throw InputError("recolor: centering must be 'model' or 'empirical'");
  }
  opts.relative_floor = get_double(c, "relative_floor");
  const Matrix x = io::read_matrix(get_string(c, "input"));
  const CovarianceModel src = CovarianceModel::from_matrix(io::read_matrix(get_string(c, "source")));
  const CovarianceModel tgt = CovarianceModel::from_matrix(io::read_matrix(get_string(c, "target")));
  ctx.write_matrix("recolored" + ext, recolor(x, src, tgt, opts));
}

void render_cmd(RunContext& ctx) { ctx.write_text("plot.svg", render_svg(plot_from_config(ctx.config()))); }

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> r{
      {"beta-hist", {beta_hist, "beta histograms, generalized chi-squared overlays and class means for three covariance scenarios"}},
      {"train-quadnet", {train_quadnet, "train the quadratic network and compare it with the Bayes-optimal rule"}},
      {"kkt", {kkt, "KKT stationarity diagnostics and fixed-point solution on a rotated-basis mixture"}},
      {"alpha-grid", {alpha_grid_cmd, "network accuracy over a grid of spectral exponent gaps"}},
      {"flip-sweep", {flip_sweep_cmd, "eigenvector / eigenvalue flip tests"}},
      {"empirical-scaling", {empirical_scaling, "deviation of the empirical rule versus gamma = d/N"}},
      {"gen-cov", {gen_cov, "write a power-law covariance model"}},
      {"sample", {sample_cmd, "draw Gaussian samples from a covariance"}},
      {"recolor", {recolor_cmd, "whiten samples and recolor them to a target covariance"}},
      {"render", {render_cmd, "render a CSV as an SVG histogram or line plot"}},
  };
  return r;
}

}  // namespace

std::vector<std::string> subcommand_names() {
  std::vector<std::string> out;
  for (const auto& [name, entry] : registry()) out.push_back(name);
  return out;
}

bool is_subcommand(const std::string& name) { return registry().count(name) > 0; }

std::string subcommand_help(const std::string& name) { return registry().at(name).help; }

std::filesystem::path run_subcommand(const std::string& name, const Json& file_config, const RunSettings& settings) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw InputError("unknown subcommand '" + name + "'");
  const std::uint64_t* seed = settings.seed ? &*settings.seed : nullptr;
  const Json config = resolve_config(name, file_config, settings.overrides, seed);
  RunContext ctx(name, config, output_root(settings.out_root), settings.threads);
  it->second.run(ctx);
  ctx.finish();
  return ctx.dir();
}

std::filesystem::path rerun(const std::filesystem::path& run_dir, const RunSettings& settings) {
  const Json snapshot = load_config_file(run_dir / "config.json");
  if (!snapshot.contains("subcommand")) throw InputError("rerun: " + run_dir.string() + " has no subcommand in its config");
  return run_subcommand(snapshot.at("subcommand").get<std::string>(), snapshot, settings);
}

}  // namespace boclab::cli
