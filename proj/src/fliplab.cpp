#include "boclab/fliplab.hpp"

#include "boclab/error.hpp"
#include "boclab/gchi2.hpp"
#include "boclab/log.hpp"
#include "boclab/matrix_io.hpp"
#include "boclab/parallel.hpp"
#include "boclab/rng.hpp"
#include "boclab/sampler.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace boclab {

std::string to_string(FlipAxis axis) { return axis == FlipAxis::kEigenvector ? "eigenvector" : "eigenvalue"; }

FlipAxis parse_flip_axis(const std::string& name) {
  if (name == "eigenvector" || name == "v") return FlipAxis::kEigenvector;
  if (name == "eigenvalue" || name == "lambda") return FlipAxis::kEigenvalue;
  throw InputError("unknown flip axis '" + name + "' (expected eigenvector or eigenvalue)");
}

Classifier boc_classifier(const QuadraticRule& rule, std::string id) {
  return {std::move(id), [rule](const RowMatrix& x) -> Vector {
            return rule.beta(x).unaryExpr([](double b) { return b > 0.0 ? 1.0 : -1.0; });
          }};
}

Classifier quadnet_classifier(const QuadNetParams& params, std::string id) {
  return {std::move(id), [params](const RowMatrix& x) -> Vector {
            return forward(params, x).unaryExpr([](double f) { return f > 0.0 ? 1.0 : -1.0; });
          }};
}

std::vector<int> default_thresholds(int d) {
  if (d < 1) throw InputError("thresholds: dimension must be positive");
  std::vector<int> out;
  if (d <= 128) {
    for (int t = 0; t <= d; ++t) out.push_back(t);
    return out;
  }
  std::set<int> grid{0, d};
  constexpr int kPoints = 64;
  for (int k = 0; k < kPoints - 1; ++k) {
    const double t = std::pow(static_cast<double>(d), static_cast<double>(k) / (kPoints - 2));
    grid.insert(std::clamp(static_cast<int>(std::lround(t)), 1, d));
  }
  return {grid.begin(), grid.end()};
}

std::optional<CovarianceModel> guarded_composite(const CovarianceModel& c1, const CovarianceModel& c2, int tau,
                                                 const FlipSweepOptions& options, double* adjustment,
                                                 double* orth_error) {
  const int d = static_cast<int>(c1.dim());
  const int hold = options.hold_at_c1 ? d : 0;
  const bool vectors = options.axis == FlipAxis::kEigenvector;
  const CovarianceModel composed =
      compose_flip(c1, c2, vectors ? hold : tau, vectors ? tau : hold, options.flip);
  if (orth_error) *orth_error = composed.basis().orthogonality_error();

  SymEigen eig = sym_eigen(composed.matrix());
  const double top = eig.values[0];
  if (!(top > 0.0) || eig.values[d - 1] < -1e-8 * top) {
    if (adjustment) *adjustment = std::numeric_limits<double>::quiet_NaN();
    return std::nullopt;
  }
  const double floor = 1e-12 * top;
  double added = 0.0;
  for (int i = 0; i < d; ++i) {
    if (eig.values[i] < floor) {
      added += floor - eig.values[i];
      eig.values[i] = floor;
    }
  }
  if (added > 0.0) {
    std::ostringstream msg;
    msg << "flip composite at tau=" << tau << ": eigenvalues floored, added mass " << added;
    log_note(msg.str());
  }
  if (adjustment) *adjustment = added;
  return CovarianceModel(Spectrum(std::move(eig.values)), Basis::general(std::move(eig.vectors)));
}

std::uint64_t threshold_seed(std::uint64_t seed, int tau) {
  return derive_seed(derive_seed(seed, streams::kThreshold), static_cast<std::uint64_t>(tau));
}

RowMatrix sweep_samples(const CovarianceModel& c1, const CovarianceModel& c2, int tau,
                        const FlipSweepOptions& options) {
  const auto model = guarded_composite(c1, c2, tau, options);
  if (!model) return RowMatrix(0, c1.dim());
  return sample_gaussian(*model, options.n_eval, threshold_seed(options.seed, tau));
}

FlipSweepResult flip_sweep(const CovarianceModel& c1, const CovarianceModel& c2, const Classifier& classifier,
                           const FlipSweepOptions& options) {
  require_same_dim(c1.dim(), c2.dim(), "flip_sweep");
  if (options.n_eval < 1) throw InputError("flip_sweep: n_eval must be positive");
  if (!classifier.classify) throw InputError("flip_sweep: classifier has no decision function");
  const int d = static_cast<int>(c1.dim());

  FlipSweepResult result;
  result.axis = options.axis;
  result.classifier_id = classifier.id;
  result.thresholds = options.thresholds.empty() ? default_thresholds(d) : options.thresholds;
  for (std::size_t k = 0; k < result.thresholds.size(); ++k) {
    const int t = result.thresholds[k];
    if (t < 0 || t > d || (k > 0 && t <= result.thresholds[k - 1])) {
      throw InputError("flip_sweep: thresholds must be strictly increasing within [0, d]");
    }
  }
  const std::size_t n = result.thresholds.size();
  result.fraction_class_a.assign(n, std::numeric_limits<double>::quiet_NaN());
  result.n_valid.assign(n, 0);
  result.orthogonality_error.assign(n, 0.0);
  result.floor_adjustment.assign(n, 0.0);

  parallel_for(n, options.threads, [&](std::size_t k) {
    const int tau = result.thresholds[k];
    const auto model = guarded_composite(c1, c2, tau, options, &result.floor_adjustment[k],
                                         &result.orthogonality_error[k]);
    if (!model) return;
    const RowMatrix x = sample_gaussian(*model, options.n_eval, threshold_seed(options.seed, tau));
    const Vector verdict = classifier.classify(x);
    require_same_dim(verdict.size(), x.rows(), "classifier output");
    result.fraction_class_a[k] = static_cast<double>((verdict.array() > 0.0).count()) / x.rows();
    result.n_valid[k] = static_cast<int>(x.rows());
  });
  for (std::size_t k = 0; k < n; ++k) {
    if (result.n_valid[k] == 0) {
      std::ostringstream msg;
      msg << "flip_sweep: composite at tau=" << result.thresholds[k] << " is not positive definite; skipped";
      log_note(msg.str());
    }
  }
  result.flip_point = find_flip_point(result);
  return result;
}

std::optional<int> find_flip_point(const FlipSweepResult& result) {
  std::optional<double> previous;
  for (std::size_t k = 0; k < result.thresholds.size(); ++k) {
    const double f = result.fraction_class_a[k];
    if (!(k < result.n_valid.size() ? result.n_valid[k] > 0 : std::isfinite(f))) continue;
    if (previous && *previous < 0.5 && f >= 0.5) return result.thresholds[k];
    previous = f;
  }
  return std::nullopt;
}

VerdictTable read_verdicts(const std::filesystem::path& path) {
  const io::Table table = io::read_table(path);
  const std::size_t ct = table.column("tau");
  const std::size_t ci = table.column("sample_index");
  const std::size_t cl = table.column("label");
  VerdictTable out;
  for (const auto& row : table.rows) {
    const double label = row[cl];
    if (label != 1.0 && label != -1.0) throw InputError("verdicts: labels must be +1 or -1");
    const int tau = static_cast<int>(row[ct]);
    const int index = static_cast<int>(row[ci]);
    if (tau != row[ct] || index != row[ci] || tau < 0 || index < 0) {
      throw InputError("verdicts: tau and sample_index must be nonnegative integers");
    }
    if (!out[tau].emplace(index, label).second) {
      std::ostringstream msg;
      msg << "verdicts: duplicate entry for tau=" << tau << ", sample_index=" << index;
      throw InputError(msg.str());
    }
  }
  if (out.empty()) throw InputError("verdicts: no rows in " + path.string());
  return out;
}

FlipSweepResult sweep_from_verdicts(FlipAxis axis, const VerdictTable& verdicts, std::string id) {
  FlipSweepResult result;
  result.axis = axis;
  result.classifier_id = std::move(id);
  for (const auto& [tau, labels] : verdicts) {
    int hits = 0;
    for (const auto& entry : labels) hits += entry.second > 0.0;
    result.thresholds.push_back(tau);
    result.fraction_class_a.push_back(static_cast<double>(hits) / static_cast<double>(labels.size()));
    result.n_valid.push_back(static_cast<int>(labels.size()));
    result.orthogonality_error.push_back(std::numeric_limits<double>::quiet_NaN());
    result.floor_adjustment.push_back(std::numeric_limits<double>::quiet_NaN());
  }
  result.flip_point = find_flip_point(result);
  return result;
}

AlphaGridResult alpha_grid(const AlphaGridConfig& config) {
  if (config.runs < 1) throw InputError("alpha_grid: runs must be at least 1");
  if (config.delta_alpha_values.empty()) throw InputError("alpha_grid: empty delta_alpha grid");
  if (config.d < 1) throw InputError("alpha_grid: d must be positive");
  config.train.validate();
  const std::size_t grid = config.delta_alpha_values.size();
  const auto runs = static_cast<std::size_t>(config.runs);
  const Eigen::Index d_h = config.d_h > 0 ? config.d_h : config.d;

  const Basis basis = config.random_basis ? haar_orthogonal(config.d, derive_seed(config.seed, streams::kBasisA))
                                          : Basis::identity(config.d);
  const CovarianceModel ca(powerlaw_spectrum(config.d, config.alpha), basis);
  std::vector<CovarianceModel> cbs;
  for (double da : config.delta_alpha_values) {
    cbs.emplace_back(powerlaw_spectrum(config.d, config.alpha + da), basis);
  }

  AlphaGridResult result;
  result.alpha = config.alpha;
  result.delta_alpha_values = config.delta_alpha_values;
  result.runs = config.runs;
  result.boc_accuracy.assign(grid, 0.0);
  std::vector<double> acc(grid * runs, 0.0);

  parallel_for(grid * runs, config.threads, [&](std::size_t task) {
    const std::size_t g = task / runs;
    const std::size_t r = task % runs;
    const std::uint64_t run_seed = derive_seed(derive_seed(config.seed, streams::kRun), task);
    const GmmDataset train_set = make_gmm_dataset(ca, cbs[g], config.n_train_per_class, run_seed);
    const GmmDataset test_set =
        make_gmm_dataset(ca, cbs[g], config.n_test_per_class, derive_seed(run_seed, streams::kTest));
    TrainConfig cfg = config.train;
    cfg.seed = derive_seed(run_seed, streams::kTrain);
    const TrainResult trained = train(train_set, d_h, cfg);
    if (trained.diverged) throw NumericalError("alpha_grid: training diverged");
    acc[task] = accuracy(trained.params, test_set);
    if (r == 0) {
      const auto [pa, pb] = error_rates(build_rule(ca, cbs[g]), ca, cbs[g]);
      result.boc_accuracy[g] = 1.0 - 0.5 * (pa + pb);
    }
  });

  for (std::size_t g = 0; g < grid; ++g) {
    double mean = 0.0;
    for (std::size_t r = 0; r < runs; ++r) mean += acc[g * runs + r];
    mean /= static_cast<double>(runs);
    double var = 0.0;
    for (std::size_t r = 0; r < runs; ++r) var += (acc[g * runs + r] - mean) * (acc[g * runs + r] - mean);
    result.mean_accuracy.push_back(mean);
    result.std_accuracy.push_back(runs > 1 ? std::sqrt(var / static_cast<double>(runs - 1)) : 0.0);
  }
  return result;
}

}  // namespace boclab
