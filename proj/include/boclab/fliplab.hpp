#pragma once

#include "boclab/boc.hpp"
#include "boclab/covmodel.hpp"
#include "boclab/quadnet.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace boclab {

enum class FlipAxis { kEigenvector, kEigenvalue };
std::string to_string(FlipAxis axis);
FlipAxis parse_flip_axis(const std::string& name);

// Pluggable decision function: one verdict per row, +1 = class A (c1), -1 = class B.
struct Classifier {
  std::string id;
  std::function<Vector(const RowMatrix&)> classify;
};

// sign(beta) of the rule; beta = 0 counts as class B.
Classifier boc_classifier(const QuadraticRule& rule, std::string id = "boc");
Classifier quadnet_classifier(const QuadNetParams& params, std::string id = "quadnet");

// Thresholds tau, strictly increasing in [0, d]: every integer for d <= 128,
// otherwise 64 log-spaced integers including 0 and d.
std::vector<int> default_thresholds(int d);

struct FlipSweepOptions {
  FlipAxis axis = FlipAxis::kEigenvector;
  int n_eval = 2000;
  std::uint64_t seed = 0;
  std::vector<int> thresholds;  // empty = default_thresholds(d)
  // The axis that is not swept comes entirely from c1 (true) or c2 (false).
  bool hold_at_c1 = true;
  FlipOptions flip;
  int threads = 1;
};

struct FlipSweepResult {
  FlipAxis axis = FlipAxis::kEigenvector;
  std::vector<int> thresholds;
  // NaN where the threshold is invalid (n_valid = 0).
  std::vector<double> fraction_class_a;
  std::vector<int> n_valid;
  // Orthogonality error of the composed basis and the eigenvalue mass added
  // by the positive-definiteness guard, per threshold.
  std::vector<double> orthogonality_error;
  std::vector<double> floor_adjustment;
  std::optional<int> flip_point;
  std::string classifier_id;
};

// The composed covariance for one threshold, symmetrized and with its
// eigenvalues floored at 1e-12 * lambda_max. Returns nullopt when the
// composite has an eigenvalue below -1e-8 * lambda_max, which the floor
// would otherwise hide. `adjustment` receives the added mass.
std::optional<CovarianceModel> guarded_composite(const CovarianceModel& c1, const CovarianceModel& c2, int tau,
                                                 const FlipSweepOptions& options, double* adjustment = nullptr,
                                                 double* orth_error = nullptr);

// Seed of the samples drawn at threshold tau.
std::uint64_t threshold_seed(std::uint64_t seed, int tau);

// The n_eval evaluation samples for threshold tau (empty when invalid).
RowMatrix sweep_samples(const CovarianceModel& c1, const CovarianceModel& c2, int tau,
                        const FlipSweepOptions& options);

FlipSweepResult flip_sweep(const CovarianceModel& c1, const CovarianceModel& c2, const Classifier& classifier,
                           const FlipSweepOptions& options);

// First threshold tau_k (k >= 1) with fraction >= 0.5 whose predecessor is
// below 0.5, i.e. the smallest tau at which the sweep from c2-dominated
// toward c1-dominated composites crosses the majority line. Invalid
// thresholds are skipped.
std::optional<int> find_flip_point(const FlipSweepResult& result);

// External verdicts: CSV with columns tau, sample_index, label (+1/-1).
using VerdictTable = std::map<int, std::map<int, double>>;
VerdictTable read_verdicts(const std::filesystem::path& path);
FlipSweepResult sweep_from_verdicts(FlipAxis axis, const VerdictTable& verdicts, std::string id);

struct AlphaGridConfig {
  int d = 20;
  double alpha = 0.2;
  std::vector<double> delta_alpha_values;
  int runs = 5;
  int n_train_per_class = 5000;
  int n_test_per_class = 20000;
  Eigen::Index d_h = 0;  // 0 = d
  bool random_basis = true;
  TrainConfig train;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct AlphaGridResult {
  double alpha = 0.0;
  std::vector<double> delta_alpha_values;
  std::vector<double> mean_accuracy;
  std::vector<double> std_accuracy;  // sample standard deviation over runs
  std::vector<double> boc_accuracy;  // analytic, from error_rates
  int runs = 0;
};

// For every delta alpha: classes with spectra alpha and alpha + delta alpha in
// one shared basis; a quadnet is trained per run and scored on held-out data.
AlphaGridResult alpha_grid(const AlphaGridConfig& config);

}  // namespace boclab
