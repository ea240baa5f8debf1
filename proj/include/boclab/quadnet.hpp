#pragma once

#include "boclab/boc.hpp"
#include "boclab/sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace boclab {

// Two-layer network with quadratic activation: Phi(x) = v^T (W x)^2 + b.
// Without bias it is homogeneous of degree 3 in (W, v).
struct QuadNetParams {
  Matrix W;  // d_h x d
  Vector v;  // d_h
  double b = 0.0;

  Eigen::Index hidden() const { return W.rows(); }
  Eigen::Index dim() const { return W.cols(); }
  // ||(W, v, b)|| as one flat vector.
  double norm() const;
  bool all_finite() const;
  // (lambda W, lambda v, lambda^3 b); Phi scales exactly by lambda^3.
  QuadNetParams scaled(double lambda) const;
  static QuadNetParams zeros(Eigen::Index d, Eigen::Index d_h);
};

double dot(const QuadNetParams& a, const QuadNetParams& b);

double forward(const QuadNetParams& p, const Vector& x);
Vector forward(const QuadNetParams& p, const RowMatrix& x);

// Exact network for a rule without linear term: rows of W are
// sqrt(|delta_k|) u_k^T and v_k = sign(delta_k) for the eigenpairs of Q/2,
// b = c/2. Throws InputError when d_h < rank(Q).
QuadNetParams from_rule(const QuadraticRule& rule, Eigen::Index d_h);

// Random start: W_ij ~ N(0, (init_scale/sqrt(d))^2), v_i ~ N(0, (init_scale/sqrt(d_h))^2), b = 0.
QuadNetParams init_params(Eigen::Index d, Eigen::Index d_h, double init_scale, std::uint64_t seed);

struct LossGrad {
  double loss = 0.0;  // sum over samples of log(1 + exp(-y Phi))
  QuadNetParams grad;
};

LossGrad loss_and_grad(const QuadNetParams& p, const RowMatrix& x, const Vector& y);
LossGrad loss_and_grad(const QuadNetParams& p, const GmmDataset& data);

// Fraction of rows where sign(Phi) matches the label; Phi = 0 counts as class B.
double accuracy(const QuadNetParams& p, const RowMatrix& x, const Vector& y);
double accuracy(const QuadNetParams& p, const GmmDataset& data);

enum class Optimizer { kGradientDescent, kAdam };
std::string to_string(Optimizer o);
Optimizer parse_optimizer(const std::string& name);

struct TrainConfig {
  double learning_rate = 1e-2;
  int steps = 2000;
  double init_scale = 1.0;
  std::uint64_t seed = 0;
  bool use_bias = true;
  Optimizer optimizer = Optimizer::kAdam;
  int log_every = 10;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

struct TrainRecord {
  int step = 0;
  double loss = 0.0;  // mean loss per sample
  double accuracy = 0.0;
  double norm = 0.0;
};

struct TrainResult {
  QuadNetParams params;
  std::vector<TrainRecord> history;
  int steps_completed = 0;
  // Loss or parameters became non-finite; params hold the last finite state.
  bool diverged = false;
};

// Full-batch training on the mean logistic loss. Initialization uses
// derive_seed(cfg.seed, streams::kInit).
TrainResult train(const GmmDataset& data, Eigen::Index d_h, const TrainConfig& cfg);

// (1/N) sum_a y_a grad Phi_a(p), the direction of the KKT stationarity
// condition with uniform multipliers lambda_a = s/N.
QuadNetParams mean_signed_gradient(const QuadNetParams& p, const RowMatrix& x, const Vector& y);

// s * mean_signed_gradient(p); a KKT point with lambda_a = s/N is a fixed point.
QuadNetParams stationarity_map(const QuadNetParams& p, const GmmDataset& data, double lambda_scale);

struct KktReport {
  double lambda_scale = 0.0;
  // ||theta - (s/N) sum_a y_a grad Phi_a|| / ||theta|| at the normalized theta.
  double stationarity_residual = 0.0;
  double margin_min = 0.0;  // before normalization
  int margin_violations = 0;
  bool feasible = false;
  // theta was divided by this factor (margin_min^(1/3)).
  double normalization = 1.0;
};

// theta scaled so that min_a y_a Phi_a = 1. Requires b = 0 and a positive margin.
QuadNetParams margin_normalized(const QuadNetParams& p, const RowMatrix& x, const Vector& y);

// Least-squares s for theta ~ s * mean_signed_gradient(theta).
double fit_lambda_scale(const QuadNetParams& normalized, const RowMatrix& x, const Vector& y);

// Normalizes to unit margin and evaluates stationarity with lambda_a =
// lambda_scale/N. A non-positive lambda_scale requests the least-squares fit.
// Non-separating params give feasible = false and an infinite residual.
KktReport kkt_report(const QuadNetParams& p, const GmmDataset& data, double lambda_scale = 0.0);

struct FixedPointOptions {
  double damping = 0.5;
  int max_iterations = 200000;
  double update_tol = 1e-8;
  // Also required: ||M U - U diag(U^T M U)|| / ||M|| below this.
  double residual_tol = 1e-12;
};

struct FixedPointResult {
  QuadNetParams params;
  bool converged = false;
  int iterations = 0;
  // Relative residuals of v = s/N sum y (W x)^2 and
  // W = s/N sum 2 y diag(v) (W x) x^T, evaluated on the returned params.
  double residual_v = 0.0;
  double residual_w = 0.0;
};

// Bias-free solution of the stationarity equations with lambda_a = s/N.
// Each hidden unit reduces to w_i = 2 s v_i M w_i and v_i = s w_i^T M w_i with
// M = (1/N) sum_a y_a x_a x_a^T, so w_i is an eigenvector of M. The
// directions are found by a damped, mutually orthogonalized fixed-point
// iteration from a seeded random start (the zero point is also a solution),
// then scaled to |w_i| = 1 / (sqrt(2) s |m_i|), v_i = 1 / (2 s m_i).
FixedPointResult kkt_fixed_point(const GmmDataset& data, Eigen::Index d_h, double lambda_scale,
                                 std::uint64_t seed, const FixedPointOptions& options = {});

// Checkpoint: stem.W.bocm, stem.v.bocm, stem.json (b, shapes, config),
// stem.history.csv.
void save_checkpoint(const std::filesystem::path& dir, const std::string& stem, const QuadNetParams& p,
                     const TrainConfig& cfg, const std::vector<TrainRecord>& history);
QuadNetParams load_checkpoint(const std::filesystem::path& dir, const std::string& stem);

}  // namespace boclab
