#include "boclab/quadnet.hpp"

#include "boclab/error.hpp"
#include "boclab/log.hpp"
#include "boclab/matrix_io.hpp"
#include "boclab/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace boclab {
namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

// 1 / (1 + exp(-z))
double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_data(const QuadNetParams& p, const RowMatrix& x, const Vector& y, const char* what) {
  require_same_dim(x.cols(), p.dim(), what);
  require_same_dim(y.size(), x.rows(), what);
  if (x.rows() == 0) throw InputError(std::string(what) + ": empty dataset");
}

// Per-sample signed gradient sum: sum_a r_a grad Phi_a for weights r.
QuadNetParams weighted_gradient(const QuadNetParams& p, const RowMatrix& x, const RowMatrix& h,
                                const Vector& r) {
  QuadNetParams g;
  g.v = h.cwiseAbs2().transpose() * r;
  const RowMatrix hr = h.array().colwise() * r.array();
  g.W = 2.0 * p.v.asDiagonal() * (hr.transpose() * x);
  g.b = r.sum();
  return g;
}

QuadNetParams axpy(double a, const QuadNetParams& x, const QuadNetParams& y) {
  return {a * x.W + y.W, a * x.v + y.v, a * x.b + y.b};
}

double relative_distance(const Matrix& a, const Matrix& b) {
  const double n = a.norm();
  return n > 0.0 ? (a - b).norm() / n : (b.norm() > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
}

}  // namespace

double QuadNetParams::norm() const { return std::sqrt(W.squaredNorm() + v.squaredNorm() + b * b); }

bool QuadNetParams::all_finite() const { return W.allFinite() && v.allFinite() && std::isfinite(b); }

QuadNetParams QuadNetParams::scaled(double lambda) const { return {lambda * W, lambda * v, lambda * lambda * lambda * b}; }

QuadNetParams QuadNetParams::zeros(Eigen::Index d, Eigen::Index d_h) {
  return {Matrix::Zero(d_h, d), Vector::Zero(d_h), 0.0};
}

double dot(const QuadNetParams& a, const QuadNetParams& b) {
  return (a.W.array() * b.W.array()).sum() + a.v.dot(b.v) + a.b * b.b;
}

double forward(const QuadNetParams& p, const Vector& x) {
  require_same_dim(x.size(), p.dim(), "forward");
  return p.v.dot((p.W * x).cwiseAbs2()) + p.b;
}

Vector forward(const QuadNetParams& p, const RowMatrix& x) {
  require_same_dim(x.cols(), p.dim(), "forward");
  const RowMatrix h = x * p.W.transpose();
  Vector out = h.cwiseAbs2() * p.v;
  out.array() += p.b;
  return out;
}

QuadNetParams from_rule(const QuadraticRule& rule, Eigen::Index d_h) {
  if (rule.has_linear_term()) throw InputError("from_rule: rule has a linear term");
  if (d_h < 1) throw InputError("from_rule: d_h must be at least 1");
  const Eigen::Index d = rule.dim();
  const SymEigen eig = sym_eigen(0.5 * rule.Q);
  const double top = eig.values.size() ? eig.values.cwiseAbs().maxCoeff() : 0.0;

  // Nonzero eigenpairs ordered by |delta|.
  std::vector<Eigen::Index> order;
  for (Eigen::Index k = 0; k < d; ++k) {
    if (top > 0.0 && std::abs(eig.values[k]) > 1e-14 * top) order.push_back(k);
  }
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(eig.values[a]) > std::abs(eig.values[b]);
  });
  if (static_cast<Eigen::Index>(order.size()) > d_h) {
    std::ostringstream msg;
    msg << "from_rule: d_h=" << d_h << " is below rank(Q)=" << order.size();
    throw InputError(msg.str());
  }
  QuadNetParams p = QuadNetParams::zeros(d, d_h);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double delta = eig.values[order[i]];
    const auto row = static_cast<Eigen::Index>(i);
    p.W.row(row) = std::sqrt(std::abs(delta)) * eig.vectors.row(order[i]);
    p.v[row] = delta > 0.0 ? 1.0 : -1.0;
  }
  p.b = 0.5 * rule.c;
  return p;
}

QuadNetParams init_params(Eigen::Index d, Eigen::Index d_h, double init_scale, std::uint64_t seed) {
  if (d < 1 || d_h < 1) throw InputError("init_params: dimensions must be positive");
  if (!(init_scale > 0.0)) throw InputError("init_params: init_scale must be positive");
  Engine engine(seed);
  std::normal_distribution<double> normal;
  QuadNetParams p = QuadNetParams::zeros(d, d_h);
  const double sw = init_scale / std::sqrt(static_cast<double>(d));
  const double sv = init_scale / std::sqrt(static_cast<double>(d_h));
  for (Eigen::Index i = 0; i < d_h; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) p.W(i, j) = sw * normal(engine);
  }
  for (Eigen::Index i = 0; i < d_h; ++i) p.v[i] = sv * normal(engine);
  return p;
}

LossGrad loss_and_grad(const QuadNetParams& p, const RowMatrix& x, const Vector& y) {
  require_data(p, x, y, "loss_and_grad");
  const RowMatrix h = x * p.W.transpose();
  Vector phi = h.cwiseAbs2() * p.v;
  phi.array() += p.b;
  LossGrad out;
  Vector r(x.rows());
  for (Eigen::Index a = 0; a < x.rows(); ++a) {
    const double margin = y[a] * phi[a];
    out.loss += softplus(-margin);
    // d/dPhi log(1 + exp(-y Phi)) = -y sigmoid(-y Phi)
    r[a] = -y[a] * sigmoid(-margin);
  }
  out.grad = weighted_gradient(p, x, h, r);
  return out;
}

LossGrad loss_and_grad(const QuadNetParams& p, const GmmDataset& data) {
  return loss_and_grad(p, data.samples, data.labels);
}

double accuracy(const QuadNetParams& p, const RowMatrix& x, const Vector& y) {
  require_data(p, x, y, "accuracy");
  const Vector phi = forward(p, x);
  Eigen::Index hits = 0;
  for (Eigen::Index a = 0; a < x.rows(); ++a) hits += ((phi[a] > 0.0 ? 1.0 : -1.0) == y[a]);
  return static_cast<double>(hits) / static_cast<double>(x.rows());
}

double accuracy(const QuadNetParams& p, const GmmDataset& data) { return accuracy(p, data.samples, data.labels); }

std::string to_string(Optimizer o) { return o == Optimizer::kAdam ? "adam" : "gd"; }

Optimizer parse_optimizer(const std::string& name) {
  if (name == "adam") return Optimizer::kAdam;
  if (name == "gd" || name == "sgd" || name == "gradient-descent") return Optimizer::kGradientDescent;
  throw InputError("unknown optimizer '" + name + "' (expected adam or gd)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("train: learning_rate must be positive");
  if (steps < 1) throw InputError("train: steps must be at least 1");
  if (!(init_scale > 0.0)) throw InputError("train: init_scale must be positive");
  if (log_every < 1) throw InputError("train: log_every must be at least 1");
}

TrainResult train(const GmmDataset& data, Eigen::Index d_h, const TrainConfig& cfg) {
  cfg.validate();
  const RowMatrix& x = data.samples;
  const Vector& y = data.labels;
  const double n = static_cast<double>(x.rows());

  TrainResult result;
  QuadNetParams p = init_params(data.dim(), d_h, cfg.init_scale, derive_seed(cfg.seed, streams::kInit));
  QuadNetParams m = QuadNetParams::zeros(data.dim(), d_h);
  QuadNetParams s = m;
  double pow1 = 1.0;
  double pow2 = 1.0;

  auto record = [&](int step, double loss) {
    result.history.push_back({step, loss, accuracy(p, x, y), p.norm()});
  };

  for (int step = 0; step < cfg.steps; ++step) {
    LossGrad lg = loss_and_grad(p, x, y);
    const double loss = lg.loss / n;
    QuadNetParams& g = lg.grad;
    g.W /= n;
    g.v /= n;
    g.b /= n;
    if (!std::isfinite(loss) || !g.all_finite()) {
      result.diverged = true;
      break;
    }
    if (step % cfg.log_every == 0) record(step, loss);
    if (!cfg.use_bias) g.b = 0.0;

    QuadNetParams next = p;
    if (cfg.optimizer == Optimizer::kGradientDescent) {
      next = axpy(-cfg.learning_rate, g, p);
    } else {
      const double b1 = cfg.adam_beta1;
      const double b2 = cfg.adam_beta2;
      pow1 *= b1;
      pow2 *= b2;
      m = {b1 * m.W + (1 - b1) * g.W, b1 * m.v + (1 - b1) * g.v, b1 * m.b + (1 - b1) * g.b};
      s = {b2 * s.W + (1 - b2) * g.W.cwiseAbs2(), b2 * s.v + (1 - b2) * g.v.cwiseAbs2(),
           b2 * s.b + (1 - b2) * g.b * g.b};
      const double c1 = cfg.learning_rate / (1.0 - pow1);
      const double c2 = 1.0 / (1.0 - pow2);
      auto update = [&](const auto& mom, const auto& var) {
        return (c1 * mom.array() / ((c2 * var.array()).sqrt() + cfg.adam_epsilon)).matrix().eval();
      };
      next.W -= update(m.W, s.W);
      next.v -= update(m.v, s.v);
      next.b -= c1 * m.b / (std::sqrt(c2 * s.b) + cfg.adam_epsilon);
    }
    if (!cfg.use_bias) next.b = 0.0;
    if (!next.all_finite()) {
      result.diverged = true;
      break;
    }
    p = std::move(next);
    result.steps_completed = step + 1;
  }
  if (result.diverged) {
    std::ostringstream msg;
    msg << "train: diverged after " << result.steps_completed << " steps; keeping the last finite state";
    log_note(msg.str());
  } else {
    const LossGrad last = loss_and_grad(p, x, y);
    record(result.steps_completed, last.loss / n);
  }
  result.params = std::move(p);
  return result;
}

QuadNetParams mean_signed_gradient(const QuadNetParams& p, const RowMatrix& x, const Vector& y) {
  require_data(p, x, y, "stationarity");
  const RowMatrix h = x * p.W.transpose();
  const Vector r = y / static_cast<double>(x.rows());
  return weighted_gradient(p, x, h, r);
}

QuadNetParams stationarity_map(const QuadNetParams& p, const GmmDataset& data, double lambda_scale) {
  QuadNetParams g = mean_signed_gradient(p, data.samples, data.labels);
  return {lambda_scale * g.W, lambda_scale * g.v, lambda_scale * g.b};
}

QuadNetParams margin_normalized(const QuadNetParams& p, const RowMatrix& x, const Vector& y) {
  if (p.b != 0.0) throw InputError("kkt: margin normalization needs a bias-free network (b = 0)");
  require_data(p, x, y, "margin_normalized");
  const double margin = (forward(p, x).array() * y.array()).minCoeff();
  if (!(margin > 0.0)) throw NumericalError("kkt: network does not separate the data (min margin <= 0)");
  return p.scaled(1.0 / std::cbrt(margin));
}

double fit_lambda_scale(const QuadNetParams& normalized, const RowMatrix& x, const Vector& y) {
  const QuadNetParams g = mean_signed_gradient(normalized, x, y);
  const double gg = dot(g, g);
  if (!(gg > 0.0)) throw NumericalError("kkt: stationarity direction vanishes");
  return dot(normalized, g) / gg;
}

KktReport kkt_report(const QuadNetParams& p, const GmmDataset& data, double lambda_scale) {
  if (p.b != 0.0) throw InputError("kkt_report: requires a bias-free network (b = 0)");
  const RowMatrix& x = data.samples;
  const Vector& y = data.labels;
  require_data(p, x, y, "kkt_report");
  KktReport report;
  const Vector margins = forward(p, x).array() * y.array();
  report.margin_min = margins.minCoeff();
  if (!(report.margin_min > 0.0)) {
    report.feasible = false;
    report.margin_violations = static_cast<int>((margins.array() < 1.0).count());
    report.stationarity_residual = std::numeric_limits<double>::infinity();
    report.lambda_scale = lambda_scale;
    return report;
  }
  report.feasible = true;
  report.normalization = std::cbrt(report.margin_min);
  const QuadNetParams t = p.scaled(1.0 / report.normalization);
  const Vector normalized_margins = margins / report.margin_min;
  report.margin_violations = static_cast<int>((normalized_margins.array() < 1.0 - 1e-12).count());

  const QuadNetParams g = mean_signed_gradient(t, x, y);
  report.lambda_scale = lambda_scale > 0.0 ? lambda_scale : fit_lambda_scale(t, x, y);
  const QuadNetParams diff = axpy(-report.lambda_scale, g, t);
  report.stationarity_residual = diff.norm() / t.norm();
  return report;
}

FixedPointResult kkt_fixed_point(const GmmDataset& data, Eigen::Index d_h, double lambda_scale,
                                 std::uint64_t seed, const FixedPointOptions& options) {
  if (!(lambda_scale > 0.0)) throw InputError("kkt_fixed_point: lambda_scale must be positive");
  if (d_h < 1) throw InputError("kkt_fixed_point: d_h must be at least 1");
  if (!(options.damping > 0.0 && options.damping <= 1.0)) {
    throw InputError("kkt_fixed_point: damping must lie in (0, 1]");
  }
  const RowMatrix& x = data.samples;
  const Eigen::Index d = data.dim();
  const double n = static_cast<double>(data.count());
  if (data.count() == 0) throw InputError("kkt_fixed_point: empty dataset");
  const Matrix m = symmetrize(x.transpose() * data.labels.asDiagonal() * x / n);
  const double m_norm = m.norm();
  if (!(m_norm > 0.0)) throw NumericalError("kkt_fixed_point: signed second moment vanishes");
  // Shifted so that every eigenvalue is nonnegative and the ordering by signed
  // eigenvalue is kept: (M / |M| + I) / 2.
  const Matrix shifted = 0.5 * (m / m_norm + Matrix::Identity(d, d));

  // Only min(d_h, d) mutually orthogonal directions exist; further units stay at zero.
  const Eigen::Index units = std::min(d_h, d);
  Matrix u = init_params(d, units, 1.0, derive_seed(seed, streams::kInit)).W.transpose();  // d x units
  auto orthonormalize = [&](Matrix& a) {
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
      for (Eigen::Index j = 0; j < i; ++j) a.col(i) -= a.col(j).dot(a.col(i)) * a.col(j);
      const double nrm = a.col(i).norm();
      if (nrm > 0.0) a.col(i) /= nrm;
    }
  };
  orthonormalize(u);

  FixedPointResult result;
  const double eta = options.damping;
  for (int it = 1; it <= options.max_iterations; ++it) {
    // The direction of w_i is a fixed point of w -> M w up to scale.
    Matrix next = (1.0 - eta) * u + eta * (shifted * u);
    orthonormalize(next);
    for (Eigen::Index i = 0; i < units; ++i) {
      if (next.col(i).dot(u.col(i)) < 0.0) next.col(i) = -next.col(i);
    }
    const double update = (next - u).norm();
    u = std::move(next);
    result.iterations = it;
    if (update < options.update_tol) {
      const Matrix mu = m * u;
      const Vector rayleigh = (u.transpose() * mu).diagonal();
      const double eig_residual = (mu - u * rayleigh.asDiagonal()).norm() / m_norm;
      if (eig_residual < options.residual_tol) {
        result.converged = true;
        break;
      }
    }
  }
  if (!result.converged) {
    std::ostringstream msg;
    msg << "kkt_fixed_point: no convergence within " << options.max_iterations << " iterations";
    log_note(msg.str());
  }

  const double s = lambda_scale;
  QuadNetParams p = QuadNetParams::zeros(d, d_h);
  for (Eigen::Index i = 0; i < units; ++i) {
    const double mi = u.col(i).dot(m * u.col(i));
    if (std::abs(mi) <= 1e-14 * m_norm) continue;
    p.v[i] = 1.0 / (2.0 * s * mi);
    p.W.row(i) = u.col(i).transpose() / (std::sqrt(2.0) * s * std::abs(mi));
  }
  const QuadNetParams image = stationarity_map(p, data, s);
  result.residual_v = relative_distance(p.v, image.v);
  result.residual_w = relative_distance(p.W, image.W);
  result.params = std::move(p);
  return result;
}

void save_checkpoint(const std::filesystem::path& dir, const std::string& stem, const QuadNetParams& p,
                     const TrainConfig& cfg, const std::vector<TrainRecord>& history) {
  std::filesystem::create_directories(dir);
  io::write_bocm(dir / (stem + ".W.bocm"), p.W);
  io::write_bocm(dir / (stem + ".v.bocm"), p.v);
  nlohmann::json meta{
      {"d", p.dim()},
      {"d_h", p.hidden()},
      {"b", p.b},
      {"config",
       {{"learning_rate", cfg.learning_rate},
        {"steps", cfg.steps},
        {"init_scale", cfg.init_scale},
        {"seed", cfg.seed},
        {"use_bias", cfg.use_bias},
        {"optimizer", to_string(cfg.optimizer)}}},
      {"step", history.empty() ? 0 : history.back().step},
  };
  io::write_file_atomic(dir / (stem + ".json"), meta.dump(2) + "\n");
  io::Table table{{"step", "loss", "accuracy", "norm"}, {}};
  for (const auto& r : history) table.rows.push_back({double(r.step), r.loss, r.accuracy, r.norm});
  io::write_table(dir / (stem + ".history.csv"), table);
}

QuadNetParams load_checkpoint(const std::filesystem::path& dir, const std::string& stem) {
  QuadNetParams p;
  p.W = io::read_bocm(dir / (stem + ".W.bocm"));
  p.v = io::read_bocm(dir / (stem + ".v.bocm"));
  const auto meta = nlohmann::json::parse(io::read_file(dir / (stem + ".json")));
  p.b = meta.at("b").get<double>();
  require_same_dim(p.v.size(), p.W.rows(), "load_checkpoint");
  if (!p.all_finite()) throw InputError("load_checkpoint: non-finite parameters");
  return p;
}

}  // namespace boclab
