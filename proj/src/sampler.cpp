#include "boclab/sampler.hpp"

#include "boclab/error.hpp"
#include "boclab/rng.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace boclab {

RowMatrix sample_gaussian(const CovarianceModel& c, int n, std::uint64_t seed) {
  if (n < 1) throw InputError("sample_gaussian: n must be at least 1");
  const Eigen::Index d = c.dim();
  Engine engine(seed);
  std::normal_distribution<double> normal;
  RowMatrix z(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = normal(engine);
  }
  // Row form of x = mu + F z.
  RowMatrix x = z * c.sampling_factor().transpose();
  x.rowwise() += c.mean().transpose();
  return x;
}

GmmDataset make_gmm_dataset(const CovarianceModel& ca, const CovarianceModel& cb, int n_per_class,
                            std::uint64_t seed) {
  require_same_dim(ca.dim(), cb.dim(), "make_gmm_dataset");
  if (n_per_class < 1) throw InputError("make_gmm_dataset: n_per_class must be at least 1");
  const RowMatrix xa = sample_gaussian(ca, n_per_class, seed);
  const RowMatrix xb = sample_gaussian(cb, n_per_class, seed ^ kClassBSalt);

  const int total = 2 * n_per_class;
  std::vector<int> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  Engine shuffle_engine(derive_seed(seed, streams::kShuffle));
  std::shuffle(order.begin(), order.end(), shuffle_engine);

  GmmDataset ds{RowMatrix(total, ca.dim()), Vector(total), order};
  for (int r = 0; r < total; ++r) {
    const int src = order[static_cast<std::size_t>(r)];
    if (src < n_per_class) {
      ds.samples.row(r) = xa.row(src);
      ds.labels[r] = 1.0;
    } else {
      ds.samples.row(r) = xb.row(src - n_per_class);
      ds.labels[r] = -1.0;
    }
  }
  return ds;
}

Matrix recolor_transform(const CovarianceModel& src, const CovarianceModel& tgt, double relative_floor) {
  require_same_dim(src.dim(), tgt.dim(), "recolor");
  const CovarianceModel s = src.canonical();
  const CovarianceModel t = tgt.canonical();
  const Vector& ls = s.spectrum().values();
  const double floor = relative_floor * ls[0];
  for (Eigen::Index i = 0; i < ls.size(); ++i) {
    if (ls[i] < floor) {
      std::ostringstream msg;
      msg << "recolor: source covariance is singular (eigenvalue " << ls[i] << " below floor " << floor
          << ")";
      throw NumericalError(msg.str());
    }
  }
  const Vector scale = (t.spectrum().values().array() / ls.array()).sqrt().matrix();
  return t.basis().matrix().transpose() * scale.asDiagonal() * s.basis().matrix();
}

RowMatrix recolor(const RowMatrix& x, const CovarianceModel& src, const CovarianceModel& tgt,
                  const RecolorOptions& options) {
  require_same_dim(x.cols(), src.dim(), "recolor input");
  const Matrix t = recolor_transform(src, tgt, options.relative_floor);
  Vector center = src.mean();
  if (options.centering == Centering::kEmpirical) center = x.colwise().mean().transpose();
  RowMatrix out = (x.rowwise() - center.transpose()) * t.transpose();
  out.rowwise() += tgt.mean().transpose();
  return out;
}

}  // namespace boclab
