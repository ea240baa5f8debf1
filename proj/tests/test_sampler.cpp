#include "boclab/rng.hpp"
#include "boclab/sampler.hpp"

#include <doctest.h>

#include <cmath>

using namespace boclab;

namespace {

Matrix second_moment(const RowMatrix& x) { return x.transpose() * x / static_cast<double>(x.rows()); }

double rel_frobenius(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("standard normal moments") {
  const CovarianceModel c(Spectrum(Vector::Ones(1)), Basis::identity(1));
  const RowMatrix x = sample_gaussian(c, 100000, 42);
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / (x.rows() - 1);
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("sample covariance concentrates") {
  const CovarianceModel c(powerlaw_spectrum(20, 0.5), haar_orthogonal(20, 3));
  const RowMatrix x = sample_gaussian(c, 100000, 7);
  CHECK(rel_frobenius(second_moment(x), c.matrix()) <= 0.05);
}

TEST_CASE("sampling is deterministic per seed") {
  const CovarianceModel c(powerlaw_spectrum(5, 0.5), haar_orthogonal(5, 3));
  CHECK(sample_gaussian(c, 50, 9) == sample_gaussian(c, 50, 9));
  CHECK(sample_gaussian(c, 50, 9) != sample_gaussian(c, 50, 10));
  // A longer draw extends a shorter one.
  CHECK(sample_gaussian(c, 80, 9).topRows(50) == sample_gaussian(c, 50, 9));
}

TEST_CASE("samples carry the model mean") {
  Vector mu(3);
  mu << 1.0, -2.0, 0.5;
  const CovarianceModel c(powerlaw_spectrum(3, 0.0), Basis::identity(3), mu);
  const RowMatrix x = sample_gaussian(c, 40000, 1);
  CHECK((x.colwise().mean().transpose() - mu).norm() < 0.03);
}

TEST_CASE("gmm dataset layout") {
  const CovarianceModel ca(powerlaw_spectrum(6, 0.5), Basis::identity(6));
  const CovarianceModel cb(powerlaw_spectrum(6, 0.2), Basis::identity(6));
  const int n = 100;
  const std::uint64_t seed = 77;
  const GmmDataset data = make_gmm_dataset(ca, cb, n, seed);
  REQUIRE(data.count() == 2 * n);
  CHECK(data.labels.sum() == 0.0);

  const RowMatrix xa = sample_gaussian(ca, n, seed);
  const RowMatrix xb = sample_gaussian(cb, n, seed ^ kClassBSalt);
  for (Eigen::Index r = 0; r < data.count(); ++r) {
    const int o = data.origin[static_cast<std::size_t>(r)];
    if (o < n) {
      CHECK(data.labels[r] == 1.0);
      CHECK(data.samples.row(r) == xa.row(o));
    } else {
      CHECK(data.labels[r] == -1.0);
      CHECK(data.samples.row(r) == xb.row(o - n));
    }
  }
  // Rows are shuffled rather than stacked.
  CHECK(data.origin != [&] {
    std::vector<int> id(2 * n);
    for (int i = 0; i < 2 * n; ++i) id[static_cast<std::size_t>(i)] = i;
    return id;
  }());
}

TEST_CASE("identical classes have centred label-conditional means") {
  const CovarianceModel c(powerlaw_spectrum(4, 0.5), haar_orthogonal(4, 2));
  const GmmDataset data = make_gmm_dataset(c, c, 100, 5);
  for (double label : {1.0, -1.0}) {
    Vector sum = Vector::Zero(4);
    int count = 0;
    for (Eigen::Index r = 0; r < data.count(); ++r) {
      if (data.labels[r] != label) continue;
      sum += data.samples.row(r).transpose();
      ++count;
    }
    const Vector mean = sum / count;
    for (int j = 0; j < 4; ++j) {
      const double se = std::sqrt(c.matrix()(j, j) / count);
      CHECK(std::abs(mean[j]) <= 3.5 * se);
    }
  }
}

TEST_CASE("class covariance error shrinks like sqrt(d/N)") {
  const CovarianceModel c(powerlaw_spectrum(10, 0.3), haar_orthogonal(10, 4));
  double previous = 0.0;
  std::vector<double> errors;
  for (int n : {2000, 8000, 32000}) {
    double e = 0.0;
    for (int rep = 0; rep < 5; ++rep) e += rel_frobenius(second_moment(sample_gaussian(c, n, derive_seed(n, rep))), c.matrix());
    errors.push_back(e / 5.0);
  }
  (void)previous;
  // Quadrupling N halves the error.
  CHECK(errors[0] / errors[1] == doctest::Approx(2.0).epsilon(0.25));
  CHECK(errors[1] / errors[2] == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("recolor with identical models is the identity") {
  const CovarianceModel c(powerlaw_spectrum(8, 0.5), haar_orthogonal(8, 1));
  const RowMatrix x = sample_gaussian(c, 200, 2);
  const RowMatrix y = recolor(x, c, c);
  CHECK((y - x).norm() <= 1e-8 * x.norm());
}

TEST_CASE("recolor matches the target covariance") {
  const CovarianceModel src(powerlaw_spectrum(10, 0.5), haar_orthogonal(10, 1));
  const CovarianceModel tgt(powerlaw_spectrum(10, 0.1), haar_orthogonal(10, 2));
  const RowMatrix x = sample_gaussian(src, 100000, 3);
  CHECK(rel_frobenius(second_moment(recolor(x, src, tgt)), tgt.matrix()) <= 0.05);

  // Exact pushforward: T Sigma_src T^T = Sigma_tgt.
  for (int d : {2, 3, 5}) {
    const CovarianceModel a(powerlaw_spectrum(d, 0.7), haar_orthogonal(d, 10 + d));
    const CovarianceModel b(powerlaw_spectrum(d, -0.2), haar_orthogonal(d, 20 + d));
    const Matrix t = recolor_transform(a, b);
    CHECK(rel_frobenius(t * a.matrix() * t.transpose(), b.matrix()) <= 1e-12);
  }
}

TEST_CASE("recolor round trip") {
  const CovarianceModel c1(powerlaw_spectrum(12, 0.5), haar_orthogonal(12, 5));
  const CovarianceModel c2(powerlaw_spectrum(12, 0.9), haar_orthogonal(12, 6));
  const RowMatrix x = sample_gaussian(c1, 300, 4);
  const RowMatrix back = recolor(recolor(x, c1, c2), c2, c1);
  CHECK((back - x).norm() <= 1e-6 * x.norm());
}

TEST_CASE("recolor centering") {
  Vector mu = Vector::Constant(3, 5.0);
  const CovarianceModel src(powerlaw_spectrum(3, 0.0), Basis::identity(3), mu);
  const CovarianceModel tgt(powerlaw_spectrum(3, 0.0), Basis::identity(3));
  const RowMatrix x = sample_gaussian(src, 1000, 8);
  const RowMatrix y = recolor(x, src, tgt);
  CHECK((y - (x.rowwise() - mu.transpose())).norm() <= 1e-10 * x.norm());

  RecolorOptions opts;
  opts.centering = Centering::kEmpirical;
  const RowMatrix z = recolor(x, src, tgt, opts);
  CHECK(z.colwise().mean().norm() <= 1e-10);
}
