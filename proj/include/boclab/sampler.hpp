#pragma once

#include "boclab/covmodel.hpp"

#include <cstdint>
#include <vector>

namespace boclab {

// n rows drawn iid from N(mean, Sigma) as mean + F z, F = B^T sqrt(Lambda).
// z is filled row by row from one engine seeded with `seed`.
RowMatrix sample_gaussian(const CovarianceModel& c, int n, std::uint64_t seed);

// Balanced two-class dataset. Label +1 marks class A, -1 class B.
struct GmmDataset {
  RowMatrix samples;
  Vector labels;
  // origin[r] is the row index in the unshuffled stack [A rows; B rows].
  std::vector<int> origin;

  Eigen::Index dim() const { return samples.cols(); }
  Eigen::Index count() const { return samples.rows(); }
};

// Class A rows come from sample_gaussian(ca, n, seed), class B rows from
// sample_gaussian(cb, n, seed ^ kClassBSalt). The stacked rows are shuffled
// with an engine seeded by derive_seed(seed, streams::kShuffle).
GmmDataset make_gmm_dataset(const CovarianceModel& ca, const CovarianceModel& cb, int n_per_class,
                            std::uint64_t seed);

enum class Centering { kModelMean, kEmpirical };

struct RecolorOptions {
  Centering centering = Centering::kModelMean;
  // Source eigenvalues below floor * lambda_max make the transform singular.
  double relative_floor = 1e-12;
};

// Whitening/recoloring map T = B_tgt^T sqrt(L_tgt) L_src^(-1/2) B_src.
Matrix recolor_transform(const CovarianceModel& src, const CovarianceModel& tgt,
                         double relative_floor = 1e-12);

// Applies T to every centered row and adds the target mean.
RowMatrix recolor(const RowMatrix& x, const CovarianceModel& src, const CovarianceModel& tgt,
                  const RecolorOptions& options = {});

}  // namespace boclab
