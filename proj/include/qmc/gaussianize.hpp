#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>

#include "qmc/sampler.hpp"

namespace qmc {

enum class NormalTransform { icdf, box_muller };

// Standard normal quantile Q(u), AS241 rational approximation (Wichura,
// Applied Statistics 37, 1988). Absolute error below 1e-9 across
// u in [1e-12, 1-1e-12]. Throws DomainError outside (0,1).
double icdf_normal(double u);

// Box-Muller pair: z0 = sqrt(-2 ln u_even) cos(2 pi u_odd), z1 the sine
// twin. Requires u_even > 0 (log singularity).
std::pair<double, double> box_muller(double u_even, double u_odd);

struct NormalPointSet {
  Eigen::MatrixXd points;
  NormalTransform transform = NormalTransform::icdf;
  SamplerSpec source_spec;
  std::uint64_t start_index = 0;

  Eigen::Index n() const { return points.rows(); }
  int dim() const { return static_cast<int>(points.cols()); }
};

// Standard-normal points obtained by transforming unit-cube points from the
// given sampler. icdf applies Q elementwise; box_muller pairs dimension 2k
// (radius) with 2k+1 (angle) and therefore requires even dimension.
// spec.kind == iid_uniform with icdf is the plain "normal sampling"
// baseline. start_index applies to Sobol specs and is ignored for IID.
NormalPointSet normal_points(const SamplerSpec& spec, NormalTransform transform,
                             std::uint64_t start_index, std::int64_t n);

// Draws normal points from a shuffled cache so that consumers sharing one
// underlying low-discrepancy stream are decorrelated. Draws are without
// replacement within a cache generation; when fewer rows remain than the
// requested batch, the cache is regenerated from the next cache_capacity
// points of the stream (continuing the global Sobol index; leftovers are
// discarded) and reshuffled. Reshuffle r uses derive_seed(shuffle_seed, r).
// Single-owner: not safe for unsynchronized concurrent use.
class CachedNormalSampler {
 public:
  CachedNormalSampler(const SamplerSpec& spec, NormalTransform transform,
                      std::int64_t cache_capacity = 1'000'000,
                      std::uint64_t shuffle_seed = 0,
                      std::uint64_t start_index = kDefaultSobolStart);

  // Next `batch` rows of the shuffled cache.
  Eigen::MatrixXd draw(std::int64_t batch);

  std::int64_t remaining() const { return cache_.rows() - cursor_; }
  std::int64_t capacity() const { return capacity_; }
  int refill_count() const { return refill_count_; }

 private:
  void refill();

  SamplerSpec spec_;
  NormalTransform transform_;
  std::int64_t capacity_;
  std::uint64_t shuffle_seed_;
  std::uint64_t next_index_;
  Eigen::MatrixXd cache_;
  std::int64_t cursor_ = 0;
  int refill_count_ = 0;
};

}  // namespace qmc
