#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coarse/hashing.hpp"
#include "coarse/space.hpp"
#include "coarse/stream.hpp"

// Precision sampling: estimate a sum from per-term approximators of
// non-uniform accuracy 1/w_i, plus the two estimators built on it: the
// standalone F_q sketch (q > 2) and the (p,q)-cascaded-norm sketch that
// hashes scaled rows into buckets of per-bucket F_q sketches.

namespace coarse {

// Weights w_i >= 1 drawn pairwise independently: w = k/u for u uniform in
// (0,1], clamped above at n^3 k. E[w^a] = O(k^a) for a in (0,1) and
// E[w | w <= n^3 k] = O(k log n).
struct PrecisionWeights {
  uint64_t n = 0;
  uint64_t k = 1;
  double rho = 0.0;
  double eps = 0.0;
  std::vector<double> w;
};

PrecisionWeights draw_weights(uint64_t n, double rho, double eps, uint64_t seed);
PrecisionWeights draw_weights_k(uint64_t n, uint64_t k, uint64_t seed);

// A (rho, f)-approximator of tau satisfies tau/f - rho <= value <= f*tau + rho.
struct ApproximatorPair {
  double value = 0.0;
  double rho = 0.0;
  double f = 1.0;
};

// Combines per-term (1/w_i, f)-approximators of a_i in [0,1] into a
// (rho, f*e^eps)-approximator of sum a_i with probability >= 2/3. Terms that
// are large relative to their precision enter directly; the rest enter
// through a threshold count scaled by its inclusion probability.
ApproximatorPair reconstruct(const PrecisionWeights& weights,
                             std::span<const double> approximations, double f,
                             double rho, double eps);

// Linear sketch for F_q = ||x||_q^q, q > 2: CountSketch of the w^(1/q)-scaled
// vector plus an F_2 sketch that sets the recovery threshold. Recovered
// coordinates are combined by inverse-propensity, so the estimate lands
// within the declared factor of F_q with probability >= 2/3.
class FqPrecisionSketch {
 public:
  FqPrecisionSketch(uint64_t n, double q, int64_t M, uint64_t seed,
                    double f_target = 2.0, uint64_t width_override = 0);

  void update(const Update& u) { update_real(u.index, static_cast<double>(u.delta)); }
  void update_real(uint64_t index, double delta);

  double estimate() const;  // F_q estimate

  double f_target() const { return f_target_; }
  uint64_t width() const { return width_; }
  uint64_t cs_rows() const { return cs_rows_; }
  SpaceReport space() const;

  // Width the default construction would pick; usable without allocating.
  // A fixed leading constant keeps the width proportional to n^(1-2/q)
  // across plans.
  static uint64_t default_width(uint64_t n, double q);

  // Smallest width meeting the recovery-variance bound at this (n, q); used
  // for the per-bucket sketches inside the cascaded estimator.
  static uint64_t tuned_width(uint64_t n, double q);

  void merge(const FqPrecisionSketch& other);

 private:
  double point_query(uint64_t index) const;

  uint64_t n_;
  double q_;
  int64_t M_;
  uint64_t seed_;
  double f_target_;
  uint64_t width_;
  uint64_t cs_rows_;
  PrecisionWeights weights_;
  std::vector<KWiseHash> cs_hash_;
  std::vector<SignFamily> cs_sign_;
  std::vector<double> cs_table_;  // cs_rows x width
  uint64_t f2_group_size_;
  int f2_groups_;
  std::vector<SignFamily> f2_signs_;
  std::vector<double> f2_y_;
};

// Cascaded (p,q)-norm sketch: rows scaled by w_i^(1/p) and a random sign,
// hashed into buckets, one F_q sketch per bucket. Recovery runs the
// precision-sampling reconstruction over rows using each row's bucket value.
class CascadedSketch {
 public:
  CascadedSketch(uint64_t n_rows, uint64_t n_cols, double p, double q, double alpha,
                 int64_t M, uint64_t seed);

  void update(uint64_t row, uint64_t col, int64_t delta);
  void update(const MatrixEntryUpdate& u) { update(u.row, u.col, u.delta); }

  // Z with ||X||_{p,q} <= Z <= alpha ||X||_{p,q}, probability >= 2/3.
  double estimate() const;

  uint64_t buckets() const { return n_buckets_; }
  SpaceReport space() const;

 private:
  uint64_t n_rows_, n_cols_;
  double p_, q_, alpha_;
  int64_t M_;
  uint64_t seed_;
  uint64_t n_buckets_;
  double side_margin_;  // one-sided multiplier applied to the mid estimate
  PrecisionWeights row_w_;
  KWiseHash row_hash_;
  SignFamily row_sign_;
  std::vector<FqPrecisionSketch> bucket_;
};

double cascaded_estimate(const MatrixStream& stream, double p, double q, double alpha,
                         uint64_t seed, SpaceReport* space_out = nullptr);

}  // namespace coarse
