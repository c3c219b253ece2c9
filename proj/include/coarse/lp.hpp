#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "coarse/hashing.hpp"
#include "coarse/space.hpp"
#include "coarse/stream.hpp"

// l_p estimation for 0 < p <= 2: the p-stable linear sketch with median
// estimator, the sign sketch for p = 2, pairwise-independent uniform
// sampling, and the two-pass moment estimator that samples coordinates
// against a first-pass constant-factor estimate.

namespace coarse {

// Chambers-Mallows-Stuck transform: one draw from the p-stable law given
// theta uniform in (-pi/2, pi/2) and t uniform in (0, 1). Callers must
// resample on the measure-zero singularities t = 0 and theta = +-pi/2.
double cms_p_stable(double p, double theta, double t_uniform);

// Median of |D_p| on a 0.01 grid of p, generated once by seeded Monte Carlo
// and shipped as a data file next to its generator.
class PStableMedianTable {
 public:
  static const PStableMedianTable& shared();  // loads data/pstable_medians.txt
  static PStableMedianTable load(const std::string& path);
  static void generate(std::ostream& out, uint64_t draws_per_point, double grid_step,
                       uint64_t seed, int threads = 2);

  double median_abs(double p) const;  // nearest grid point

 private:
  std::vector<double> grid_p_;
  std::vector<double> median_;
};

// Linear sketch y = Ax with r = ceil(36/eps^2) rows of p-stable entries.
// Entries are generated on demand from (seed, row, column) with k-wise
// independence within a row, k = min(32, ceil(eps^-p)), and rounded to the
// grid delta_round.
class PStableSketch {
 public:
  PStableSketch(uint64_t n, double p, double eps, int64_t M, uint64_t seed,
                uint64_t rows_override = 0, double grid_override = 0.0,
                double clamp_override = 0.0);

  void update(const Update& u);
  void update(uint64_t index, int64_t delta) { update(Update{index, delta}); }

  // median_i |y_i| / median(|D_p|); (1 +- eps) of ||x||_p with prob >= 9/10.
  double estimate() const;

  double entry(uint64_t row, uint64_t col) const;  // test hook

  void merge(const PStableSketch& other);
  SpaceReport space() const;

  uint64_t rows() const { return rows_; }
  double p() const { return p_; }
  double grid() const { return grid_; }
  const std::vector<double>& projections() const { return y_; }

 private:
  uint64_t n_;
  double p_;
  double eps_;
  int64_t M_;
  uint64_t seed_;
  uint64_t rows_;
  int k_;
  double grid_;
  double clamp_;
  std::vector<KWiseHash> row_hash_;
  std::vector<double> y_;
};

// Sign sketch for F_2: median of 7 group means over 4-wise independent sign
// projections, ceil(8/eps^2) rows per group.
class AmsF2Sketch {
 public:
  AmsF2Sketch(uint64_t n, double eps, int64_t M, uint64_t seed);

  void update(const Update& u);
  void update(uint64_t index, int64_t delta) { update(Update{index, delta}); }

  double estimate() const;  // (1 +- eps) F_2 with prob >= 9/10

  void merge(const AmsF2Sketch& other);
  SpaceReport space() const;

  uint64_t rows() const { return y_.size(); }
  const std::vector<int64_t>& projections() const { return y_; }

 private:
  uint64_t n_;
  double eps_;
  int64_t M_;
  uint64_t seed_;
  uint64_t group_size_;
  int groups_;
  std::vector<SignFamily> signs_;
  std::vector<int64_t> y_;
};

// (1/qprob) * sum of |x_i|^p over a pairwise-independent sample of rate qprob.
double uniform_sample_fp(const FrequencyVector& x, double qprob, double p, uint64_t seed);

struct FpTwoPassResult {
  double value = 0.0;        // estimate of ||x||_p^p
  double first_pass = 0.0;   // pass-1 lower bound on the moment
  double qprob = 1.0;
  uint64_t sampled_nonzeros = 0;
  SpaceReport space;
};

// Pass 1: constant-factor moment estimate. Pass 2: pairwise sampling at rate
// min(1, C eps^-2 M^p / Z) plus the inner sketch on sampled coordinates with
// coarse generator precision. Returns a (1 +- eps) estimate of ||x||_p^p with
// probability >= 9/10.
FpTwoPassResult fp_twopass_estimate(const TurnstileStream& stream, double p, double eps,
                                    uint64_t master_seed, double qprob_constant = 4.0);

}  // namespace coarse
