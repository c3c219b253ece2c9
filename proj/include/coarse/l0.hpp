#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coarse/hashing.hpp"
#include "coarse/space.hpp"
#include "coarse/stream.hpp"

// Distinct-elements estimators: the one-pass n^(1/t)-approximator built from
// geometric subsampling with mod-p counters, and the two-/three-pass
// (1 +- eps) estimators built from dyadic subsampling plus balls-into-bins
// occupancy inversion.

namespace coarse {

struct L0Estimate {
  double value = 0.0;
  double factor = 1.0;       // promised approximation ratio
  double success_prob = 0.0; // contract probability
};

// Constant profile for the rough sketch. c = (c1/beta)^2 buckets per level;
// K sign copies with K >= log_{3/2}(100 c1).
struct L0Profile {
  int c1;
  int c2;
  double beta;
  int c;
  int K;

  static L0Profile paper();  // c1=25, c2=100, beta=1/8  -> c=40000
  static L0Profile desk();   // c1=5,  c2=20,  beta=1/2  -> c=100
  // Desk constants with c2 lowered to 16 so the estimator's requirement
  // n^(1/t) >= c2 holds at n=2^16, t=4.
  static L0Profile desk16();
  static L0Profile with_constants(int c1, int c2, double beta);
};

// One-pass rough estimator. State is t*K*c counters mod a random prime p with
// log2(p) = O(log c + log log M); linear in the frequency vector.
class RoughL0Sketch {
 public:
  RoughL0Sketch(uint64_t n, int t, int64_t M, uint64_t seed,
                const L0Profile& profile = L0Profile::desk());

  void update(const Update& u);
  void update(uint64_t index, int64_t delta) { update(Update{index, delta}); }

  // Deepest subsampling level this index contributes to (0 = none).
  int level_of(uint64_t index) const;

  // Largest level with more than c1 occupied buckets; 0 if none qualifies.
  int select_level() const;
  L0Estimate estimate() const;

  void merge(const RoughL0Sketch& other);

  void serialize(std::ostream& out) const;
  static RoughL0Sketch deserialize(std::istream& in);

  SpaceReport space() const;

  uint64_t n() const { return n_; }
  int t() const { return t_; }
  uint64_t prime() const { return p_; }
  const L0Profile& profile() const { return profile_; }
  const std::vector<uint64_t>& counters() const { return counters_; }
  uint64_t level_base() const { return level_base_; }

  bool same_parameters(const RoughL0Sketch& other) const;

 private:
  RoughL0Sketch() = default;
  void init_families();
  uint64_t& counter(int level, int copy, uint64_t bucket) {
    return counters_[(static_cast<size_t>(level) * profile_.K + copy) * profile_.c + bucket];
  }
  const uint64_t& counter(int level, int copy, uint64_t bucket) const {
    return counters_[(static_cast<size_t>(level) * profile_.K + copy) * profile_.c + bucket];
  }

  uint64_t n_ = 0;
  int t_ = 0;
  int64_t M_ = 0;
  uint64_t seed_ = 0;
  L0Profile profile_{};
  uint64_t level_base_ = 0;  // floor(n^(1/t)), the per-level subsampling modulus
  uint64_t p_ = 0;
  KWiseHash h_;               // [n] -> [n], pairwise; drives the level rule
  KWiseHash g_;               // [n] -> [c], pairwise; picks the bucket
  std::vector<SignFamily> signs_;
  std::vector<uint64_t> counters_;  // t x K x c residues mod p
};

// ln(1 - T/K) / ln(1 - 1/K), scaled: inverts the expected occupancy of
// throwing A balls into K bins. Throws when T == K.
double balls_to_bins_estimate(uint64_t occupied, uint64_t bins, double level_scale);

// One window of dyadic subsampling levels [lo, hi]; a coordinate x lands in
// every level j <= lsb(h1(x)). Each level hashes survivors into K buckets
// whose contents are random-linear-combination residues mod p, so a bucket
// is zero iff (whp) it holds no nonzero coordinate.
class BallsBinsLevelSketch {
 public:
  BallsBinsLevelSketch(uint64_t n, int64_t M, uint64_t bins, int level_lo, int level_hi,
                       int bucket_independence, uint64_t seed);

  void update(const Update& u);

  uint64_t occupancy(int level) const;
  uint64_t bins() const { return K_; }
  int level_lo() const { return lo_; }
  int level_hi() const { return hi_; }
  uint64_t prime() const { return p_; }

  // Deepest level with occupancy above `threshold`, if any.
  std::optional<int> select_level(double threshold) const;

  void merge(const BallsBinsLevelSketch& other);
  SpaceReport space() const;

 private:
  uint64_t n_;
  int64_t M_;
  uint64_t K_;
  int lo_, hi_;
  uint64_t seed_;
  uint64_t p_;
  int lmax_;  // ceil(log2 n): depth of the dyadic hash
  KWiseHash h1_;  // [n] -> [2^lmax], pairwise; lsb gives the level
  KWiseHash h2_;  // [n] -> [K^3], pairwise; perfect-hash identity
  KWiseHash h3_;  // [K^3] -> [K], k-wise; the bucket
  KWiseHash h4_;  // [K^3] -> [K], pairwise; picks the random weight
  std::vector<uint64_t> u_;  // K random field values mod p
  std::vector<uint64_t> counters_;  // (hi-lo+1) x K
};

struct TwoPassConfig {
  double eps0 = 0.1;          // largest eps accepted
  double bins_constant = 360; // K = ceil(bins_constant / eps^2)
  double select_threshold = 0.011;
  double small_bins_constant = 128;
};

struct MultiPassResult {
  L0Estimate estimate;
  double rough = 0.0;        // pass-1 value
  bool small_branch = false; // answered by the sparse-regime branch
  SpaceReport space;
};

// Two passes: pass 1 runs the rough sketch at a log(M)-ish factor, pass 2
// runs the level-window sketch and the sparse-regime branch in parallel.
MultiPassResult twopass_estimate(const TurnstileStream& stream, double eps,
                                 uint64_t master_seed,
                                 const TwoPassConfig& cfg = TwoPassConfig());

// Third pass maintains a single level sized from a constant-factor two-pass
// estimate.
MultiPassResult threepass_estimate(const TurnstileStream& stream, double eps,
                                   uint64_t master_seed,
                                   const TwoPassConfig& cfg = TwoPassConfig());

}  // namespace coarse
