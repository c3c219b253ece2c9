#pragma once

#include <cstdint>
#include <vector>

#include "coarse/stream.hpp"

// Generators for the adversarial inputs the estimators are benchmarked
// against: biased-coin walks on one coordinate, multiparty set-disjointness
// columns and their layered augmentation, the augmented-indexing distinct-
// elements stream, and sparse-signal-plus-Gaussian-noise instances. All
// generators are pure functions of their seed and emit streams that satisfy
// the declared magnitude bound.

namespace coarse {

enum class CoinMode { plain, bounded_deletion, random_order };

struct CoinStreamSpec {
  uint64_t length = 0;      // number of coin flips
  double beta = 0.0;        // heads probability is 1/2 + beta
  CoinMode mode = CoinMode::plain;
  double offset_c = 5.0;    // bounded mode starts from x_1 = offset_c * sqrt(length)
};

// Single-coordinate +-1 stream; bounded mode prepends the offset insertion.
TurnstileStream gen_coin_stream(const CoinStreamSpec& spec, uint64_t seed);

struct CoinGapReport {
  int pairs = 0;
  double pass_rate = 0.0;    // fraction of pairs with ratio >= threshold
  double median_ratio = 0.0;
  double threshold = 0.0;
};

// Ratio of G-norms between endpoints of a biased (beta = M^(-1/3-epsilon))
// and an unbiased coin stream, compared against constant * M^((1/6-epsilon)*gamma).
CoinGapReport verify_coin_gap(const GEstimator& g, uint64_t m_len, int trials,
                              uint64_t seed, double epsilon = 0.05,
                              double constant = 1.0);

struct DisjInstance {
  uint64_t n = 0;
  int s = 0;
  int z = 0;                 // 1 = planted all-ones column
  uint64_t planted = 0;      // the column, when z = 1
  std::vector<std::vector<uint8_t>> bits;  // s x n

  std::vector<int64_t> column_sums() const;
};

DisjInstance gen_disj(uint64_t n, int s, int z, uint64_t seed);

struct AugDisjLayered {
  uint64_t n = 0;
  int s = 0;
  int r = 0;
  int T = 0;                 // hidden index, 1-based
  bool yes = false;
  uint64_t planted = 0;
  std::vector<int64_t> y;    // sum over t <= T of 10^(t-1) * column sums of layer t
};

// forced_T = 0 draws T uniformly; forced_yes < 0 draws the label uniformly.
AugDisjLayered gen_augdisj(uint64_t n, int s, int r, uint64_t seed, int forced_T = 0,
                           int forced_yes = -1);

struct YConcentrationReport {
  int trials = 0;
  double mean_moment = 0.0;    // mean over trials of sum_{i != planted} |Y_i|^p
  double fitted_k1 = 0.0;      // K with mean = (K p)^p n 10^(pT) ... reported, not asserted
  double deviation_bound = 0.0;
  double deviation_freq = 0.0;
  bool pass = false;
};

YConcentrationReport verify_y_concentration(uint64_t n, int s, int r, double p,
                                            int trials, uint64_t seed, int forced_T,
                                            double dev_tolerance);

struct AugIndexL0 {
  uint64_t n = 0;
  int l = 0;
  int t = 0;
  uint64_t istar = 0;               // 1-based segment index queried
  std::vector<uint64_t> seg_len;    // lengths of segments 1..l
  std::vector<uint64_t> seg_start;
  TurnstileStream alice;            // fills segment i when u_i = 1
  std::vector<Update> bob_clear;    // clears segments j > istar with u_j = 1
  std::vector<Update> bob_fill;     // fills segment istar
};

// u in {0,1}^l with l = t/8; throws when t is not divisible by 8 or the
// segments do not fit in n.
AugIndexL0 gen_augindex_l0(const std::vector<int>& u, uint64_t istar, uint64_t n, int t);

struct PW11Instance {
  uint64_t n = 0;
  uint64_t k = 0;
  uint64_t block = 0;              // which family member was drawn
  uint64_t num_blocks = 0;
  std::vector<uint64_t> support;   // sorted, size k/2
  std::vector<double> x;           // 0 or +-2 sqrt(n/k)
  std::vector<double> w;           // N(0,1) noise
  std::vector<double> z;           // x + w
  int64_t quantize_scale = 8;
  TurnstileStream stream;          // round(scale * z)

  // Support of an arbitrary family member; the family is the set of blocks
  // of a seeded permutation, so distinct members are disjoint.
  std::vector<uint64_t> family_support(uint64_t block_index) const;

 private:
  friend PW11Instance gen_pw11(uint64_t, uint64_t, uint64_t);
  std::vector<uint64_t> perm_;
};

PW11Instance gen_pw11(uint64_t n, uint64_t k, uint64_t seed);

}  // namespace coarse
