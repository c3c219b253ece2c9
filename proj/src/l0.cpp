#include "coarse/l0.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "coarse/seeds.hpp"

namespace coarse {

namespace {

int sign_copies_for(int c1) {
  // Smallest K with (2/3)^K <= 1/(100 c1).
  return static_cast<int>(std::ceil(std::log(100.0 * c1) / std::log(1.5)));
}

uint64_t add_mod(uint64_t a, uint64_t b, uint64_t p) {
  uint64_t r = a + b;
  if (r >= p) r -= p;
  return r;
}

uint64_t delta_times_weight_mod(int64_t delta, uint64_t weight, uint64_t p) {
  uint64_t mag = static_cast<uint64_t>(delta < 0 ? -delta : delta) % p;
  uint64_t prod = static_cast<uint64_t>(
      (static_cast<unsigned __int128>(mag) * weight) % p);
  if (delta < 0 && prod != 0) prod = p - prod;
  return prod;
}

int log2_ceil(uint64_t v) {
  int b = 0;
  while ((1ull << b) < v && b < 63) ++b;
  return b;
}

}  // namespace

L0Profile L0Profile::paper() { return with_constants(25, 100, 0.125); }
L0Profile L0Profile::desk() { return with_constants(5, 20, 0.5); }
L0Profile L0Profile::desk16() { return with_constants(5, 16, 0.5); }

L0Profile L0Profile::with_constants(int c1, int c2, double beta) {
  if (c1 < 1 || c2 <= c1 || beta <= 0 || beta >= 1)
    throw std::invalid_argument("L0Profile: need 1 <= c1 < c2 and beta in (0,1)");
  L0Profile p;
  p.c1 = c1;
  p.c2 = c2;
  p.beta = beta;
  p.c = static_cast<int>(std::llround(static_cast<double>(c1) * c1 / (beta * beta)));
  p.K = sign_copies_for(c1);
  return p;
}

RoughL0Sketch::RoughL0Sketch(uint64_t n, int t, int64_t M, uint64_t seed,
                             const L0Profile& profile)
    : n_(n), t_(t), M_(M), seed_(seed), profile_(profile) {
  if (n < 2) throw std::invalid_argument("RoughL0Sketch: n must be >= 2");
  if (t < 1) throw std::invalid_argument("RoughL0Sketch: t must be >= 1");
  if (M < 1) throw std::invalid_argument("RoughL0Sketch: M must be >= 1");
  level_base_ = static_cast<uint64_t>(std::floor(std::pow(static_cast<double>(n), 1.0 / t) + 1e-9));
  if (level_base_ < 2)
    throw std::invalid_argument("RoughL0Sketch: n^(1/t) must be at least 2");
  init_families();
  counters_.assign(static_cast<size_t>(t_) * profile_.K * profile_.c, 0);
}

void RoughL0Sketch::init_families() {
  SeedSequence seq(seed_);
  // p ~ c^3 log^2 M keeps each counter at O(log c + log log M) bits while
  // leaving enough primes that a bucket value is divisible by p only with
  // negligible probability.
  double logM = std::max(2.0, std::log2(static_cast<double>(M_) + 1.0));
  uint64_t lo = static_cast<uint64_t>(static_cast<double>(profile_.c) * profile_.c *
                                      profile_.c * logM * logM);
  lo = std::max<uint64_t>(lo, 1u << 10);
  p_ = sample_prime(lo, 8 * lo, seq.next());
  h_ = KWiseHash(seq.next(), 2, n_, n_);
  g_ = KWiseHash(seq.next(), 2, n_, profile_.c);
  signs_.clear();
  signs_.reserve(profile_.K);
  for (int j = 0; j < profile_.K; ++j) signs_.emplace_back(seq.next(), n_);
}

int RoughL0Sketch::level_of(uint64_t index) const {
  if (index >= n_) throw std::out_of_range("RoughL0Sketch: index outside [0, n)");
  uint64_t hv = h_(index);
  int b = 0;
  uint64_t m = 1;
  while (b < t_) {
    m *= level_base_;
    if (hv % m != 0) break;
    ++b;
  }
  return b;
}

void RoughL0Sketch::update(const Update& u) {
  int b = level_of(u.index);
  if (b == 0) return;
  uint64_t bucket = g_(u.index);
  for (int level = 0; level < b; ++level) {
    for (int j = 0; j < profile_.K; ++j) {
      uint64_t inc = delta_times_weight_mod(u.delta * signs_[j](u.index), 1, p_);
      counter(level, j, bucket) = add_mod(counter(level, j, bucket), inc, p_);
    }
  }
}

int RoughL0Sketch::select_level() const {
  for (int level = t_; level >= 1; --level) {
    int occupied = 0;
    for (int k = 0; k < profile_.c; ++k) {
      bool nonzero = false;
      for (int j = 0; j < profile_.K && !nonzero; ++j)
        nonzero = counter(level - 1, j, k) != 0;
      if (nonzero) ++occupied;
      if (occupied > profile_.c1) return level;
    }
  }
  return 0;
}

L0Estimate RoughL0Sketch::estimate() const {
  int J = select_level();
  L0Estimate e;
  e.value = profile_.c2 * std::pow(static_cast<double>(n_), static_cast<double>(J) / t_);
  e.factor = std::pow(static_cast<double>(n_), 1.0 / t_);
  e.success_prob = 0.9;
  return e;
}

bool RoughL0Sketch::same_parameters(const RoughL0Sketch& other) const {
  return n_ == other.n_ && t_ == other.t_ && M_ == other.M_ && seed_ == other.seed_ &&
         profile_.c1 == other.profile_.c1 && profile_.c2 == other.profile_.c2 &&
         profile_.c == other.profile_.c && profile_.K == other.profile_.K && p_ == other.p_;
}

void RoughL0Sketch::merge(const RoughL0Sketch& other) {
  if (!same_parameters(other))
    throw std::invalid_argument("RoughL0Sketch::merge: parameter/seed mismatch");
  for (size_t i = 0; i < counters_.size(); ++i)
    counters_[i] = add_mod(counters_[i], other.counters_[i], p_);
}

namespace {
constexpr char kRoughMagic[4] = {'C', 'R', 'L', '0'};
constexpr uint32_t kRoughVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!in) throw std::runtime_error("RoughL0Sketch: truncated blob");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}
}  // namespace

void RoughL0Sketch::serialize(std::ostream& out) const {
  out.write(kRoughMagic, 4);
  put<uint32_t>(out, kRoughVersion);
  put<uint64_t>(out, n_);
  put<int32_t>(out, t_);
  put<int64_t>(out, M_);
  put<uint64_t>(out, seed_);
  put<int32_t>(out, profile_.c1);
  put<int32_t>(out, profile_.c2);
  put<double>(out, profile_.beta);
  put<uint64_t>(out, p_);
  put<uint64_t>(out, counters_.size());
  for (uint64_t c : counters_) put<uint64_t>(out, c);
}

RoughL0Sketch RoughL0Sketch::deserialize(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kRoughMagic, 4) != 0)
    throw std::runtime_error("RoughL0Sketch: bad magic");
  uint32_t version = get<uint32_t>(in);
  if (version != kRoughVersion) throw std::runtime_error("RoughL0Sketch: unknown version");
  uint64_t n = get<uint64_t>(in);
  int32_t t = get<int32_t>(in);
  int64_t M = get<int64_t>(in);
  uint64_t seed = get<uint64_t>(in);
  int32_t pc1 = get<int32_t>(in);
  int32_t pc2 = get<int32_t>(in);
  double beta = get<double>(in);
  uint64_t prime = get<uint64_t>(in);
  RoughL0Sketch sk(n, t, M, seed, L0Profile::with_constants(pc1, pc2, beta));
  if (sk.p_ != prime) throw std::runtime_error("RoughL0Sketch: prime mismatch on load");
  uint64_t count = get<uint64_t>(in);
  if (count != sk.counters_.size()) throw std::runtime_error("RoughL0Sketch: size mismatch");
  for (uint64_t i = 0; i < count; ++i) sk.counters_[i] = get<uint64_t>(in);
  return sk;
}

SpaceReport RoughL0Sketch::space() const {
  SpaceReport r;
  r.counter_bits = counters_.size() * bits_for_modulus(p_);
  r.hash_seed_bits = h_.seed_bits() + g_.seed_bits();
  for (const auto& s : signs_) r.hash_seed_bits += s.seed_bits();
  r.hash_seed_bits += 64;  // prime selection seed
  r.auxiliary_bits = 5 * 64;  // n, t, M, p, level base
  return r;
}

double balls_to_bins_estimate(uint64_t occupied, uint64_t bins, double level_scale) {
  if (bins < 2) throw std::invalid_argument("balls_to_bins_estimate: need >= 2 bins");
  if (occupied > bins) throw std::invalid_argument("balls_to_bins_estimate: occupied > bins");
  if (occupied == bins)
    throw std::domain_error("balls_to_bins_estimate: every bin occupied, level too crowded");
  if (occupied == 0) return 0.0;
  double frac = static_cast<double>(occupied) / static_cast<double>(bins);
  return level_scale * std::log1p(-frac) / std::log1p(-1.0 / static_cast<double>(bins));
}

BallsBinsLevelSketch::BallsBinsLevelSketch(uint64_t n, int64_t M, uint64_t bins,
                                           int level_lo, int level_hi,
                                           int bucket_independence, uint64_t seed)
    : n_(n), M_(M), K_(bins), lo_(level_lo), hi_(level_hi), seed_(seed) {
  if (n < 2) throw std::invalid_argument("BallsBinsLevelSketch: n must be >= 2");
  if (bins < 16) throw std::invalid_argument("BallsBinsLevelSketch: too few bins");
  if (level_lo < 0 || level_hi < level_lo)
    throw std::invalid_argument("BallsBinsLevelSketch: bad level window");
  unsigned __int128 k3 = static_cast<unsigned __int128>(K_) * K_ * K_;
  if (k3 >= (static_cast<unsigned __int128>(1) << 60))
    throw std::invalid_argument("BallsBinsLevelSketch: bins too large");
  uint64_t K3 = static_cast<uint64_t>(k3);
  lmax_ = log2_ceil(n);
  SeedSequence seq(seed);
  double logM = std::max(2.0, std::log2(static_cast<double>(M_) + 1.0));
  uint64_t D = std::max<uint64_t>(1u << 10, static_cast<uint64_t>(100.0 * K_ * logM));
  unsigned __int128 d3 = static_cast<unsigned __int128>(D) * D * D;
  uint64_t hi = d3 > (static_cast<unsigned __int128>(1) << 62)
                    ? (1ull << 62)
                    : static_cast<uint64_t>(d3);
  p_ = sample_prime(D, hi, seq.next());
  h1_ = KWiseHash(seq.next(), 2, n_, 1ull << lmax_);
  h2_ = KWiseHash(seq.next(), 2, n_, K3);
  h3_ = KWiseHash(seq.next(), std::max(2, bucket_independence), K3, K_);
  h4_ = KWiseHash(seq.next(), 2, K3, K_);
  u_.resize(K_);
  uint64_t s = seq.next();
  for (uint64_t k = 0; k < K_; ++k) {
    uint64_t v;
    do {
      v = splitmix64(s) % p_;
    } while (v == 0);
    u_[k] = v;
  }
  counters_.assign(static_cast<size_t>(hi_ - lo_ + 1) * K_, 0);
}

void BallsBinsLevelSketch::update(const Update& u) {
  if (u.index >= n_) throw std::out_of_range("BallsBinsLevelSketch: index outside [0, n)");
  int depth = std::min(lsb(h1_(u.index)), hi_);
  if (depth < lo_) return;
  uint64_t id = h2_(u.index);
  uint64_t bucket = h3_(id);
  uint64_t inc = delta_times_weight_mod(u.delta, u_[h4_(id)], p_);
  for (int level = lo_; level <= depth; ++level) {
    uint64_t& c = counters_[static_cast<size_t>(level - lo_) * K_ + bucket];
    c = add_mod(c, inc, p_);
  }
}

uint64_t BallsBinsLevelSketch::occupancy(int level) const {
  if (level < lo_ || level > hi_)
    throw std::out_of_range("BallsBinsLevelSketch: level outside window");
  uint64_t occ = 0;
  const uint64_t* row = counters_.data() + static_cast<size_t>(level - lo_) * K_;
  for (uint64_t k = 0; k < K_; ++k)
    if (row[k] != 0) ++occ;
  return occ;
}

std::optional<int> BallsBinsLevelSketch::select_level(double threshold) const {
  for (int level = hi_; level >= lo_; --level) {
    if (static_cast<double>(occupancy(level)) > threshold * static_cast<double>(K_))
      return level;
  }
  return std::nullopt;
}

void BallsBinsLevelSketch::merge(const BallsBinsLevelSketch& other) {
  if (n_ != other.n_ || K_ != other.K_ || lo_ != other.lo_ || hi_ != other.hi_ ||
      seed_ != other.seed_ || p_ != other.p_)
    throw std::invalid_argument("BallsBinsLevelSketch::merge: parameter/seed mismatch");
  for (size_t i = 0; i < counters_.size(); ++i)
    counters_[i] = add_mod(counters_[i], other.counters_[i], p_);
}

SpaceReport BallsBinsLevelSketch::space() const {
  SpaceReport r;
  r.counter_bits = counters_.size() * bits_for_modulus(p_);
  r.hash_seed_bits = 4 * 64 + 64;
  r.auxiliary_bits = u_.size() * bits_for_modulus(p_) + 4 * 64;
  return r;
}

namespace {

struct RoughPassPlan {
  int t = 2;
  double factor = 0.0;
  int window_half = 0;
};

// Pass-1 factor: large enough that its own validity requirement
// n^(1/t) >= c2 holds, and about log(M) so the level window stays small.
RoughPassPlan plan_rough_pass(uint64_t n, int64_t M, const L0Profile& prof) {
  RoughPassPlan plan;
  double log2n = std::log2(static_cast<double>(n));
  double target = std::max(static_cast<double>(prof.c2),
                           std::log2(static_cast<double>(M) + 2.0));
  plan.t = std::max(2, static_cast<int>(std::floor(log2n / std::log2(target))));
  plan.factor = std::pow(static_cast<double>(n), 1.0 / plan.t);
  plan.window_half = static_cast<int>(std::ceil(std::log2(plan.factor))) +
                     static_cast<int>(std::ceil(std::log2(static_cast<double>(prof.c2)))) + 10;
  return plan;
}

}  // namespace

MultiPassResult twopass_estimate(const TurnstileStream& stream, double eps,
                                 uint64_t master_seed, const TwoPassConfig& cfg) {
  if (!(eps > 0.0) || eps > cfg.eps0)
    throw std::invalid_argument("twopass_estimate: eps outside (0, eps0]");
  const uint64_t n = stream.n;
  const int64_t M = std::max<int64_t>(1, stream.M);
  SeedSequence seq(master_seed);
  uint64_t rough_seed = seq.next();
  uint64_t big_seed = seq.next();
  uint64_t small_seed = seq.next();

  L0Profile prof = L0Profile::desk();
  RoughPassPlan plan = plan_rough_pass(n, M, prof);

  // Pass 1.
  RoughL0Sketch rough(n, plan.t, M, rough_seed, prof);
  for (const Update& u : stream.updates) rough.update(u);
  double rough_value = rough.estimate().value;

  // Pass 2: level window around the rough estimate plus the sparse branch.
  int lmax = log2_ceil(n);
  uint64_t K_big = static_cast<uint64_t>(std::ceil(cfg.bins_constant / (eps * eps)));
  uint64_t K_small = static_cast<uint64_t>(std::ceil(cfg.small_bins_constant / (eps * eps)));
  double sparse_limit = 4.0 / (eps * eps);  // agreement point of the two branches

  int center = static_cast<int>(
      std::round(std::log2(std::max(1.0, rough_value * eps * eps / 4.0))));
  int lo = std::clamp(center - plan.window_half, 0, lmax);
  int hi = std::clamp(center + plan.window_half, 0, lmax);

  int k3 = bucket_hash_independence(eps);
  BallsBinsLevelSketch big(n, M, K_big, lo, hi, k3, big_seed);
  BallsBinsLevelSketch small(n, M, K_small, 0, 0, k3, small_seed);
  for (const Update& u : stream.updates) {
    big.update(u);
    small.update(u);
  }

  MultiPassResult res;
  res.rough = rough_value;
  res.space = rough.space();
  SpaceReport bs = big.space(), ss = small.space();
  res.space.counter_bits += bs.counter_bits + ss.counter_bits;
  res.space.hash_seed_bits += bs.hash_seed_bits + ss.hash_seed_bits;
  res.space.auxiliary_bits += bs.auxiliary_bits + ss.auxiliary_bits;
  res.estimate.factor = 1.0 + eps;
  res.estimate.success_prob = 0.8;

  uint64_t t_small = small.occupancy(0);
  double small_value = -1.0;
  if (t_small < K_small) {
    double a = balls_to_bins_estimate(t_small, K_small, 1.0);
    if (a <= sparse_limit) small_value = a;
  }
  if (small_value >= 0.0) {
    res.small_branch = true;
    res.estimate.value = small_value;
    return res;
  }

  auto sel = big.select_level(cfg.select_threshold);
  if (!sel.has_value()) {
    res.estimate.value = rough_value;  // rough pass misplaced the window
    return res;
  }
  uint64_t t_big = big.occupancy(*sel);
  if (t_big >= K_big) {
    res.estimate.value = rough_value;
    return res;
  }
  res.estimate.value =
      std::ldexp(balls_to_bins_estimate(t_big, K_big, 1.0), *sel);
  return res;
}

MultiPassResult threepass_estimate(const TurnstileStream& stream, double eps,
                                   uint64_t master_seed, const TwoPassConfig& cfg) {
  if (!(eps > 0.0) || eps > cfg.eps0)
    throw std::invalid_argument("threepass_estimate: eps outside (0, eps0]");
  const uint64_t n = stream.n;
  const int64_t M = std::max<int64_t>(1, stream.M);
  SeedSequence seq(master_seed);
  uint64_t twopass_seed = seq.next();
  uint64_t level_seed = seq.next();

  // Passes 1-2: constant-factor estimate.
  TwoPassConfig coarse_cfg = cfg;
  coarse_cfg.eps0 = 0.3;
  MultiPassResult first = twopass_estimate(stream, 0.25, twopass_seed, coarse_cfg);
  double guess = std::max(0.0, first.estimate.value);

  // Pass 3: one level, sized so the expected survivor count sits in the
  // accurate band of the occupancy inversion.
  int lmax = log2_ceil(n);
  uint64_t K3 = static_cast<uint64_t>(std::ceil(cfg.bins_constant / (eps * eps)));
  int level = 0;
  if (guess > static_cast<double>(K3) / 40.0)
    level = std::clamp(
        static_cast<int>(std::ceil(std::log2(guess / (static_cast<double>(K3) / 40.0)))),
        0, lmax);
  int k3 = bucket_hash_independence(eps);
  BallsBinsLevelSketch single(n, M, K3, level, level, k3, level_seed);
  for (const Update& u : stream.updates) single.update(u);

  MultiPassResult res;
  res.rough = guess;
  res.space = first.space;
  SpaceReport ls = single.space();
  res.space.counter_bits += ls.counter_bits;
  res.space.hash_seed_bits += ls.hash_seed_bits;
  res.space.auxiliary_bits += ls.auxiliary_bits;
  res.estimate.factor = 1.0 + eps;
  res.estimate.success_prob = 0.75;

  uint64_t t = single.occupancy(level);
  if (t >= K3) {
    res.estimate.value = guess;
    return res;
  }
  res.estimate.value = std::ldexp(balls_to_bins_estimate(t, K3, 1.0), level);
  return res;
}

}  // namespace coarse
