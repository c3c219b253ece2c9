#include "coarse/instances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "coarse/seeds.hpp"

namespace coarse {

TurnstileStream gen_coin_stream(const CoinStreamSpec& spec, uint64_t seed) {
  if (spec.length == 0) throw std::invalid_argument("gen_coin_stream: empty stream");
  if (!(std::fabs(spec.beta) < 0.5))
    throw std::invalid_argument("gen_coin_stream: |beta| must be < 1/2");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution heads(0.5 + spec.beta);
  TurnstileStream s;
  s.n = 1;
  std::vector<int64_t> flips(spec.length);
  for (uint64_t i = 0; i < spec.length; ++i) flips[i] = heads(rng) ? 1 : -1;
  if (spec.mode == CoinMode::random_order)
    std::shuffle(flips.begin(), flips.end(), rng);
  int64_t offset = 0;
  if (spec.mode == CoinMode::bounded_deletion) {
    offset = static_cast<int64_t>(
        std::ceil(spec.offset_c * std::sqrt(static_cast<double>(spec.length))));
    s.updates.push_back({0, offset});
  }
  int64_t x = offset;
  int64_t max_abs = std::abs(offset);
  s.updates.reserve(s.updates.size() + flips.size());
  for (int64_t f : flips) {
    s.updates.push_back({0, f});
    x += f;
    max_abs = std::max(max_abs, std::abs(x));
  }
  s.M = std::max<int64_t>(1, max_abs);
  return s;
}

CoinGapReport verify_coin_gap(const GEstimator& g, uint64_t m_len, int trials,
                              uint64_t seed, double epsilon, double constant) {
  if (!check_g_estimator(g, static_cast<int64_t>(m_len), derive_seed(seed, 0xC0)))
    throw std::invalid_argument("verify_coin_gap: G violates the estimator conditions");
  CoinGapReport rep;
  rep.pairs = trials;
  rep.threshold =
      constant * std::pow(static_cast<double>(m_len), (1.0 / 6.0 - epsilon) * g.gamma);
  double beta = std::pow(static_cast<double>(m_len), -1.0 / 3.0 - epsilon);
  CoinStreamSpec fair{m_len, 0.0, CoinMode::plain, 5.0};
  CoinStreamSpec biased{m_len, beta, CoinMode::plain, 5.0};
  int passed = 0;
  std::vector<double> ratios;
  ratios.reserve(trials);
  SeedSequence seq(seed);
  for (int tr = 0; tr < trials; ++tr) {
    FrequencyVector x0 = accumulate(gen_coin_stream(fair, seq.next()));
    FrequencyVector x1 = accumulate(gen_coin_stream(biased, seq.next()));
    double g0 = exact_g_norm(x0, g);
    double g1 = exact_g_norm(x1, g);
    double ratio = g0 > 0.0 ? g1 / g0
                            : (g1 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    ratios.push_back(ratio);
    if (ratio >= rep.threshold) ++passed;
  }
  rep.pass_rate = static_cast<double>(passed) / trials;
  auto mid = ratios.begin() + ratios.size() / 2;
  std::nth_element(ratios.begin(), mid, ratios.end());
  rep.median_ratio = *mid;
  return rep;
}

std::vector<int64_t> DisjInstance::column_sums() const {
  std::vector<int64_t> y(n, 0);
  for (const auto& row : bits)
    for (uint64_t i = 0; i < n; ++i) y[i] += row[i];
  return y;
}

DisjInstance gen_disj(uint64_t n, int s, int z, uint64_t seed) {
  if (s < 2) throw std::invalid_argument("gen_disj: need at least 2 players");
  DisjInstance inst;
  inst.n = n;
  inst.s = s;
  inst.z = z;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution bit(1.0 / s);
  inst.bits.assign(s, std::vector<uint8_t>(n, 0));
  for (int j = 0; j < s; ++j)
    for (uint64_t i = 0; i < n; ++i) inst.bits[j][i] = bit(rng) ? 1 : 0;
  if (z == 1) {
    inst.planted = rng() % n;
    for (int j = 0; j < s; ++j) inst.bits[j][inst.planted] = 1;
  }
  return inst;
}

AugDisjLayered gen_augdisj(uint64_t n, int s, int r, uint64_t seed, int forced_T,
                           int forced_yes) {
  if (s < 2 || r < 1) throw std::invalid_argument("gen_augdisj: need s >= 2, r >= 1");
  AugDisjLayered out;
  out.n = n;
  out.s = s;
  out.r = r;
  std::mt19937_64 rng(seed);
  out.T = forced_T > 0 ? forced_T : static_cast<int>(rng() % r) + 1;
  if (out.T > r) throw std::invalid_argument("gen_augdisj: forced_T > r");
  out.yes = forced_yes >= 0 ? forced_yes != 0 : (rng() & 1) != 0;
  out.planted = rng() % n;
  out.y.assign(n, 0);
  std::bernoulli_distribution bit(1.0 / s);
  int64_t scale = 1;
  // Layers deeper than T are cancelled by the receiver, so only t <= T
  // contribute to the final vector. A YES label plants the all-ones column
  // in the hidden layer.
  for (int t = 1; t <= out.T; ++t) {
    for (uint64_t i = 0; i < n; ++i) {
      int64_t col = 0;
      for (int j = 0; j < s; ++j) col += bit(rng) ? 1 : 0;
      if (t == out.T && out.yes && i == out.planted) col = s;
      out.y[i] += scale * col;
    }
    scale *= 10;
  }
  return out;
}

YConcentrationReport verify_y_concentration(uint64_t n, int s, int r, double p,
                                            int trials, uint64_t seed, int forced_T,
                                            double dev_tolerance) {
  if (p < 2) throw std::invalid_argument("verify_y_concentration: p must be >= 2");
  YConcentrationReport rep;
  rep.trials = trials;
  std::vector<double> moments(trials);
  SeedSequence seq(seed);
  int T = forced_T > 0 ? forced_T : (r + 1) / 2;
  for (int tr = 0; tr < trials; ++tr) {
    AugDisjLayered inst = gen_augdisj(n, s, r, seq.next(), T, 0);
    long double acc = 0.0L;
    for (uint64_t i = 0; i < n; ++i) {
      if (i == inst.planted) continue;
      if (inst.y[i] == 0) continue;
      acc += std::pow(static_cast<long double>(inst.y[i]), static_cast<long double>(p));
    }
    moments[tr] = static_cast<double>(acc);
  }
  long double mean = 0.0L;
  for (double m : moments) mean += m;
  mean /= trials;
  rep.mean_moment = static_cast<double>(mean);
  double scale = static_cast<double>(n) * std::pow(10.0, p * T);
  rep.fitted_k1 = std::pow(rep.mean_moment / scale, 1.0 / p) / p;
  rep.deviation_bound = 0.1 * scale;
  int deviated = 0;
  for (double m : moments)
    if (std::fabs(m - rep.mean_moment) > rep.deviation_bound) ++deviated;
  rep.deviation_freq = static_cast<double>(deviated) / trials;
  rep.pass = rep.deviation_freq <= dev_tolerance;
  return rep;
}

AugIndexL0 gen_augindex_l0(const std::vector<int>& u, uint64_t istar, uint64_t n, int t) {
  if (t % 8 != 0) throw std::invalid_argument("gen_augindex_l0: t must be divisible by 8");
  int l = t / 8;
  if (static_cast<int>(u.size()) != l)
    throw std::invalid_argument("gen_augindex_l0: u must have length t/8");
  if (istar < 1 || istar > static_cast<uint64_t>(l))
    throw std::invalid_argument("gen_augindex_l0: istar outside [1, l]");
  AugIndexL0 out;
  out.n = n;
  out.l = l;
  out.t = t;
  out.istar = istar;
  out.seg_len.resize(l);
  out.seg_start.resize(l);
  uint64_t pos = 0;
  for (int i = 1; i <= l; ++i) {
    double raw = std::pow(static_cast<double>(n), static_cast<double>(i) / l);
    double rounded = std::round(raw);
    uint64_t ceil_pow =
        std::fabs(raw - rounded) < 1e-6 ? static_cast<uint64_t>(rounded)
                                        : static_cast<uint64_t>(std::ceil(raw));
    out.seg_len[i - 1] = std::max<uint64_t>(1, ceil_pow / 2);
    out.seg_start[i - 1] = pos;
    pos += out.seg_len[i - 1];
  }
  if (pos > n)
    throw std::invalid_argument("gen_augindex_l0: segments exceed n; n too small for t");
  out.alice.n = n;
  out.alice.M = 1;
  for (int i = 1; i <= l; ++i) {
    if (!u[i - 1]) continue;
    for (uint64_t j = 0; j < out.seg_len[i - 1]; ++j)
      out.alice.updates.push_back({out.seg_start[i - 1] + j, 1});
  }
  for (int j = static_cast<int>(istar) + 1; j <= l; ++j) {
    if (!u[j - 1]) continue;
    for (uint64_t c = 0; c < out.seg_len[j - 1]; ++c)
      out.bob_clear.push_back({out.seg_start[j - 1] + c, -1});
  }
  for (uint64_t c = 0; c < out.seg_len[istar - 1]; ++c)
    out.bob_fill.push_back({out.seg_start[istar - 1] + c, 1});
  return out;
}

std::vector<uint64_t> PW11Instance::family_support(uint64_t block_index) const {
  uint64_t half = k / 2;
  if (block_index >= num_blocks)
    throw std::out_of_range("PW11Instance: block index outside family");
  std::vector<uint64_t> s(perm_.begin() + block_index * half,
                          perm_.begin() + (block_index + 1) * half);
  std::sort(s.begin(), s.end());
  return s;
}

PW11Instance gen_pw11(uint64_t n, uint64_t k, uint64_t seed) {
  if (k < 2 || k % 2 != 0) throw std::invalid_argument("gen_pw11: k must be even and >= 2");
  if (k > n) throw std::invalid_argument("gen_pw11: k must be <= n");
  if (n % (k / 2) != 0)
    throw std::invalid_argument("gen_pw11: n must be divisible by k/2");
  PW11Instance inst;
  inst.n = n;
  inst.k = k;
  inst.num_blocks = n / (k / 2);
  std::mt19937_64 rng(seed);
  inst.perm_.resize(n);
  std::iota(inst.perm_.begin(), inst.perm_.end(), 0);
  std::shuffle(inst.perm_.begin(), inst.perm_.end(), rng);
  inst.block = rng() % inst.num_blocks;
  inst.support = inst.family_support(inst.block);
  double mag = 2.0 * std::sqrt(static_cast<double>(n) / k);
  inst.x.assign(n, 0.0);
  for (uint64_t i : inst.support) inst.x[i] = (rng() & 1) ? mag : -mag;
  inst.w.resize(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (uint64_t i = 0; i < n; ++i) inst.w[i] = normal(rng);
  inst.z.resize(n);
  for (uint64_t i = 0; i < n; ++i) inst.z[i] = inst.x[i] + inst.w[i];
  inst.stream.n = n;
  int64_t max_abs = 1;
  for (uint64_t i = 0; i < n; ++i) {
    int64_t v = std::llround(inst.quantize_scale * inst.z[i]);
    if (v == 0) continue;
    inst.stream.updates.push_back({i, v});
    max_abs = std::max(max_abs, std::abs(v));
  }
  inst.stream.M = max_abs;
  return inst;
}

}  // namespace coarse
