#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "coarse/instances.hpp"
#include "coarse/seeds.hpp"
#include "coarse/stream.hpp"

using namespace coarse;

TEST_SUITE_BEGIN("instances");

TEST_CASE("all-heads coin stream walks straight up") {
  CoinStreamSpec spec{1000, 0.4999, CoinMode::plain, 5.0};
  // beta just under 1/2: nearly every flip is heads.
  TurnstileStream s = gen_coin_stream(spec, 3);
  CHECK(s.n == 1);
  CHECK(check_stream_valid(s));
  FrequencyVector x = accumulate(s);
  CHECK(x.entries[0] >= 990);
}

TEST_CASE("unbiased endpoint obeys the Chebyshev envelope") {
  const uint64_t m = 1 << 16;
  const double k = 10.0;
  int inside = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    CoinStreamSpec spec{m, 0.0, CoinMode::plain, 5.0};
    FrequencyVector x = accumulate(gen_coin_stream(spec, derive_seed(5, t)));
    if (std::fabs(static_cast<double>(x.entries[0])) <=
        std::sqrt(k * static_cast<double>(m)))
      ++inside;
  }
  CHECK(static_cast<double>(inside) / trials >= 1.0 - 1.0 / (4.0 * k));
}

TEST_CASE("biased endpoint drifts past the envelope") {
  const uint64_t m = 1 << 16;
  const double k = 10.0;
  double beta = std::pow(static_cast<double>(m), -1.0 / 3.0 - 0.05);
  double drift = 2.0 * beta * m;
  int inside = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    CoinStreamSpec spec{m, beta, CoinMode::plain, 5.0};
    FrequencyVector x = accumulate(gen_coin_stream(spec, derive_seed(7, t)));
    if (static_cast<double>(x.entries[0]) >=
        drift - std::sqrt(k * static_cast<double>(m)))
      ++inside;
  }
  CHECK(static_cast<double>(inside) / trials >= 1.0 - 1.0 / (4.0 * k));
}

TEST_CASE("bounded-deletion coin streams keep their prefix norm up") {
  const uint64_t m = 100000;
  int ok = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    CoinStreamSpec spec{m, 0.0, CoinMode::bounded_deletion, 5.0};
    TurnstileStream s = gen_coin_stream(spec, derive_seed(11, t));
    CHECK(check_stream_valid(s));
    if (check_bounded_deletion(s, 2.0)) ++ok;
  }
  CHECK(ok >= 95);
}

TEST_CASE("random-order mode preserves the endpoint") {
  CoinStreamSpec a{5000, 0.1, CoinMode::plain, 5.0};
  CoinStreamSpec b{5000, 0.1, CoinMode::random_order, 5.0};
  FrequencyVector xa = accumulate(gen_coin_stream(a, 77));
  FrequencyVector xb = accumulate(gen_coin_stream(b, 77));
  CHECK(xa.entries[0] == xb.entries[0]);
}

TEST_CASE("verify_coin_gap separates the endpoints for quadratic G") {
  GEstimator g2{[](int64_t v) { return static_cast<double>(v) * v; }, 2.0};
  CoinGapReport rep = verify_coin_gap(g2, 1000000, 100, 99, 0.05, 1.0);
  CHECK(rep.pass_rate >= 0.80);
  CHECK(rep.threshold ==
        doctest::Approx(std::pow(1e6, (1.0 / 6.0 - 0.05) * 2.0)));
}

TEST_CASE("verify_coin_gap rejects degenerate estimators") {
  GEstimator flat{[](int64_t v) { return v == 0 ? 0.0 : 1.0; }, 1.0};
  CHECK_THROWS_AS(verify_coin_gap(flat, 1000, 10, 1), std::invalid_argument);
}

TEST_CASE("planted disjointness column sums to s exactly") {
  DisjInstance inst = gen_disj(1 << 10, 12, 1, 5);
  auto y = inst.column_sums();
  CHECK(y[inst.planted] == 12);
}

TEST_CASE("no-instance columns stay under the binomial tail bound") {
  const uint64_t n = 1 << 14;
  const int s = static_cast<int>(std::ceil(std::log2(static_cast<double>(n))));
  double bound = 4.0 * std::log2(static_cast<double>(n)) /
                 std::log2(std::log2(static_cast<double>(n)));
  int ok = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    DisjInstance inst = gen_disj(n, s, 0, derive_seed(21, t));
    auto y = inst.column_sums();
    int64_t maxcol = *std::max_element(y.begin(), y.end());
    if (static_cast<double>(maxcol) <= bound) ++ok;
  }
  CHECK(ok >= 99);
}

TEST_CASE("layered vector scales like 10^(T-1) on the planted layer") {
  const uint64_t n = 1 << 10;
  int ok = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    AugDisjLayered inst = gen_augdisj(n, 8, 3, derive_seed(31, t));
    // sup-norm bound from the construction
    int64_t m = 0;
    for (int64_t v : inst.y) m = std::max(m, std::abs(v));
    CHECK(m < static_cast<int64_t>(std::pow(10.0, inst.r)) * inst.s);
    long double f2 = 0.0L;
    for (int64_t v : inst.y) f2 += static_cast<long double>(v) * v;
    long double floor = 0.25L * n * std::pow(10.0L, 2.0L * (inst.T - 1));
    if (f2 >= floor) ++ok;
  }
  CHECK(ok >= 99);
}

TEST_CASE("yes instances plant the lifted column") {
  AugDisjLayered inst = gen_augdisj(1 << 10, 8, 3, 7, 2, 1);
  CHECK(inst.T == 2);
  CHECK(inst.yes);
  // Layer T contributes 10^(T-1) * s at the planted coordinate.
  CHECK(inst.y[inst.planted] >= 10 * 8);
}

TEST_CASE("moment concentration of the off-planted mass") {
  YConcentrationReport rep = verify_y_concentration(1 << 10, 8, 3, 4.0, 2000, 3, 2, 0.02);
  CHECK(rep.pass);
  CHECK(rep.deviation_freq <= 0.02);
  CHECK(rep.fitted_k1 > 0.0);
  CHECK(rep.mean_moment <=
        std::pow(rep.fitted_k1 * 4.0, 4.0) * (1 << 10) * std::pow(10.0, 4.0 * 2) *
            (1 + 1e-9));
}

TEST_CASE("p=2 layered moments match a direct simulation") {
  // With one layer (T=1) the vector is a plain sum of Bernoulli columns, so
  // the mean squared norm is n * E[Bin(s,1/s)^2] = n * (1 + (s-1)/s).
  const uint64_t n = 1 << 10;
  const int s = 8;
  YConcentrationReport rep = verify_y_concentration(n, s, 1, 2.0, 4000, 5, 1, 0.05);
  double expected = static_cast<double>(n - 1) * (1.0 + (s - 1.0) / s);
  CHECK(rep.mean_moment == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("augmented-indexing stream ratios") {
  const uint64_t n = 1 << 20;
  const int t = 16;
  // All-zero message: before Bob's fill the vector is empty.
  std::vector<int> u(t / 8, 0);
  AugIndexL0 inst = gen_augindex_l0(u, 1, n, t);
  CHECK(inst.alice.updates.empty());
  TurnstileStream combined = inst.alice;
  for (const Update& up : inst.bob_clear) combined.updates.push_back(up);
  double z1 = exact_moment(accumulate(combined), 0.0);
  CHECK(z1 == 0.0);
  for (const Update& up : inst.bob_fill) combined.updates.push_back(up);
  double z2 = exact_moment(accumulate(combined), 0.0);
  CHECK(z2 == doctest::Approx(static_cast<double>(inst.seg_len[0])));

  // A set bit at the queried segment leaves the count unchanged by the fill.
  std::vector<int> u2(t / 8, 1);
  AugIndexL0 inst2 = gen_augindex_l0(u2, 2, n, t);
  TurnstileStream c2 = inst2.alice;
  for (const Update& up : inst2.bob_clear) c2.updates.push_back(up);
  double z1b = exact_moment(accumulate(c2), 0.0);
  for (const Update& up : inst2.bob_fill) c2.updates.push_back(up);
  double z2b = exact_moment(accumulate(c2), 0.0);
  CHECK(z2b == doctest::Approx(z1b));

  // A clear bit at the queried segment forces the jump.
  std::vector<int> u3(t / 8, 1);
  u3[1] = 0;  // query segment 2
  AugIndexL0 inst3 = gen_augindex_l0(u3, 2, n, t);
  TurnstileStream c3 = inst3.alice;
  for (const Update& up : inst3.bob_clear) c3.updates.push_back(up);
  double z1c = exact_moment(accumulate(c3), 0.0);
  for (const Update& up : inst3.bob_fill) c3.updates.push_back(up);
  double z2c = exact_moment(accumulate(c3), 0.0);
  CHECK(z2c / z1c >= 0.5 * std::pow(static_cast<double>(n), 6.0 / t));
}

TEST_CASE("augmented-indexing validation") {
  std::vector<int> u(2, 0);
  CHECK_THROWS_AS(gen_augindex_l0(u, 1, 1 << 20, 15), std::invalid_argument);
  CHECK_THROWS_AS(gen_augindex_l0(u, 3, 1 << 20, 16), std::invalid_argument);
  // Segment lengths sum to at most n.
  AugIndexL0 inst = gen_augindex_l0(u, 1, 1 << 20, 16);
  CHECK(inst.seg_start[1] + inst.seg_len[1] <= (1 << 20));
}

TEST_CASE("sparse-signal instance geometry") {
  const uint64_t n = 1 << 14, k = 64;
  int norm_ok = 0, signal_ok = 0;
  uint64_t marginal_big = 0, marginal_total = 0;
  const int trials = 100;
  const double mag = 2.0 * std::sqrt(static_cast<double>(n) / k);
  const double noise_bound = std::sqrt(std::log(static_cast<double>(n)));
  for (int t = 0; t < trials; ++t) {
    PW11Instance inst = gen_pw11(n, k, derive_seed(61, t));
    CHECK(inst.support.size() == k / 2);
    CHECK(check_stream_valid(inst.stream));
    long double w2 = 0.0L;
    for (double w : inst.w) w2 += w * w;
    if (w2 >= 0.9L * n && w2 <= 1.1L * n) ++norm_ok;
    // Every signal entry clears 2 sqrt(n/k) - sqrt(log n) ...
    bool all_big = true;
    for (uint64_t i : inst.support) {
      all_big = all_big && std::fabs(inst.z[i]) >= mag - noise_bound;
      // ... and each entry individually clears 1.9 sqrt(n/k) almost always.
      if (std::fabs(inst.z[i]) >= 0.95 * mag) ++marginal_big;
      ++marginal_total;
    }
    if (all_big) ++signal_ok;
  }
  CHECK(norm_ok >= 90);
  CHECK(signal_ok >= 90);
  CHECK(static_cast<double>(marginal_big) / marginal_total >= 0.90);
}

TEST_CASE("family members are pairwise far apart") {
  PW11Instance inst = gen_pw11(1 << 10, 16, 9);
  for (uint64_t b1 = 0; b1 < inst.num_blocks; ++b1) {
    auto s1 = inst.family_support(b1);
    for (uint64_t b2 = b1 + 1; b2 < std::min<uint64_t>(inst.num_blocks, b1 + 8); ++b2) {
      auto s2 = inst.family_support(b2);
      std::vector<uint64_t> inter;
      std::set_intersection(s1.begin(), s1.end(), s2.begin(), s2.end(),
                            std::back_inserter(inter));
      CHECK(inter.empty());  // disjoint blocks differ in >= k coordinates
    }
  }
}

TEST_SUITE_END();
