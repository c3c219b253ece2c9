#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "coarse/hashing.hpp"
#include "coarse/seeds.hpp"

using namespace coarse;

TEST_SUITE_BEGIN("hashing");

TEST_CASE("k below 2 is rejected") {
  CHECK_THROWS_AS(KWiseHash(1, 1, 16, 16), std::invalid_argument);
  CHECK_THROWS_AS(KWiseHash(1, 0, 16, 16), std::invalid_argument);
}

TEST_CASE("fixed seed reproduces the same function") {
  KWiseHash a(42, 3, 256, 4);
  KWiseHash b(42, 3, 256, 4);
  std::vector<uint64_t> seq;
  for (uint64_t x = 0; x < 8; ++x) {
    CHECK(a(x) == b(x));
    CHECK(a(x) < 4);
    seq.push_back(a(x));
  }
  // Different seed gives a different function (overwhelmingly).
  KWiseHash c(43, 3, 256, 4);
  bool differs = false;
  for (uint64_t x = 0; x < 8; ++x) differs = differs || c(x) != seq[x];
  CHECK(differs);
}

TEST_CASE("out-of-domain input throws") {
  KWiseHash h(7, 2, 100, 10);
  CHECK_THROWS_AS(h(100), std::out_of_range);
}

TEST_CASE("pairwise collision rate over seeds is near 1/range") {
  const uint64_t domain = 16, range = 16;
  int collisions = 0;
  const int seeds = 10000;
  for (int s = 0; s < seeds; ++s) {
    KWiseHash h(derive_seed(99, s), 2, domain, range);
    if (h(3) == h(11)) ++collisions;
  }
  double rate = static_cast<double>(collisions) / seeds;
  CHECK(std::fabs(rate - 1.0 / 16) < 0.01);
}

TEST_CASE("pairwise uniformity chi-square over a tiny domain") {
  // For each of 10^3 seeds evaluate a fixed pair; the 16x16 cell counts
  // should be uniform. Chi-square with 255 dof at significance 0.01 ~ 310.
  const int seeds = 1000;
  std::map<std::pair<uint64_t, uint64_t>, int> cells;
  for (int s = 0; s < seeds; ++s) {
    KWiseHash h(derive_seed(123, s), 2, 64, 16);
    cells[{h(5), h(21)}]++;
  }
  double expected = static_cast<double>(seeds) / 256.0;
  double chi2 = 0.0;
  for (uint64_t a = 0; a < 16; ++a)
    for (uint64_t b = 0; b < 16; ++b) {
      auto it = cells.find({a, b});
      double obs = it == cells.end() ? 0.0 : it->second;
      chi2 += (obs - expected) * (obs - expected) / expected;
    }
  CHECK(chi2 < 310.0);
}

TEST_CASE("sign family is deterministic and near balanced") {
  SignFamily s(2024, 1 << 16);
  SignFamily t(2024, 1 << 16);
  long sum = 0;
  for (uint64_t x = 0; x < (1u << 16); ++x) {
    int v = s(x);
    CHECK((v == 1 || v == -1));
    CHECK(v == t(x));
    sum += v;
  }
  CHECK(std::fabs(static_cast<double>(sum) / (1 << 16)) < 0.02);
}

TEST_CASE("four-tuple sign products average near zero") {
  uint64_t seed_state = 7;
  double acc = 0.0;
  const int samples = 10000;
  for (int i = 0; i < samples; ++i) {
    SignFamily s(derive_seed(500, i), 1 << 12);
    uint64_t a = splitmix64(seed_state) % (1 << 12);
    uint64_t b, c, d;
    do { b = splitmix64(seed_state) % (1 << 12); } while (b == a);
    do { c = splitmix64(seed_state) % (1 << 12); } while (c == a || c == b);
    do { d = splitmix64(seed_state) % (1 << 12); } while (d == a || d == b || d == c);
    acc += s(a) * s(b) * s(c) * s(d);
  }
  CHECK(std::fabs(acc / samples) < 0.05);
}

TEST_CASE("sample_prime returns a prime in range") {
  uint64_t p = sample_prime(100, 1000000, 77);
  CHECK(p >= 100);
  CHECK(p <= 1000000);
  CHECK(is_prime_u64(p));
}

TEST_CASE("empty prime interval errors") {
  CHECK_THROWS_AS(sample_prime(14, 16, 1), std::runtime_error);
}

TEST_CASE("prime sampling is near uniform over [100, 200]") {
  // 21 primes in [100, 200]; each should get about 10^4/21 hits.
  std::map<uint64_t, int> hits;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) hits[sample_prime(100, 200, derive_seed(3, i))]++;
  CHECK(hits.size() == 21);
  double expect = draws / 21.0;
  double sigma = std::sqrt(expect * (1.0 - 1.0 / 21));
  for (const auto& [p, c] : hits) {
    CHECK(is_prime_u64(p));
    CHECK(std::fabs(c - expect) < 3.5 * sigma);
  }
}

TEST_CASE("lsb matches a naive loop") {
  CHECK(lsb(12) == 2);
  CHECK(lsb(1) == 0);
  CHECK(lsb(0) == 64);
  uint64_t s = 99;
  for (int i = 0; i < 1000; ++i) {
    uint64_t v = splitmix64(s);
    if (v == 0) continue;
    int naive = 0;
    while (((v >> naive) & 1) == 0) ++naive;
    CHECK(lsb(v) == naive);
  }
}

TEST_CASE("bucket hash independence grows slowly in 1/eps") {
  CHECK(bucket_hash_independence(0.5) >= 2);
  CHECK(bucket_hash_independence(0.1) >= 2);
  CHECK(bucket_hash_independence(0.01) >= bucket_hash_independence(0.1));
  CHECK(bucket_hash_independence(1e-6) < 32);
}

TEST_SUITE_END();
