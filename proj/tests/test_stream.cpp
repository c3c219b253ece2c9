#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "coarse/seeds.hpp"
#include "coarse/stream.hpp"

using namespace coarse;

TEST_SUITE_BEGIN("stream");

namespace {

TurnstileStream random_stream(uint64_t n, size_t len, int64_t mag, uint64_t seed) {
  std::mt19937_64 rng(seed);
  TurnstileStream s;
  s.n = n;
  s.M = mag * static_cast<int64_t>(len);
  for (size_t i = 0; i < len; ++i) {
    int64_t d = static_cast<int64_t>(rng() % (2 * mag + 1)) - mag;
    s.updates.push_back({rng() % n, d});
  }
  return s;
}

}  // namespace

TEST_CASE("accumulate adds deltas per index") {
  TurnstileStream s{2, 10, {{0, 3}, {0, -1}}};
  FrequencyVector x = accumulate(s);
  CHECK(x.entries == std::vector<int64_t>{2, 0});
}

TEST_CASE("accumulating the empty stream gives the zero vector") {
  TurnstileStream s{4, 1, {}};
  FrequencyVector x = accumulate(s);
  CHECK(x.entries == std::vector<int64_t>{0, 0, 0, 0});
}

TEST_CASE("accumulate rejects out-of-range indices") {
  TurnstileStream s{4, 1, {{4, 1}}};
  CHECK_THROWS_AS(accumulate(s), std::out_of_range);
}

TEST_CASE("accumulate agrees with an independent per-index sum") {
  TurnstileStream s = random_stream(128, 1000, 5, 11);
  FrequencyVector x = accumulate(s);
  // Oracle: bucket the deltas by index first, then add in index order.
  std::vector<int64_t> oracle(128, 0);
  for (uint64_t i = 0; i < 128; ++i)
    for (const Update& u : s.updates)
      if (u.index == i) oracle[i] += u.delta;
  CHECK(x.entries == oracle);
}

TEST_CASE("accumulate is order invariant") {
  TurnstileStream s = random_stream(64, 500, 3, 21);
  FrequencyVector x = accumulate(s);
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    std::shuffle(s.updates.begin(), s.updates.end(), rng);
    CHECK(accumulate(s).entries == x.entries);
  }
}

TEST_CASE("exact_moment basics") {
  FrequencyVector x{{3, 4}};
  CHECK(exact_moment(x, 2.0) == doctest::Approx(5.0));
  FrequencyVector y{{0, 1, 0, -2}};
  CHECK(exact_moment(y, 0.0) == 2.0);
}

TEST_CASE("exact_moment p=3 matches a direct cube-sum oracle") {
  std::mt19937_64 rng(17);
  FrequencyVector x;
  x.entries.resize(200);
  for (auto& v : x.entries) v = static_cast<int64_t>(rng() % 2001) - 1000;
  long double cubes = 0.0L;
  for (int64_t v : x.entries) {
    long double a = std::fabs(static_cast<long double>(v));
    cubes += a * a * a;
  }
  double oracle = static_cast<double>(std::pow(cubes, 1.0L / 3.0L));
  CHECK(exact_moment(x, 3.0) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("moments are monotone in 1/p with the dimension-factor sandwich") {
  std::mt19937_64 rng(4);
  FrequencyVector x;
  x.entries.resize(256);
  for (auto& v : x.entries) v = static_cast<int64_t>(rng() % 41) - 20;
  double n = 256;
  for (double q : {2.0, 2.5, 3.0}) {
    for (double p : {3.0, 4.0, 6.0}) {
      if (q > p) continue;
      double np = exact_moment(x, p);
      double nq = exact_moment(x, q);
      CHECK(np <= nq * (1 + 1e-12));
      CHECK(nq <= std::pow(n, 1.0 / q - 1.0 / p) * np * (1 + 1e-12));
    }
  }
}

TEST_CASE("exact_g_norm") {
  GEstimator g2{[](int64_t v) { return static_cast<double>(v) * v; }, 2.0};
  FrequencyVector x{{3, 4}};
  CHECK(exact_g_norm(x, g2) == doctest::Approx(25.0));
  FrequencyVector zero{{0, 0, 0}};
  CHECK(exact_g_norm(zero, g2) == 0.0);

  GEstimator g15{[](int64_t v) { return std::pow(std::fabs(static_cast<double>(v)), 1.5); },
                 1.5};
  std::mt19937_64 rng(9);
  FrequencyVector y;
  y.entries.resize(100);
  for (auto& v : y.entries) v = static_cast<int64_t>(rng() % 21) - 10;
  long double oracle = 0.0L;
  for (int64_t v : y.entries)
    oracle += std::pow(std::fabs(static_cast<long double>(v)), 1.5L);
  CHECK(exact_g_norm(y, g15) == doctest::Approx(static_cast<double>(oracle)).epsilon(1e-12));
  CHECK(check_g_estimator(g15, 1000, 3));
}

TEST_CASE("degenerate G is rejected by the invariant check") {
  GEstimator flat{[](int64_t v) { return v == 0 ? 0.0 : 1.0; }, 1.0};
  CHECK_FALSE(check_g_estimator(flat, 1000, 3));
}

TEST_CASE("exact_heavy_set") {
  CHECK(exact_heavy_set(FrequencyVector{{10, 1, 1}}, 2) == std::vector<uint64_t>{0});
  CHECK(exact_heavy_set(FrequencyVector{{1, 1, 1, 1}}, 4) ==
        std::vector<uint64_t>{0, 1, 2, 3});
  CHECK(exact_heavy_set(FrequencyVector{{0, 0}}, 4).empty());

  // Random sparse vector: compare against a plain full scan.
  std::mt19937_64 rng(31);
  FrequencyVector x;
  x.entries.assign(500, 0);
  for (int i = 0; i < 40; ++i) x.entries[rng() % 500] = static_cast<int64_t>(rng() % 200) - 100;
  unsigned __int128 f2 = 0;
  for (int64_t v : x.entries) f2 += static_cast<unsigned __int128>(static_cast<__int128>(v) * v);
  std::vector<uint64_t> oracle;
  for (uint64_t i = 0; i < 500; ++i) {
    unsigned __int128 lhs =
        static_cast<unsigned __int128>(static_cast<__int128>(x.entries[i]) * x.entries[i]) * 8;
    if (f2 > 0 && lhs >= f2) oracle.push_back(i);
  }
  CHECK(exact_heavy_set(x, 8) == oracle);
}

TEST_CASE("heavy set is downward consistent in k") {
  std::mt19937_64 rng(77);
  FrequencyVector x;
  x.entries.resize(64);
  for (auto& v : x.entries) v = static_cast<int64_t>(rng() % 9) - 4;
  auto prev = exact_heavy_set(x, 1);
  for (uint64_t k = 2; k <= 64; k *= 2) {
    auto cur = exact_heavy_set(x, k);
    for (uint64_t i : prev) CHECK(std::count(cur.begin(), cur.end(), i) == 1);
    prev = cur;
  }
}

TEST_CASE("exact_schatten on diagonal and identity") {
  MatrixStream d{2, 4, {{0, 0, 3}, {1, 1, 4}}};
  CHECK(exact_schatten(d, 2.0) == doctest::Approx(5.0));
  MatrixStream id{8, 1, {}};
  for (uint64_t i = 0; i < 8; ++i) id.updates.push_back({i, i, 1});
  CHECK(exact_schatten(id, 4.0) == doctest::Approx(std::pow(8.0, 0.25)));
}

TEST_CASE("exact_schatten matches the trace-power oracle for even p") {
  std::mt19937_64 rng(13);
  MatrixStream m{8, 10, {}};
  std::vector<std::vector<double>> a(8, std::vector<double>(8, 0.0));
  for (uint64_t i = 0; i < 8; ++i)
    for (uint64_t j = 0; j < 8; ++j) {
      int64_t v = static_cast<int64_t>(rng() % 11) - 5;
      if (v != 0) m.updates.push_back({i, j, v});
      a[i][j] = static_cast<double>(v);
    }
  // trace((A^T A)^3)^(1/6)
  std::vector<std::vector<double>> ata(8, std::vector<double>(8, 0.0));
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      for (int k = 0; k < 8; ++k) ata[i][j] += a[k][i] * a[k][j];
  auto matmul = [](const auto& x, const auto& y) {
    std::vector<std::vector<double>> z(8, std::vector<double>(8, 0.0));
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        for (int k = 0; k < 8; ++k) z[i][j] += x[i][k] * y[k][j];
    return z;
  };
  auto cube = matmul(matmul(ata, ata), ata);
  double trace = 0.0;
  for (int i = 0; i < 8; ++i) trace += cube[i][i];
  CHECK(exact_schatten(m, 6.0) ==
        doctest::Approx(std::pow(trace, 1.0 / 6.0)).epsilon(1e-8));
}

TEST_CASE("exact_cascaded basics and nested-sum oracle") {
  // Single nonzero row reduces to that row's l_q norm.
  MatrixStream one_row{4, 5, {{1, 0, 3}, {1, 2, 4}}};
  CHECK(exact_cascaded(one_row, 2.5, 2.0) == doctest::Approx(5.0));

  MatrixStream ones{6, 1, {}};
  for (uint64_t i = 0; i < 6; ++i)
    for (uint64_t j = 0; j < 6; ++j) ones.updates.push_back({i, j, 1});
  CHECK(exact_cascaded(ones, 2.0, 2.0) == doctest::Approx(6.0));

  std::mt19937_64 rng(5);
  MatrixStream m{6, 8, {}};
  std::vector<std::vector<int64_t>> a(6, std::vector<int64_t>(6, 0));
  for (uint64_t i = 0; i < 6; ++i)
    for (uint64_t j = 0; j < 6; ++j) {
      int64_t v = static_cast<int64_t>(rng() % 17) - 8;
      a[i][j] = v;
      if (v) m.updates.push_back({i, j, v});
    }
  double p = 3.0, q = 4.0;
  long double outer = 0.0L;
  for (int i = 0; i < 6; ++i) {
    long double inner = 0.0L;
    for (int j = 0; j < 6; ++j)
      inner += std::pow(std::fabs(static_cast<long double>(a[i][j])), (long double)q);
    outer += std::pow(std::pow(inner, 1.0L / q), (long double)p);
  }
  CHECK(exact_cascaded(m, p, q) ==
        doctest::Approx(static_cast<double>(std::pow(outer, 1.0L / p))).epsilon(1e-10));
}

TEST_CASE("bounded deletion checks") {
  TurnstileStream ins{4, 10, {{0, 1}, {0, 1}, {1, 3}}};
  CHECK(check_bounded_deletion(ins, 1.0));
  CHECK(check_bounded_deletion(ins, 100.0));

  TurnstileStream cancel{2, 1, {{0, 1}, {0, -1}}};
  CHECK_FALSE(check_bounded_deletion(cancel, 1000.0));
  TurnstileStream dip{2, 2, {{0, 2}, {0, -1}}};
  CHECK(check_bounded_deletion(dip, 2.0));
  CHECK_FALSE(check_bounded_deletion(dip, 1.2));
}

TEST_CASE("stream text round trip and comments") {
  TurnstileStream s{5, 7, {{0, 3}, {4, -2}}};
  std::stringstream ss;
  write_stream(ss, s);
  ss << "# trailing comment\n";
  TurnstileStream r = read_turnstile_stream(ss);
  CHECK(r.n == 5);
  CHECK(r.M == 7);
  REQUIRE(r.updates.size() == 2);
  CHECK(r.updates[1].index == 4);
  CHECK(r.updates[1].delta == -2);

  MatrixStream m{3, 2, {{0, 1, 2}, {2, 2, -1}}};
  std::stringstream ms;
  write_stream(ms, m);
  MatrixStream rm = read_matrix_stream(ms);
  CHECK(rm.n == 3);
  REQUIRE(rm.updates.size() == 2);
  CHECK(rm.updates[0].col == 1);

  std::stringstream wrong;
  write_stream(wrong, m);
  CHECK_THROWS(read_turnstile_stream(wrong));
}

TEST_CASE("check_stream_valid catches magnitude violations") {
  TurnstileStream ok{2, 2, {{0, 2}, {0, -2}}};
  CHECK(check_stream_valid(ok));
  TurnstileStream bad{2, 1, {{0, 2}}};
  CHECK_FALSE(check_stream_valid(bad));
}

TEST_SUITE_END();
