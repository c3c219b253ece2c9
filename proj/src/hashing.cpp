#include "coarse/hashing.hpp"

#include <cmath>

namespace coarse {

KWiseHash::KWiseHash(uint64_t seed, int k, uint64_t domain_size, uint64_t range_size)
    : seed_(seed), k_(k), domain_(domain_size), range_(range_size) {
  if (k < 2) throw std::invalid_argument("KWiseHash: independence degree must be >= 2");
  if (domain_size == 0 || range_size == 0)
    throw std::invalid_argument("KWiseHash: empty domain or range");
  if (domain_size > kFieldPrime || range_size > kFieldPrime)
    throw std::invalid_argument("KWiseHash: domain/range exceed field size");
  coeff_.resize(k);
  uint64_t s = seed;
  for (int i = 0; i < k; ++i) {
    // Rejection keeps coefficients uniform over the field.
    uint64_t c;
    do {
      c = splitmix64(s) & ((1ull << 62) - 1);
    } while (c >= kFieldPrime);
    coeff_[i] = c;
  }
}

namespace {

uint64_t mulmod_u64(uint64_t a, uint64_t b, uint64_t m) {
  return static_cast<uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

uint64_t powmod_u64(uint64_t a, uint64_t e, uint64_t m) {
  uint64_t r = 1;
  a %= m;
  while (e) {
    if (e & 1) r = mulmod_u64(r, a, m);
    a = mulmod_u64(a, a, m);
    e >>= 1;
  }
  return r;
}

}  // namespace

bool is_prime_u64(uint64_t n) {
  if (n < 2) return false;
  for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // This witness set is deterministic for all n < 2^64.
  for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    uint64_t x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < s; ++i) {
      x = mulmod_u64(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

uint64_t sample_prime(uint64_t lo, uint64_t hi, uint64_t seed) {
  if (hi < lo || lo < 2) throw std::invalid_argument("sample_prime: bad interval");
  uint64_t width = hi - lo + 1;
  // Small intervals are scanned so emptiness is decidable; for wide
  // intervals a prime exists and rejection terminates quickly.
  if (width <= (1u << 20)) {
    std::vector<uint64_t> primes;
    for (uint64_t v = lo; v <= hi; ++v)
      if (is_prime_u64(v)) primes.push_back(v);
    if (primes.empty()) throw std::runtime_error("sample_prime: interval contains no prime");
    uint64_t s = seed;
    uint64_t idx;
    uint64_t bound = primes.size();
    uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    do {
      idx = splitmix64(s);
    } while (idx >= limit);
    return primes[idx % bound];
  }
  uint64_t s = seed;
  uint64_t limit = UINT64_MAX - UINT64_MAX % width;
  for (int iter = 0; iter < 1 << 16; ++iter) {
    uint64_t r = splitmix64(s);
    if (r >= limit) continue;
    uint64_t v = lo + r % width;
    if (is_prime_u64(v)) return v;
  }
  throw std::runtime_error("sample_prime: rejection sampling failed");
}

int bucket_hash_independence(double eps) {
  if (eps <= 0 || eps >= 1) return 2;
  double li = std::log(1.0 / eps);
  double denom = std::log(li + std::exp(1.0));
  int k = static_cast<int>(std::ceil(2.0 * li / denom));
  return std::max(2, k);
}

}  // namespace coarse
