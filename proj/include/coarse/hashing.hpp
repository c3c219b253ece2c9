#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "coarse/seeds.hpp"

// Seeded limited-independence hash families over the Mersenne prime field
// 2^61 - 1, random sign families, and prime sampling. All evaluations are
// pure functions of (seed, parameters, input) and safe to call concurrently.

namespace coarse {

inline constexpr uint64_t kFieldPrime = (1ull << 61) - 1;

inline uint64_t mulmod61(uint64_t a, uint64_t b) {
  unsigned __int128 z = static_cast<unsigned __int128>(a) * b;
  uint64_t lo = static_cast<uint64_t>(z & kFieldPrime);
  uint64_t hi = static_cast<uint64_t>(z >> 61);
  uint64_t r = lo + hi;
  if (r >= kFieldPrime) r -= kFieldPrime;
  return r;
}

// Degree-(k-1) polynomial over GF(2^61 - 1), reduced into [0, range_size)
// by a final modulo. The modulo reduction gives up at most 2^-32 uniformity
// for the ranges used here.
class KWiseHash {
 public:
  KWiseHash() = default;
  KWiseHash(uint64_t seed, int k, uint64_t domain_size, uint64_t range_size);

  uint64_t operator()(uint64_t x) const {
    if (x >= domain_) throw std::out_of_range("KWiseHash: input outside domain");
    uint64_t acc = 0;
    for (size_t i = coeff_.size(); i-- > 0;) {
      acc = mulmod61(acc, x) + coeff_[i];
      if (acc >= kFieldPrime) acc -= kFieldPrime;
    }
    return acc % range_;
  }

  // Raw field value before range reduction; used where callers split the
  // 61 random bits themselves.
  uint64_t field_value(uint64_t x) const {
    if (x >= domain_) throw std::out_of_range("KWiseHash: input outside domain");
    uint64_t acc = 0;
    for (size_t i = coeff_.size(); i-- > 0;) {
      acc = mulmod61(acc, x) + coeff_[i];
      if (acc >= kFieldPrime) acc -= kFieldPrime;
    }
    return acc;
  }

  int k() const { return k_; }
  uint64_t domain_size() const { return domain_; }
  uint64_t range_size() const { return range_; }
  uint64_t seed() const { return seed_; }
  // Bits a faithful implementation would store for this function.
  uint64_t seed_bits() const { return 64; }

 private:
  uint64_t seed_ = 0;
  int k_ = 0;
  uint64_t domain_ = 0;
  uint64_t range_ = 0;
  std::vector<uint64_t> coeff_;
};

// 4-wise independent signs in {-1, +1}.
class SignFamily {
 public:
  SignFamily() = default;
  SignFamily(uint64_t seed, uint64_t domain_size)
      : hash_(seed, 4, domain_size, kFieldPrime) {}

  int operator()(uint64_t x) const { return (hash_.field_value(x) & 1) ? 1 : -1; }

  uint64_t domain_size() const { return hash_.domain_size(); }
  uint64_t seed_bits() const { return 64; }

 private:
  KWiseHash hash_;
};

bool is_prime_u64(uint64_t n);

// Uniform prime in [lo, hi] via rejection sampling; throws if the interval
// contains no prime.
uint64_t sample_prime(uint64_t lo, uint64_t hi, uint64_t seed);

// Index of the least significant set bit. lsb(0) is defined as 64, which
// callers treat as "deepest subsampling level".
inline int lsb(uint64_t v) {
  if (v == 0) return 64;
  return __builtin_ctzll(v);
}

// Independence degree used for the balls-into-bins bucket hash:
// max(2, ceil(2 ln(1/eps) / ln(ln(1/eps) + e))). Exposed so configs can
// override it.
int bucket_hash_independence(double eps);

}  // namespace coarse
