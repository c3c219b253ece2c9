#pragma once

#include <cstdint>

namespace coarse {

// Exact bit tally for a finalized sketch. Counter bits come from the actual
// counter moduli or word sizes; seed bits are reported separately so
// random-tape storage can be excluded from space comparisons.
struct SpaceReport {
  uint64_t counter_bits = 0;
  uint64_t hash_seed_bits = 0;
  uint64_t auxiliary_bits = 0;
  uint64_t total_bits() const { return counter_bits + hash_seed_bits + auxiliary_bits; }
};

inline uint64_t bits_for_modulus(uint64_t p) {
  uint64_t b = 0;
  while ((1ull << b) < p && b < 63) ++b;
  return b == 0 ? 1 : b;
}

inline uint64_t bits_for_magnitude(uint64_t max_abs) {
  // Signed counter with |value| <= max_abs.
  uint64_t b = 1;
  while ((1ull << b) <= 2 * max_abs && b < 63) ++b;
  return b;
}

}  // namespace coarse
