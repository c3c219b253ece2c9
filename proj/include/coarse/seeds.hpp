#pragma once

#include <cstdint>

// Deterministic seed plumbing. Every randomized object in the library is a
// pure function of a 64-bit seed; a master seed fans out to sub-seeds through
// a counter-based splitmix64 derivation so that experiments are replayable
// from a single CLI value.

namespace coarse {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Sub-seed `counter` of `master`. Stateless, so callers can derive the same
// seed independently.
inline uint64_t derive_seed(uint64_t master, uint64_t counter) {
  uint64_t s = master ^ (0x9e3779b97f4a7c15ull * (counter + 1));
  splitmix64(s);
  return splitmix64(s);
}

// Hands out derive_seed(master, 0), derive_seed(master, 1), ...
struct SeedSequence {
  uint64_t master;
  uint64_t counter = 0;
  explicit SeedSequence(uint64_t m) : master(m) {}
  uint64_t next() { return derive_seed(master, counter++); }
};

}  // namespace coarse
