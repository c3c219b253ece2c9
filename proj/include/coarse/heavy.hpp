#pragma once

#include <cstdint>
#include <vector>

#include "coarse/hashing.hpp"
#include "coarse/space.hpp"
#include "coarse/stream.hpp"

// CountSketch point queries and extraction of relaxed heavy sets: the
// returned set contains every i with x_i^2 >= ||x||^2 / k and (on the
// success event) nothing below ||x||^2 / (alpha k); indices between the two
// thresholds may land on either side.

namespace coarse {

class CountSketchTable {
 public:
  // rows defaults to ceil(4 log2 n), width to 8k.
  CountSketchTable(uint64_t n, uint64_t k, int64_t M, uint64_t seed,
                   uint64_t rows_override = 0, uint64_t width_override = 0);

  void update(const Update& u);
  void update(uint64_t index, int64_t delta) { update(Update{index, delta}); }

  // Median over rows of sign * counter.
  double point_query(uint64_t index) const;

  void merge(const CountSketchTable& other);
  SpaceReport space() const;

  uint64_t rows() const { return rows_; }
  uint64_t width() const { return width_; }
  uint64_t n() const { return n_; }
  bool all_zero() const;

 private:
  uint64_t n_;
  int64_t M_;
  uint64_t seed_;
  uint64_t rows_;
  uint64_t width_;
  std::vector<KWiseHash> hash_;
  std::vector<SignFamily> sign_;
  std::vector<int64_t> table_;
};

struct HeavyReport {
  std::vector<uint64_t> set;  // sorted
  uint64_t k = 0;
  double alpha = 1.0;
  double threshold = 0.0;     // squared point-query cutoff actually applied
  double f2_estimate = 0.0;
};

// Threshold at theta * F2 / k with theta = 1/sqrt(alpha), the geometric mean
// of the inclusion and exclusion levels.
HeavyReport extract_heavy(const CountSketchTable& table, uint64_t k, double alpha,
                          double f2_estimate);

}  // namespace coarse
