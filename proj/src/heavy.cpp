#include "coarse/heavy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coarse/seeds.hpp"

namespace coarse {

CountSketchTable::CountSketchTable(uint64_t n, uint64_t k, int64_t M, uint64_t seed,
                                   uint64_t rows_override, uint64_t width_override)
    : n_(n), M_(M), seed_(seed) {
  if (n < 2) throw std::invalid_argument("CountSketchTable: n must be >= 2");
  if (k < 1) throw std::invalid_argument("CountSketchTable: k must be >= 1");
  rows_ = rows_override
              ? rows_override
              : static_cast<uint64_t>(std::ceil(4.0 * std::log2(static_cast<double>(n))));
  rows_ = std::max<uint64_t>(rows_, 3);
  width_ = width_override ? width_override : 8 * k;
  width_ = std::max<uint64_t>(width_, 2);
  SeedSequence seq(seed);
  hash_.reserve(rows_);
  sign_.reserve(rows_);
  for (uint64_t r = 0; r < rows_; ++r) {
    hash_.emplace_back(seq.next(), 2, n_, width_);
    sign_.emplace_back(seq.next(), n_);
  }
  table_.assign(rows_ * width_, 0);
}

void CountSketchTable::update(const Update& u) {
  if (u.index >= n_) throw std::out_of_range("CountSketchTable: index outside [0, n)");
  for (uint64_t r = 0; r < rows_; ++r)
    table_[r * width_ + hash_[r](u.index)] += sign_[r](u.index) * u.delta;
}

double CountSketchTable::point_query(uint64_t index) const {
  if (index >= n_) throw std::out_of_range("CountSketchTable: index outside [0, n)");
  std::vector<double> est(rows_);
  for (uint64_t r = 0; r < rows_; ++r)
    est[r] = static_cast<double>(sign_[r](index) *
                                 table_[r * width_ + hash_[r](index)]);
  auto mid = est.begin() + est.size() / 2;
  std::nth_element(est.begin(), mid, est.end());
  if (est.size() % 2 == 1) return *mid;
  double hi = *mid;
  double lo = *std::max_element(est.begin(), mid);
  return 0.5 * (lo + hi);
}

void CountSketchTable::merge(const CountSketchTable& other) {
  if (n_ != other.n_ || rows_ != other.rows_ || width_ != other.width_ ||
      seed_ != other.seed_)
    throw std::invalid_argument("CountSketchTable::merge: parameter/seed mismatch");
  for (size_t i = 0; i < table_.size(); ++i) table_[i] += other.table_[i];
}

bool CountSketchTable::all_zero() const {
  for (int64_t v : table_)
    if (v != 0) return false;
  return true;
}

SpaceReport CountSketchTable::space() const {
  SpaceReport r;
  uint64_t max_abs = static_cast<uint64_t>(M_) * n_;
  r.counter_bits = table_.size() * bits_for_magnitude(max_abs);
  r.hash_seed_bits = 64;
  r.auxiliary_bits = 3 * 64;
  return r;
}

HeavyReport extract_heavy(const CountSketchTable& table, uint64_t k, double alpha,
                          double f2_estimate) {
  if (k < 1) throw std::invalid_argument("extract_heavy: k must be >= 1");
  if (!(alpha >= 1.0)) throw std::invalid_argument("extract_heavy: alpha must be >= 1");
  HeavyReport rep;
  rep.k = k;
  rep.alpha = alpha;
  rep.f2_estimate = f2_estimate;
  if (table.all_zero()) return rep;
  if (!(f2_estimate > 0.0))
    throw std::invalid_argument("extract_heavy: zero F2 estimate on a nonzero table");
  double theta = 1.0 / std::sqrt(alpha);
  rep.threshold = theta * f2_estimate / static_cast<double>(k);
  for (uint64_t i = 0; i < table.n(); ++i) {
    double q = table.point_query(i);
    if (q * q >= rep.threshold) rep.set.push_back(i);
  }
  return rep;
}

}  // namespace coarse
