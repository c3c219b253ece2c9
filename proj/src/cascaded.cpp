#include "coarse/cascaded.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coarse/seeds.hpp"

namespace coarse {

namespace {
constexpr double kWeightScaleConstant = 20.0;  // k = ceil(20 / (rho eps^2))
constexpr double kRecoveryMargin = 2.0;        // recovery threshold in noise units
}  // namespace

PrecisionWeights draw_weights_k(uint64_t n, uint64_t k, uint64_t seed) {
  if (n < 1 || k < 1) throw std::invalid_argument("draw_weights_k: need n, k >= 1");
  PrecisionWeights pw;
  pw.n = n;
  pw.k = k;
  pw.w.resize(n);
  KWiseHash h(seed, 2, std::max<uint64_t>(2, n), 1ull << 53);
  double cap = std::pow(static_cast<double>(n), 3.0) * static_cast<double>(k);
  for (uint64_t i = 0; i < n; ++i) {
    double u = (static_cast<double>(h(i)) + 0.5) / static_cast<double>(1ull << 53);
    pw.w[i] = std::min(cap, std::max(1.0, static_cast<double>(k) / u));
  }
  return pw;
}

PrecisionWeights draw_weights(uint64_t n, double rho, double eps, uint64_t seed) {
  if (!(rho >= 1.0 / static_cast<double>(n)) || rho > 1.0)
    throw std::invalid_argument("draw_weights: rho outside [1/n, 1]");
  if (!(eps >= 1.0 / static_cast<double>(n)) || eps > 1.0 / 3.0)
    throw std::invalid_argument("draw_weights: eps outside [1/n, 1/3]");
  uint64_t k = static_cast<uint64_t>(std::ceil(kWeightScaleConstant / (rho * eps * eps)));
  PrecisionWeights pw = draw_weights_k(n, k, seed);
  pw.rho = rho;
  pw.eps = eps;
  return pw;
}

ApproximatorPair reconstruct(const PrecisionWeights& weights,
                             std::span<const double> approximations, double f,
                             double rho, double eps) {
  if (approximations.size() != weights.w.size())
    throw std::invalid_argument("reconstruct: approximation/weight size mismatch");
  const double k = static_cast<double>(weights.k);
  const double tau = 2.0 / eps;
  double direct = 0.0;
  uint64_t count = 0;
  for (size_t i = 0; i < approximations.size(); ++i) {
    double a = approximations[i];
    if (a >= tau / k) {
      direct += a;
    } else if (weights.w[i] * a > tau) {
      ++count;
    }
  }
  ApproximatorPair out;
  out.value = std::max(0.0, direct + (tau / k) * static_cast<double>(count));
  out.rho = rho;
  out.f = f * std::exp(eps);
  return out;
}

uint64_t FqPrecisionSketch::default_width(uint64_t n, double q) {
  double w = 4096.0 * std::pow(static_cast<double>(n), 1.0 - 2.0 / q);
  return std::max<uint64_t>(64, static_cast<uint64_t>(std::ceil(w)));
}

uint64_t FqPrecisionSketch::tuned_width(uint64_t n, double q) {
  // Keeps the inverse-propensity floor tau/k under F_q/12 for every input:
  // W^(q/2) >= 12 (2 margin)^q (2 sqrt(F2/W))-terms, worked through Holder.
  double c = 2.0 * std::pow(12.0, 2.0 / q) *
             std::pow(2.0 * kRecoveryMargin, 2.0) * (q / (q - 2.0));
  double w = c * std::pow(static_cast<double>(n), 1.0 - 2.0 / q);
  return std::max<uint64_t>(64, static_cast<uint64_t>(std::ceil(w)));
}

FqPrecisionSketch::FqPrecisionSketch(uint64_t n, double q, int64_t M, uint64_t seed,
                                     double f_target, uint64_t width_override)
    : n_(n), q_(q), M_(M), seed_(seed), f_target_(f_target) {
  if (!(q > 2.0)) throw std::invalid_argument("FqPrecisionSketch: q must be > 2");
  if (n < 2) throw std::invalid_argument("FqPrecisionSketch: n must be >= 2");
  width_ = width_override ? width_override : default_width(n, q);
  if (width_ > (1ull << 24)) throw std::invalid_argument("FqPrecisionSketch: width too large");
  cs_rows_ = std::clamp<uint64_t>(static_cast<uint64_t>(std::ceil(std::log2(n))), 5, 64);
  SeedSequence seq(seed);
  weights_ = draw_weights_k(n, 64, seq.next());
  cs_hash_.reserve(cs_rows_);
  cs_sign_.reserve(cs_rows_);
  for (uint64_t r = 0; r < cs_rows_; ++r) {
    cs_hash_.emplace_back(seq.next(), 2, n_, width_);
    cs_sign_.emplace_back(seq.next(), n_);
  }
  cs_table_.assign(cs_rows_ * width_, 0.0);
  f2_group_size_ = 8;
  f2_groups_ = 7;
  f2_signs_.reserve(f2_group_size_ * f2_groups_);
  for (uint64_t r = 0; r < f2_group_size_ * f2_groups_; ++r)
    f2_signs_.emplace_back(seq.next(), n_);
  f2_y_.assign(f2_group_size_ * f2_groups_, 0.0);
}

void FqPrecisionSketch::update_real(uint64_t index, double delta) {
  if (index >= n_) throw std::out_of_range("FqPrecisionSketch: index outside [0, n)");
  double scaled = delta * std::pow(weights_.w[index], 1.0 / q_);
  for (uint64_t r = 0; r < cs_rows_; ++r)
    cs_table_[r * width_ + cs_hash_[r](index)] += scaled * cs_sign_[r](index);
  for (size_t r = 0; r < f2_y_.size(); ++r) f2_y_[r] += scaled * f2_signs_[r](index);
}

double FqPrecisionSketch::point_query(uint64_t index) const {
  double vals[64] = {0.0};  // cs_rows_ is clamped to 64 at construction
  for (uint64_t r = 0; r < cs_rows_; ++r)
    vals[r] = cs_sign_[r](index) * cs_table_[r * width_ + cs_hash_[r](index)];
  double* mid = vals + cs_rows_ / 2;
  std::nth_element(vals, mid, vals + cs_rows_);
  return *mid;
}

double FqPrecisionSketch::estimate() const {
  // F_2 of the scaled vector sets the recovery noise floor.
  std::vector<double> means(f2_groups_);
  for (int g = 0; g < f2_groups_; ++g) {
    double acc = 0.0;
    for (uint64_t i = 0; i < f2_group_size_; ++i) {
      double v = f2_y_[g * f2_group_size_ + i];
      acc += v * v;
    }
    means[g] = acc / static_cast<double>(f2_group_size_);
  }
  auto mid = means.begin() + means.size() / 2;
  std::nth_element(means.begin(), mid, means.end());
  double f2y = *mid;
  if (!(f2y > 0.0)) return 0.0;

  double eta = 2.0 * std::sqrt(f2y / static_cast<double>(width_));
  double tau = std::pow(kRecoveryMargin * eta, q_);
  double k = static_cast<double>(weights_.k);
  double floor_term = tau / k;
  double acc = 0.0;
  for (uint64_t i = 0; i < n_; ++i) {
    double y = std::fabs(point_query(i));
    double yq = std::pow(y, q_);
    if (yq > tau) acc += std::max(yq / weights_.w[i], floor_term);
  }
  return acc;
}

void FqPrecisionSketch::merge(const FqPrecisionSketch& other) {
  if (n_ != other.n_ || q_ != other.q_ || seed_ != other.seed_ || width_ != other.width_)
    throw std::invalid_argument("FqPrecisionSketch::merge: parameter/seed mismatch");
  for (size_t i = 0; i < cs_table_.size(); ++i) cs_table_[i] += other.cs_table_[i];
  for (size_t i = 0; i < f2_y_.size(); ++i) f2_y_[i] += other.f2_y_[i];
}

SpaceReport FqPrecisionSketch::space() const {
  SpaceReport r;
  r.counter_bits = (cs_table_.size() + f2_y_.size()) * 64;
  r.hash_seed_bits = 64;
  r.auxiliary_bits = 4 * 64;
  return r;
}

CascadedSketch::CascadedSketch(uint64_t n_rows, uint64_t n_cols, double p, double q,
                               double alpha, int64_t M, uint64_t seed)
    : n_rows_(n_rows), n_cols_(n_cols), p_(p), q_(q), alpha_(alpha), M_(M), seed_(seed) {
  if (!(p >= 1.0)) throw std::invalid_argument("CascadedSketch: p must be >= 1");
  if (!(q > 2.0)) throw std::invalid_argument("CascadedSketch: q must be > 2");
  if (!(alpha >= 8.0)) throw std::invalid_argument("CascadedSketch: alpha must be >= 8");
  SeedSequence seq(seed);
  double budget = std::pow(static_cast<double>(n_rows), std::max(0.0, 1.0 - 2.0 / p)) *
                  std::log2(static_cast<double>(n_rows) + 1.0);
  n_buckets_ = std::max<uint64_t>(4 * n_rows, static_cast<uint64_t>(std::ceil(4.0 * budget)));
  side_margin_ = std::min(2.83, std::pow(alpha, p / 2.0));
  row_w_ = draw_weights_k(n_rows, 64, seq.next());
  row_hash_ = KWiseHash(seq.next(), 2, n_rows_, n_buckets_);
  row_sign_ = SignFamily(seq.next(), n_rows_);
  uint64_t inner_width = FqPrecisionSketch::tuned_width(n_cols_, q);
  bucket_.reserve(n_buckets_);
  for (uint64_t b = 0; b < n_buckets_; ++b)
    bucket_.emplace_back(n_cols_, q, M, seq.next(), alpha / 2.0, inner_width);
}

void CascadedSketch::update(uint64_t row, uint64_t col, int64_t delta) {
  if (row >= n_rows_ || col >= n_cols_)
    throw std::out_of_range("CascadedSketch: entry outside matrix");
  double scaled = static_cast<double>(delta) * row_sign_(row) *
                  std::pow(row_w_.w[row], 1.0 / p_);
  bucket_[row_hash_(row)].update_real(col, scaled);
}

double CascadedSketch::estimate() const {
  // Bucket values approximate max_{rows in bucket} w_i * ||X_i||_q^p.
  std::vector<double> r_hat(n_buckets_, 0.0);
  for (uint64_t b = 0; b < n_buckets_; ++b) {
    double fq = bucket_[b].estimate();
    if (fq > 0.0) r_hat[b] = std::pow(fq, p_ / q_);
  }
  std::vector<double> sorted = r_hat;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  const double k = static_cast<double>(row_w_.k);
  size_t s = std::min<size_t>(5, sorted.size());
  double scale0 = std::max(sorted[0], static_cast<double>(s) * sorted[s - 1]) / k;
  if (!(scale0 > 0.0)) return 0.0;

  // Precision-sampling reconstruction over rows against their bucket values.
  double tau = k * scale0 / 8.0;
  double floor_term = tau / k;
  double mid = 0.0;
  for (uint64_t i = 0; i < n_rows_; ++i) {
    double rb = r_hat[row_hash_(i)];
    if (rb <= 0.0) continue;
    double a_hat = rb / row_w_.w[i];
    if (a_hat >= floor_term)
      mid += a_hat;
    else if (rb > tau)
      mid += floor_term;
  }
  if (!(mid > 0.0)) return 0.0;
  return std::pow(mid * side_margin_, 1.0 / p_);
}

SpaceReport CascadedSketch::space() const {
  SpaceReport r;
  for (const auto& b : bucket_) {
    SpaceReport s = b.space();
    r.counter_bits += s.counter_bits;
    r.auxiliary_bits += s.auxiliary_bits;
  }
  r.hash_seed_bits = 64;
  r.auxiliary_bits += 4 * 64;
  return r;
}

double cascaded_estimate(const MatrixStream& stream, double p, double q, double alpha,
                         uint64_t seed, SpaceReport* space_out) {
  CascadedSketch sk(stream.n, stream.n, p, q, alpha, std::max<int64_t>(1, stream.M), seed);
  for (const MatrixEntryUpdate& u : stream.updates) sk.update(u);
  if (space_out) *space_out = sk.space();
  return sk.estimate();
}

}  // namespace coarse
