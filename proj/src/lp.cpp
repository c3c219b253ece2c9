#include "coarse/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "coarse/seeds.hpp"

namespace coarse {

double cms_p_stable(double p, double theta, double t_uniform) {
  if (!(p > 0.0) || !(p < 2.0))
    throw std::invalid_argument("cms_p_stable: p must lie in (0, 2)");
  if (!(t_uniform > 0.0) || !(t_uniform < 1.0) ||
      !(std::fabs(theta) < std::numbers::pi / 2))
    throw std::invalid_argument("cms_p_stable: singular (theta, t) draw, resample");
  double c = std::cos(theta);
  double base = std::cos(theta * (1.0 - p)) / std::log(1.0 / t_uniform);
  return std::sin(p * theta) / std::pow(c, 1.0 / p) *
         std::pow(base, (1.0 - p) / p);
}

namespace {

std::string default_median_path() {
  if (const char* env = std::getenv("COARSE_DATA_DIR"))
    return std::string(env) + "/pstable_medians.txt";
  return std::string(COARSE_SOURCE_DIR) + "/data/pstable_medians.txt";
}

}  // namespace

const PStableMedianTable& PStableMedianTable::shared() {
  static PStableMedianTable table = PStableMedianTable::load(default_median_path());
  return table;
}

PStableMedianTable PStableMedianTable::load(const std::string& path) {
  std::ifstream f(path);
  if (!f)
    throw std::runtime_error(
        "PStableMedianTable: cannot open " + path +
        " (regenerate with `coarse-sketch median-table`)");
  PStableMedianTable t;
  std::string line;
  while (std::getline(f, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double p, m;
    if (ls >> p >> m) {
      t.grid_p_.push_back(p);
      t.median_.push_back(m);
    }
  }
  if (t.grid_p_.empty()) throw std::runtime_error("PStableMedianTable: empty table");
  return t;
}

double PStableMedianTable::median_abs(double p) const {
  size_t best = 0;
  double best_d = std::fabs(grid_p_[0] - p);
  for (size_t i = 1; i < grid_p_.size(); ++i) {
    double d = std::fabs(grid_p_[i] - p);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return median_[best];
}

void PStableMedianTable::generate(std::ostream& out, uint64_t draws_per_point,
                                  double grid_step, uint64_t seed, int threads) {
  std::vector<double> ps;
  for (double p = grid_step; p < 2.0 - grid_step / 2; p += grid_step)
    ps.push_back(p);
  std::vector<double> med(ps.size(), 0.0);
  std::mutex next_mu;
  size_t next = 0;
  auto worker = [&]() {
    std::vector<double> buf;
    for (;;) {
      size_t idx;
      {
        std::lock_guard<std::mutex> lock(next_mu);
        if (next >= ps.size()) return;
        idx = next++;
      }
      double p = ps[idx];
      std::mt19937_64 rng(derive_seed(seed, idx));
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      buf.clear();
      buf.reserve(draws_per_point);
      while (buf.size() < draws_per_point) {
        double theta = (uni(rng) - 0.5) * std::numbers::pi;
        double t = uni(rng);
        if (t <= 0.0 || t >= 1.0 || std::fabs(theta) >= std::numbers::pi / 2) continue;
        buf.push_back(std::fabs(cms_p_stable(p, theta, t)));
      }
      auto mid = buf.begin() + buf.size() / 2;
      std::nth_element(buf.begin(), mid, buf.end());
      med[idx] = *mid;
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < std::max(1, threads); ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  out << "# median of |D_p| on a " << grid_step << " grid; seed " << seed
      << "; draws " << draws_per_point << " per point\n";
  char buf[64];
  for (size_t i = 0; i < ps.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.2f %.9g\n", ps[i], med[i]);
    out << buf;
  }
}

PStableSketch::PStableSketch(uint64_t n, double p, double eps, int64_t M, uint64_t seed,
                             uint64_t rows_override, double grid_override,
                             double clamp_override)
    : n_(n), p_(p), eps_(eps), M_(M), seed_(seed) {
  if (!(p > 0.0) || !(p < 2.0))
    throw std::invalid_argument("PStableSketch: p must lie in (0, 2)");
  if (!(eps > 0.0) || eps >= 1.0)
    throw std::invalid_argument("PStableSketch: eps must lie in (0, 1)");
  rows_ = rows_override ? rows_override
                        : static_cast<uint64_t>(std::ceil(36.0 / (eps * eps)));
  // Within-row independence degree eps^-p, capped at 32: evaluation cost is
  // linear in the degree and the cap holds every eps used here empirically.
  k_ = std::min(32, std::max(2, static_cast<int>(std::ceil(std::pow(eps, -p)))));
  grid_ = grid_override > 0.0
              ? grid_override
              : eps / (static_cast<double>(n) * static_cast<double>(M));
  // The p-stable tail has exponent p, so the truncation point must grow as
  // (nM/eps)^(1/p) for the clipped mass to stay negligible when p < 1.
  clamp_ = clamp_override > 0.0
               ? clamp_override
               : std::min(1e30, std::pow(1.0 / grid_, std::max(1.0, 1.0 / p)));
  row_hash_.reserve(rows_);
  SeedSequence seq(seed);
  for (uint64_t r = 0; r < rows_; ++r)
    row_hash_.emplace_back(seq.next(), k_, n_, kFieldPrime);
  y_.assign(rows_, 0.0);
}

double PStableSketch::entry(uint64_t row, uint64_t col) const {
  // 61 field bits split into a 30-bit angle index and a 30-bit tail index;
  // the +0.5 offsets keep both coordinates strictly inside the open box.
  uint64_t fv = row_hash_[row].field_value(col);
  double ftheta = (static_cast<double>(fv & ((1u << 30) - 1)) + 0.5) / (1u << 30);
  double theta = (ftheta - 0.5) * std::numbers::pi;
  double x;
  if (p_ == 1.0) {
    x = std::tan(theta);  // the transform reduces to the Cauchy draw
  } else {
    double ft = (static_cast<double>((fv >> 30) & ((1u << 30) - 1)) + 0.5) / (1u << 30);
    x = cms_p_stable(p_, theta, ft);
  }
  x = grid_ * std::nearbyint(x / grid_);
  return std::clamp(x, -clamp_, clamp_);
}

void PStableSketch::update(const Update& u) {
  if (u.index >= n_) throw std::out_of_range("PStableSketch: index outside [0, n)");
  double d = static_cast<double>(u.delta);
  for (uint64_t r = 0; r < rows_; ++r) y_[r] += d * entry(r, u.index);
}

double PStableSketch::estimate() const {
  bool all_zero = true;
  for (double v : y_)
    if (v != 0.0) {
      all_zero = false;
      break;
    }
  if (all_zero) return 0.0;
  std::vector<double> abs(y_.size());
  for (size_t i = 0; i < y_.size(); ++i) abs[i] = std::fabs(y_[i]);
  auto mid = abs.begin() + abs.size() / 2;
  std::nth_element(abs.begin(), mid, abs.end());
  return *mid / PStableMedianTable::shared().median_abs(p_);
}

void PStableSketch::merge(const PStableSketch& other) {
  if (n_ != other.n_ || p_ != other.p_ || rows_ != other.rows_ || seed_ != other.seed_ ||
      grid_ != other.grid_)
    throw std::invalid_argument("PStableSketch::merge: parameter/seed mismatch");
  for (size_t i = 0; i < y_.size(); ++i) y_[i] += other.y_[i];
}

SpaceReport PStableSketch::space() const {
  SpaceReport r;
  r.counter_bits = rows_ * 64;  // real-valued cells at the declared grid
  r.hash_seed_bits = 64;        // master seed; rows derive from it
  r.auxiliary_bits = 4 * 64;
  return r;
}

AmsF2Sketch::AmsF2Sketch(uint64_t n, double eps, int64_t M, uint64_t seed)
    : n_(n), eps_(eps), M_(M), seed_(seed) {
  if (!(eps > 0.0) || eps >= 1.0)
    throw std::invalid_argument("AmsF2Sketch: eps must lie in (0, 1)");
  group_size_ = static_cast<uint64_t>(std::ceil(8.0 / (eps * eps)));
  groups_ = 7;
  uint64_t rows = group_size_ * groups_;
  signs_.reserve(rows);
  SeedSequence seq(seed);
  for (uint64_t r = 0; r < rows; ++r) signs_.emplace_back(seq.next(), n_);
  y_.assign(rows, 0);
}

void AmsF2Sketch::update(const Update& u) {
  if (u.index >= n_) throw std::out_of_range("AmsF2Sketch: index outside [0, n)");
  for (size_t r = 0; r < y_.size(); ++r) y_[r] += u.delta * signs_[r](u.index);
}

double AmsF2Sketch::estimate() const {
  std::vector<double> means(groups_);
  for (int g = 0; g < groups_; ++g) {
    long double acc = 0.0L;
    for (uint64_t i = 0; i < group_size_; ++i) {
      long double v = y_[g * group_size_ + i];
      acc += v * v;
    }
    means[g] = static_cast<double>(acc / group_size_);
  }
  auto mid = means.begin() + means.size() / 2;
  std::nth_element(means.begin(), mid, means.end());
  return *mid;
}

void AmsF2Sketch::merge(const AmsF2Sketch& other) {
  if (n_ != other.n_ || seed_ != other.seed_ || y_.size() != other.y_.size())
    throw std::invalid_argument("AmsF2Sketch::merge: parameter/seed mismatch");
  for (size_t i = 0; i < y_.size(); ++i) y_[i] += other.y_[i];
}

SpaceReport AmsF2Sketch::space() const {
  SpaceReport r;
  uint64_t max_abs = static_cast<uint64_t>(M_) * n_;
  r.counter_bits = y_.size() * bits_for_magnitude(max_abs);
  r.hash_seed_bits = 64;
  r.auxiliary_bits = 3 * 64;
  return r;
}

double uniform_sample_fp(const FrequencyVector& x, double qprob, double p, uint64_t seed) {
  if (!(qprob > 0.0) || qprob > 1.0)
    throw std::invalid_argument("uniform_sample_fp: qprob must lie in (0, 1]");
  KWiseHash h(seed, 2, std::max<uint64_t>(2, x.n()), 1ull << 53);
  long double acc = 0.0L;
  for (uint64_t i = 0; i < x.n(); ++i) {
    if (x.entries[i] == 0) continue;
    double ui = static_cast<double>(h(i)) / static_cast<double>(1ull << 53);
    if (ui < qprob)
      acc += std::pow(std::fabs(static_cast<long double>(x.entries[i])),
                      static_cast<long double>(p));
  }
  return static_cast<double>(acc / qprob);
}

FpTwoPassResult fp_twopass_estimate(const TurnstileStream& stream, double p, double eps,
                                    uint64_t master_seed, double qprob_constant) {
  if (!(p > 0.0) || p > 2.0)
    throw std::invalid_argument("fp_twopass_estimate: p must lie in (0, 2]");
  if (!(eps > 0.0) || eps >= 1.0)
    throw std::invalid_argument("fp_twopass_estimate: eps must lie in (0, 1)");
  const uint64_t n = stream.n;
  const int64_t M = std::max<int64_t>(1, stream.M);
  SeedSequence seq(master_seed);
  uint64_t pass1_seed = seq.next();
  uint64_t sampler_seed = seq.next();
  uint64_t pass2_seed = seq.next();

  FpTwoPassResult res;

  // Pass 1: moment estimate at fixed eps, deflated to a lower bound.
  const double eps1 = 0.2;
  double norm1;
  SpaceReport pass1_space;
  if (p == 2.0) {
    AmsF2Sketch sk(n, eps1, M, pass1_seed);
    for (const Update& u : stream.updates) sk.update(u);
    norm1 = std::sqrt(std::max(0.0, sk.estimate()));
    pass1_space = sk.space();
  } else {
    PStableSketch sk(n, p, eps1, M, pass1_seed);
    for (const Update& u : stream.updates) sk.update(u);
    norm1 = sk.estimate();
    pass1_space = sk.space();
  }
  double Z = std::pow(norm1, p) / std::pow(1.0 + eps1, p);
  res.first_pass = Z;

  double qprob = 1.0;
  if (Z > 0.0)
    qprob = std::min(1.0, qprob_constant * std::pow(static_cast<double>(M), p) /
                              (eps * eps * Z));
  res.qprob = qprob;

  // Pass 2: inner sketch over the sampled coordinates, coarse generator grid.
  KWiseHash sampler(sampler_seed, 2, n, 1ull << 53);
  auto sampled = [&](uint64_t idx) {
    return static_cast<double>(sampler(idx)) / static_cast<double>(1ull << 53) < qprob;
  };
  // Grid and clamp are poly(M/eps): enough resolution near zero, and a
  // truncation point far above the sampled support's norm so row sums keep
  // their stable-law bulk. Counter words stay O(log M + log 1/eps) bits.
  double coarse_grid = std::pow(eps / static_cast<double>(M), 2.0);
  double coarse_clamp =
      std::min(1e30, std::pow(static_cast<double>(M) / eps + 2.0,
                              4.0 * std::max(1.0, 1.0 / p)));
  double inner_norm;
  SpaceReport pass2_space;
  if (p == 2.0) {
    AmsF2Sketch inner(n, eps, M, pass2_seed);
    for (const Update& u : stream.updates)
      if (sampled(u.index)) inner.update(u);
    inner_norm = std::sqrt(std::max(0.0, inner.estimate()));
    pass2_space = inner.space();
  } else {
    PStableSketch inner(n, p, eps, M, pass2_seed, 0, coarse_grid, coarse_clamp);
    for (const Update& u : stream.updates)
      if (sampled(u.index)) inner.update(u);
    inner_norm = inner.estimate();
    pass2_space = inner.space();
  }

  // Survivor count, for the space accounting and the sampling diagnostics.
  {
    FrequencyVector x = accumulate(stream);
    uint64_t nz = 0;
    for (uint64_t i = 0; i < n; ++i)
      if (x.entries[i] != 0 && sampled(i)) ++nz;
    res.sampled_nonzeros = nz;
  }

  res.value = std::pow(inner_norm, p) / qprob;
  res.space = pass1_space;
  res.space.counter_bits += pass2_space.counter_bits;
  res.space.hash_seed_bits += pass2_space.hash_seed_bits + 64;
  res.space.auxiliary_bits += pass2_space.auxiliary_bits;
  return res;
}

}  // namespace coarse
