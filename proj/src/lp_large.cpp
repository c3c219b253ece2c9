#include "coarse/lp_large.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coarse/cascaded.hpp"
#include "coarse/lp.hpp"

namespace coarse {

double derive_q(uint64_t n, double p, double alpha) {
  if (!(p > 2.0)) throw std::invalid_argument("derive_q: p must be > 2");
  if (alpha < 1.0 - 1e-12)
    throw std::invalid_argument("derive_q: approximation target below 1 is trivial");
  double alpha_max = std::pow(static_cast<double>(n), 0.5 - 1.0 / p);
  if (alpha > alpha_max * (1.0 + 1e-12))
    throw std::invalid_argument(
        "derive_q: approximation target below constant-factor regime (q would drop "
        "under 2)");
  double q = 1.0 / (1.0 / p + std::log(alpha) / std::log(static_cast<double>(n)));
  return std::clamp(q, 2.0, p);
}

LargePPlan plan_lp_large(uint64_t n, double p, double alpha, const std::string& inner) {
  if (inner != "exact" && inner != "psamp" && inner != "ams")
    throw std::invalid_argument("plan_lp_large: inner must be exact, psamp or ams");
  LargePPlan plan;
  plan.n = n;
  plan.p = p;
  plan.alpha = alpha;
  plan.q = derive_q(n, p, alpha);
  plan.inner = inner;
  if (inner == "ams" && std::fabs(plan.q - 2.0) > 1e-9)
    throw std::invalid_argument("plan_lp_large: the sign sketch only estimates q = 2");
  if (inner == "psamp" && !(plan.q > 2.0))
    throw std::invalid_argument("plan_lp_large: precision sampling needs q > 2");
  return plan;
}

namespace {

// f = 1: accumulates the vector and evaluates the norm directly.
class ExactNormOracle final : public NormEstimator {
 public:
  ExactNormOracle(uint64_t n, double q) : q_(q) { x_.entries.assign(n, 0); }
  void process(const Update& u) override {
    if (u.index >= x_.n()) throw std::out_of_range("ExactNormOracle: index outside [0, n)");
    x_.entries[u.index] += u.delta;
  }
  double estimate() override { return exact_moment(x_, q_); }
  double q() const override { return q_; }
  double factor() const override { return 1.0; }
  double success_prob() const override { return 1.0; }
  SpaceReport space() const override {
    SpaceReport r;
    r.counter_bits = x_.n() * 64;
    return r;
  }

 private:
  double q_;
  FrequencyVector x_;
};

// Two-sided factor-f0 moment estimate lifted to a one-sided norm estimate by
// multiplying the moment by f0 before the q-th root.
class PrecisionSamplingNormEstimator final : public NormEstimator {
 public:
  PrecisionSamplingNormEstimator(uint64_t n, double q, int64_t M, uint64_t seed)
      : q_(q), sketch_(n, q, M, seed, 2.0) {}
  void process(const Update& u) override { sketch_.update(u); }
  double estimate() override {
    double moment = sketch_.estimate();
    if (!(moment > 0.0)) return 0.0;
    return std::pow(moment * sketch_.f_target(), 1.0 / q_);
  }
  double q() const override { return q_; }
  double factor() const override { return std::pow(sketch_.f_target(), 2.0 / q_); }
  double success_prob() const override { return 2.0 / 3.0; }
  SpaceReport space() const override { return sketch_.space(); }

 private:
  double q_;
  FqPrecisionSketch sketch_;
};

class AmsNormEstimator final : public NormEstimator {
 public:
  AmsNormEstimator(uint64_t n, int64_t M, uint64_t seed, double eps = 0.2)
      : eps_(eps), sketch_(n, eps, M, seed) {}
  void process(const Update& u) override { sketch_.update(u); }
  double estimate() override {
    double f2 = std::max(0.0, sketch_.estimate());
    return std::sqrt(f2 * (1.0 + eps_));
  }
  double q() const override { return 2.0; }
  double factor() const override { return std::sqrt((1.0 + eps_) / (1.0 - eps_)); }
  double success_prob() const override { return 0.9; }
  SpaceReport space() const override { return sketch_.space(); }

 private:
  double eps_;
  AmsF2Sketch sketch_;
};

}  // namespace

std::unique_ptr<NormEstimator> make_norm_estimator(const LargePPlan& plan, int64_t M,
                                                   uint64_t seed) {
  if (plan.inner == "exact")
    return std::make_unique<ExactNormOracle>(plan.n, plan.q);
  if (plan.inner == "psamp")
    return std::make_unique<PrecisionSamplingNormEstimator>(plan.n, plan.q, M, seed);
  return std::make_unique<AmsNormEstimator>(plan.n, M, seed);
}

LpLargeResult lp_large_estimate(const TurnstileStream& stream, double p, double alpha,
                                NormEstimator& inner) {
  double q = derive_q(stream.n, p, alpha);
  if (std::fabs(inner.q() - q) > 1e-6)
    throw std::invalid_argument("lp_large_estimate: inner estimator configured for wrong q");
  for (const Update& u : stream.updates) inner.process(u);
  LpLargeResult res;
  // ||x||_p <= ||x||_q <= inner value on success, and the value exceeds
  // ||x||_q by at most the inner factor, so the sandwich needs no rescaling.
  res.value = inner.estimate();
  res.factor = inner.factor();
  res.success_prob = inner.success_prob();
  res.space = inner.space();
  return res;
}

double to_underestimate(double value, double alpha_total) {
  if (!(alpha_total >= 1.0)) throw std::invalid_argument("to_underestimate: alpha < 1");
  return value / alpha_total;
}

double combine_with_oracle(double worst_case, double learned) {
  return std::max(worst_case, learned);
}

}  // namespace coarse
