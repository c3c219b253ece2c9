#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "coarse/space.hpp"
#include "coarse/stream.hpp"

// alpha-approximate l_p for p > 2 by reduction to constant-factor l_q
// estimation at the q where n^(1/q - 1/p) = alpha, plus the max-combiner for
// pairing a worst-case one-sided estimate with an untrusted oracle estimate.

namespace coarse {

// One-sided norm estimator interface: estimate() promises
// ||x||_q <= value <= factor * ||x||_q with the declared probability.
class NormEstimator {
 public:
  virtual ~NormEstimator() = default;
  virtual void process(const Update& u) = 0;
  virtual double estimate() = 0;
  virtual double q() const = 0;
  virtual double factor() const = 0;
  virtual double success_prob() const = 0;
  virtual SpaceReport space() const = 0;
};

// q = 1 / (1/p + log(alpha)/log(n)); guarantees n^(1/q - 1/p) = alpha.
// Requires p > 2 and 1 <= alpha <= n^(1/2 - 1/p) so that q >= 2.
double derive_q(uint64_t n, double p, double alpha);

struct LargePPlan {
  uint64_t n;
  double p;
  double alpha;
  double q;
  std::string inner;  // "exact", "psamp", or "ams"
};

LargePPlan plan_lp_large(uint64_t n, double p, double alpha, const std::string& inner);

// Builds the inner estimator named by the plan, configured for the plan's q.
std::unique_ptr<NormEstimator> make_norm_estimator(const LargePPlan& plan, int64_t M,
                                                   uint64_t seed);

struct LpLargeResult {
  double value = 0.0;   // ||x||_p <= value <= alpha * factor * ||x||_p on success
  double factor = 1.0;  // inner estimator's promised factor
  double success_prob = 1.0;
  SpaceReport space;
};

LpLargeResult lp_large_estimate(const TurnstileStream& stream, double p, double alpha,
                                NormEstimator& inner);

// Deflates a sandwich estimate into the one-sided underestimate form
// (1/alpha_total) * ||x||_p <= out <= ||x||_p used by the max-combiner.
double to_underestimate(double value, double alpha_total);

// Running a worst-case underestimate next to an untrusted oracle: the oracle
// wins when it is good and is ignored when it fails low.
double combine_with_oracle(double worst_case, double learned);

}  // namespace coarse
