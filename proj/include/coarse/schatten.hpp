#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "coarse/space.hpp"
#include "coarse/stream.hpp"

// alpha-approximate Schatten-p norm via the bilinear Gaussian sketch
// S = G A H^T: the sketch is tiny, so the Schatten-q norm of S is computed
// exactly and rescaled by an empirically calibrated gamma.

namespace coarse {

struct SchattenPlan {
  uint64_t n = 0;
  double p = 2.0;
  double alpha = 1.0;
  double q = 2.0;   // p when p is an even integer, else the largest even integer < p
  double t = 1.0;
  uint64_t r_g = 0;
  uint64_t r_h = 0;
  double gamma = 0.0;  // 0 until calibrated
};

// Derives (q, t, r_g, r_h). For non-even p requires alpha >= n^(1/q - 1/p).
SchattenPlan plan_schatten(uint64_t n, double p, double alpha);

class BilinearSketchState {
 public:
  BilinearSketchState(const SchattenPlan& plan, uint64_t seed);

  // S += delta * g_col(row) h_col(col)^T
  void update(uint64_t row, uint64_t col, double delta);
  void update(const MatrixEntryUpdate& u) {
    update(u.row, u.col, static_cast<double>(u.delta));
  }

  // Batch path, S = G A H^T; produces the same state as streaming the
  // entries of A (up to float summation order).
  void absorb_dense(const Eigen::MatrixXd& a);

  const Eigen::MatrixXd& sketch() const { return s_; }
  Eigen::MatrixXd g_matrix() const;
  Eigen::MatrixXd h_matrix() const;

  void merge(const BilinearSketchState& other);
  SpaceReport space() const;

 private:
  Eigen::VectorXd g_column(uint64_t col) const;
  Eigen::VectorXd h_column(uint64_t col) const;

  uint64_t n_;
  uint64_t r_g_, r_h_;
  uint64_t seed_g_, seed_h_;
  uint64_t seed_;
  Eigen::MatrixXd s_;
};

// Schatten-q norm of a dense matrix from its singular values.
double schatten_q_norm(const Eigen::MatrixXd& m, double q);

// gamma * ||S||_q; requires plan.gamma > 0 (run calibrate_gamma first).
double schatten_alpha_estimate(const BilinearSketchState& st, const SchattenPlan& plan);

struct GammaCalibration {
  double gamma = 0.0;
  double lower_bound = 0.0;  // smallest feasible gamma (flat-spectrum edge)
  double upper_bound = 0.0;  // largest feasible gamma (rank-1 edge)
  int trials = 0;
};

// Fits gamma so that on the flat-spectrum input the lower sandwich edge
// holds in >= 95% of trials while the rank-1 upper edge stays under alpha.
// Throws (with the infeasible band in the message) when no gamma works.
GammaCalibration calibrate_gamma(SchattenPlan& plan, int trials, uint64_t seed);

// Same, backed by a text cache keyed by (n, p, alpha, t, seed, trials).
GammaCalibration calibrate_gamma_cached(SchattenPlan& plan, int trials, uint64_t seed,
                                        const std::string& cache_path);

// True iff every singular value of A is preserved by S within (1 +- eps).
bool subspace_embed_check(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a, double eps);

// Rectangular input -> square: Gaussian-embed the long side, then zero-pad.
Eigen::MatrixXd embed_to_square(const Eigen::MatrixXd& a, uint64_t seed);

}  // namespace coarse
