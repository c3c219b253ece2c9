#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

// Turnstile stream model and the exact reference oracles every sketch is
// benchmarked against. Oracles are pure functions over immutable inputs and
// use exact integer arithmetic where possible, compensated long-double
// summation elsewhere, so they are never the noise source in a test.

namespace coarse {

struct Update {
  uint64_t index;
  int64_t delta;
};

struct TurnstileStream {
  uint64_t n = 0;        // dimension of the underlying vector
  int64_t M = 0;         // bound on |x_i| over every prefix
  std::vector<Update> updates;
};

struct FrequencyVector {
  std::vector<int64_t> entries;

  uint64_t n() const { return entries.size(); }
  bool is_zero() const {
    for (int64_t v : entries)
      if (v != 0) return false;
    return true;
  }
};

struct MatrixEntryUpdate {
  uint64_t row;
  uint64_t col;
  int64_t delta;
};

// Square matrix stream; viewed as an n^2-dimensional turnstile stream.
struct MatrixStream {
  uint64_t n = 0;
  int64_t M = 0;
  std::vector<MatrixEntryUpdate> updates;
};

// Symmetric nonnegative penalty G with G(0)=0, nondecreasing in |x| and
// G(y)/G(x) >= |y/x|^gamma for |y| > |x| > 0.
struct GEstimator {
  std::function<double(int64_t)> evaluate;
  double gamma = 1.0;
};

// Spot-checks the GEstimator contract on sampled pairs; returns false on the
// first violation.
bool check_g_estimator(const GEstimator& g, int64_t max_abs, uint64_t seed,
                       int samples = 256);

FrequencyVector accumulate(const TurnstileStream& stream);

// Accumulates a matrix stream into row-major dense storage.
std::vector<std::vector<int64_t>> accumulate_matrix(const MatrixStream& stream);

// ||x||_p for p > 0, number of nonzero entries for p = 0.
double exact_moment(const FrequencyVector& x, double p);

double exact_g_norm(const FrequencyVector& x, const GEstimator& g);

// Exactly { i : k * x_i^2 >= ||x||_2^2 }, integer arithmetic throughout.
std::vector<uint64_t> exact_heavy_set(const FrequencyVector& x, uint64_t k);

// Schatten p-norm of the accumulated matrix via a dense singular value
// decomposition.
double exact_schatten(const MatrixStream& a, double p);

// Cascaded (p,q)-norm: l_p norm of the vector of row-wise l_q norms.
double exact_cascaded(const MatrixStream& a, double p, double q);

// True iff the prefix l2 norm never falls below (running max)/alpha_bd.
bool check_bounded_deletion(const TurnstileStream& stream, double alpha_bd);

// True iff every prefix satisfies ||x||_inf <= stream.M and indices are in
// range.
bool check_stream_valid(const TurnstileStream& stream);

// Line-oriented text format. Vector streams: first line "n M", then one
// update "index delta" per line. Matrix streams: first line "n n M", then
// "row col delta". '#' starts a comment.
void write_stream(std::ostream& out, const TurnstileStream& stream);
void write_stream(std::ostream& out, const MatrixStream& stream);
TurnstileStream read_turnstile_stream(std::istream& in);
MatrixStream read_matrix_stream(std::istream& in);

// Reads either kind, dispatching on the header line.
struct AnyStream {
  bool is_matrix = false;
  TurnstileStream vec;
  MatrixStream mat;
};
AnyStream read_any_stream(std::istream& in);

TurnstileStream load_turnstile_file(const std::string& path);
MatrixStream load_matrix_file(const std::string& path);

}  // namespace coarse
