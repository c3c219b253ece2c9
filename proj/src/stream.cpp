#include "coarse/stream.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "coarse/seeds.hpp"

namespace coarse {

namespace {

// Compensated (Kahan) summation in long double.
struct KahanSum {
  long double sum = 0.0L;
  long double c = 0.0L;
  void add(long double v) {
    long double y = v - c;
    long double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

bool check_g_estimator(const GEstimator& g, int64_t max_abs, uint64_t seed,
                       int samples) {
  if (!g.evaluate || g.gamma <= 0) return false;
  if (g.evaluate(0) != 0.0) return false;
  uint64_t s = seed;
  for (int i = 0; i < samples; ++i) {
    int64_t a = static_cast<int64_t>(splitmix64(s) % static_cast<uint64_t>(max_abs)) + 1;
    int64_t b = static_cast<int64_t>(splitmix64(s) % static_cast<uint64_t>(max_abs)) + 1;
    if (g.evaluate(a) != g.evaluate(-a)) return false;
    if (g.evaluate(a) < 0 || g.evaluate(b) < 0) return false;
    int64_t lo = std::min(a, b), hi = std::max(a, b);
    if (g.evaluate(hi) < g.evaluate(lo)) return false;
    if (lo < hi && g.evaluate(lo) > 0) {
      double ratio = g.evaluate(hi) / g.evaluate(lo);
      double bound = std::pow(static_cast<double>(hi) / static_cast<double>(lo), g.gamma);
      if (ratio < bound * (1.0 - 1e-9)) return false;
    }
  }
  return true;
}

FrequencyVector accumulate(const TurnstileStream& stream) {
  FrequencyVector x;
  x.entries.assign(stream.n, 0);
  for (const Update& u : stream.updates) {
    if (u.index >= stream.n)
      throw std::out_of_range("accumulate: update index outside [0, n)");
    x.entries[u.index] += u.delta;
  }
  return x;
}

std::vector<std::vector<int64_t>> accumulate_matrix(const MatrixStream& stream) {
  std::vector<std::vector<int64_t>> a(stream.n, std::vector<int64_t>(stream.n, 0));
  for (const MatrixEntryUpdate& u : stream.updates) {
    if (u.row >= stream.n || u.col >= stream.n)
      throw std::out_of_range("accumulate_matrix: entry outside matrix");
    a[u.row][u.col] += u.delta;
  }
  return a;
}

double exact_moment(const FrequencyVector& x, double p) {
  if (p < 0) throw std::invalid_argument("exact_moment: p must be >= 0");
  if (p == 0.0) {
    uint64_t nz = 0;
    for (int64_t v : x.entries)
      if (v != 0) ++nz;
    return static_cast<double>(nz);
  }
  KahanSum s;
  for (int64_t v : x.entries) {
    if (v == 0) continue;
    s.add(std::pow(std::fabs(static_cast<long double>(v)), static_cast<long double>(p)));
  }
  return static_cast<double>(std::pow(s.sum, 1.0L / static_cast<long double>(p)));
}

double exact_g_norm(const FrequencyVector& x, const GEstimator& g) {
  KahanSum s;
  for (int64_t v : x.entries) {
    if (v == 0) continue;  // G(0) = 0 by contract
    s.add(g.evaluate(v));
  }
  return static_cast<double>(s.sum);
}

std::vector<uint64_t> exact_heavy_set(const FrequencyVector& x, uint64_t k) {
  if (k < 1) throw std::invalid_argument("exact_heavy_set: k must be >= 1");
  unsigned __int128 f2 = 0;
  for (int64_t v : x.entries) {
    __int128 vv = v;
    f2 += static_cast<unsigned __int128>(vv * vv);
  }
  std::vector<uint64_t> out;
  if (f2 == 0) return out;
  for (uint64_t i = 0; i < x.entries.size(); ++i) {
    __int128 v = x.entries[i];
    unsigned __int128 lhs = static_cast<unsigned __int128>(v * v) * k;
    if (lhs >= f2) out.push_back(i);
  }
  return out;
}

double exact_schatten(const MatrixStream& a, double p) {
  if (p < 1) throw std::invalid_argument("exact_schatten: p must be >= 1");
  auto dense = accumulate_matrix(a);
  Eigen::MatrixXd m(a.n, a.n);
  for (uint64_t i = 0; i < a.n; ++i)
    for (uint64_t j = 0; j < a.n; ++j) m(i, j) = static_cast<double>(dense[i][j]);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  KahanSum s;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] <= 0) continue;
    s.add(std::pow(static_cast<long double>(sv[i]), static_cast<long double>(p)));
  }
  return static_cast<double>(std::pow(s.sum, 1.0L / static_cast<long double>(p)));
}

double exact_cascaded(const MatrixStream& a, double p, double q) {
  if (p < 1 || q < 1) throw std::invalid_argument("exact_cascaded: p, q must be >= 1");
  auto dense = accumulate_matrix(a);
  KahanSum outer;
  for (uint64_t i = 0; i < a.n; ++i) {
    KahanSum inner;
    for (uint64_t j = 0; j < a.n; ++j) {
      int64_t v = dense[i][j];
      if (v == 0) continue;
      inner.add(std::pow(std::fabs(static_cast<long double>(v)), static_cast<long double>(q)));
    }
    if (inner.sum == 0.0L) continue;
    long double row_norm = std::pow(inner.sum, 1.0L / static_cast<long double>(q));
    outer.add(std::pow(row_norm, static_cast<long double>(p)));
  }
  return static_cast<double>(std::pow(outer.sum, 1.0L / static_cast<long double>(p)));
}

bool check_bounded_deletion(const TurnstileStream& stream, double alpha_bd) {
  if (alpha_bd < 1.0) throw std::invalid_argument("check_bounded_deletion: alpha must be >= 1");
  std::vector<int64_t> x(stream.n, 0);
  unsigned __int128 norm2 = 0;   // current squared l2 norm, exact
  unsigned __int128 runmax2 = 0; // running max of squared prefix norms
  const long double a2 = static_cast<long double>(alpha_bd) * alpha_bd;
  for (const Update& u : stream.updates) {
    if (u.index >= stream.n)
      throw std::out_of_range("check_bounded_deletion: index outside [0, n)");
    __int128 old_v = x[u.index];
    __int128 new_v = old_v + u.delta;
    norm2 += static_cast<unsigned __int128>(new_v * new_v) -
             static_cast<unsigned __int128>(old_v * old_v);
    x[u.index] = static_cast<int64_t>(new_v);
    if (norm2 > runmax2) runmax2 = norm2;
    if (static_cast<long double>(norm2) * a2 < static_cast<long double>(runmax2))
      return false;
  }
  return true;
}

bool check_stream_valid(const TurnstileStream& stream) {
  std::vector<int64_t> x(stream.n, 0);
  for (const Update& u : stream.updates) {
    if (u.index >= stream.n) return false;
    x[u.index] += u.delta;
    if (x[u.index] > stream.M || x[u.index] < -stream.M) return false;
  }
  return true;
}

void write_stream(std::ostream& out, const TurnstileStream& stream) {
  out << stream.n << ' ' << stream.M << '\n';
  for (const Update& u : stream.updates) out << u.index << ' ' << u.delta << '\n';
}

void write_stream(std::ostream& out, const MatrixStream& stream) {
  out << stream.n << ' ' << stream.n << ' ' << stream.M << '\n';
  for (const MatrixEntryUpdate& u : stream.updates)
    out << u.row << ' ' << u.col << ' ' << u.delta << '\n';
}

namespace {

// Strips comments and returns the whitespace-separated tokens of the next
// non-empty line.
bool next_line_tokens(std::istream& in, std::vector<std::string>& tokens) {
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    tokens.clear();
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (!tokens.empty()) return true;
  }
  return false;
}

}  // namespace

AnyStream read_any_stream(std::istream& in) {
  AnyStream result;
  std::vector<std::string> tok;
  if (!next_line_tokens(in, tok)) throw std::runtime_error("stream file: missing header");
  if (tok.size() == 2) {
    result.is_matrix = false;
    result.vec.n = std::stoull(tok[0]);
    result.vec.M = std::stoll(tok[1]);
    while (next_line_tokens(in, tok)) {
      if (tok.size() != 2) throw std::runtime_error("stream file: expected 'index delta'");
      result.vec.updates.push_back({std::stoull(tok[0]), std::stoll(tok[1])});
    }
  } else if (tok.size() == 3) {
    result.is_matrix = true;
    result.mat.n = std::stoull(tok[0]);
    if (std::stoull(tok[1]) != result.mat.n)
      throw std::runtime_error("stream file: matrix header must be 'n n M'");
    result.mat.M = std::stoll(tok[2]);
    while (next_line_tokens(in, tok)) {
      if (tok.size() != 3) throw std::runtime_error("stream file: expected 'row col delta'");
      result.mat.updates.push_back({std::stoull(tok[0]), std::stoull(tok[1]), std::stoll(tok[2])});
    }
  } else {
    throw std::runtime_error("stream file: bad header line");
  }
  return result;
}

TurnstileStream read_turnstile_stream(std::istream& in) {
  AnyStream s = read_any_stream(in);
  if (s.is_matrix) throw std::runtime_error("expected a vector stream, found matrix header");
  return std::move(s.vec);
}

MatrixStream read_matrix_stream(std::istream& in) {
  AnyStream s = read_any_stream(in);
  if (!s.is_matrix) throw std::runtime_error("expected a matrix stream, found vector header");
  return std::move(s.mat);
}

TurnstileStream load_turnstile_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open stream file: " + path);
  return read_turnstile_stream(f);
}

MatrixStream load_matrix_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open stream file: " + path);
  return read_matrix_stream(f);
}

}  // namespace coarse
