#include "coarse/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "coarse/cascaded.hpp"
#include "coarse/heavy.hpp"
#include "coarse/instances.hpp"
#include "coarse/l0.hpp"
#include "coarse/lp.hpp"
#include "coarse/lp_large.hpp"
#include "coarse/schatten.hpp"
#include "coarse/seeds.hpp"

namespace coarse {

double ExperimentConfig::get_num(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : std::stod(it->second);
}

uint64_t ExperimentConfig::get_int(const std::string& key, uint64_t fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : std::stoull(it->second);
}

std::string ExperimentConfig::get_str(const std::string& key,
                                      const std::string& fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    if (key == "estimator")
      cfg.estimator = val;
    else if (key == "source")
      cfg.source = val;
    else if (key == "trials")
      cfg.trials = std::stoi(val);
    else if (key == "seed")
      cfg.master_seed = std::stoull(val);
    else if (key == "out")
      cfg.out_path = val;
    else
      cfg.params[key] = val;
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  return parse(f);
}

void ExperimentConfig::serialize(std::ostream& out) const {
  out << "estimator = " << estimator << "\n";
  out << "source = " << source << "\n";
  out << "trials = " << trials << "\n";
  out << "seed = " << master_seed << "\n";
  if (!out_path.empty()) out << "out = " << out_path << "\n";
  for (const auto& [k, v] : params) out << k << " = " << v << "\n";
}

std::vector<std::string> estimator_ids() {
  return {"l0_rough", "l0_twopass", "l0_threepass", "pstable", "ams",
          "fp_twopass", "lp_large", "fq_psamp", "hh", "schatten", "cascaded"};
}

std::vector<std::string> generator_ids() {
  return {"planted_l0", "random_vec", "zipf_vec", "coin",   "planted_hh",
          "pw11",       "augindex",   "augdisj",  "matrix_gauss",
          "matrix_identity", "matrix_rank1"};
}

namespace {

std::vector<uint64_t> distinct_indices(uint64_t n, uint64_t count, std::mt19937_64& rng) {
  if (count > n) throw std::invalid_argument("generator: more indices than dimension");
  // Partial Fisher-Yates over a reused identity buffer.
  thread_local std::vector<uint64_t> pool;
  pool.resize(n);
  for (uint64_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<uint64_t> out(count);
  for (uint64_t i = 0; i < count; ++i) {
    uint64_t j = i + rng() % (n - i);
    std::swap(pool[i], pool[j]);
    out[i] = pool[i];
  }
  return out;
}

}  // namespace

TurnstileStream build_generated_stream(const ExperimentConfig& cfg, uint64_t seed) {
  std::string kind = cfg.source.substr(4);
  std::mt19937_64 rng(seed);
  if (kind == "planted_l0") {
    uint64_t n = cfg.get_int("n", 1 << 16);
    uint64_t l0 = cfg.get_int("l0", 1 << 10);
    TurnstileStream s;
    s.n = n;
    s.M = 1;
    for (uint64_t idx : distinct_indices(n, l0, rng)) s.updates.push_back({idx, 1});
    return s;
  }
  if (kind == "random_vec" || kind == "zipf_vec") {
    uint64_t n = cfg.get_int("n", 1 << 12);
    uint64_t m = std::min<uint64_t>(n, cfg.get_int("m", n / 4));
    int64_t M = static_cast<int64_t>(cfg.get_int("mbound", 1000));
    TurnstileStream s;
    s.n = n;
    s.M = M;
    auto idx = distinct_indices(n, m, rng);
    for (uint64_t j = 0; j < m; ++j) {
      int64_t v;
      if (kind == "zipf_vec") {
        v = std::max<int64_t>(1, static_cast<int64_t>(
                                     M / std::pow(static_cast<double>(j + 1), 0.9)));
      } else {
        v = 1 + static_cast<int64_t>(rng() % M);
      }
      if (rng() & 1) v = -v;
      s.updates.push_back({idx[j], v});
    }
    std::shuffle(s.updates.begin(), s.updates.end(), rng);
    return s;
  }
  if (kind == "coin") {
    CoinStreamSpec spec;
    spec.length = cfg.get_int("mlen", 1000000);
    spec.beta = cfg.get_num("beta", 0.0);
    std::string mode = cfg.get_str("mode", "plain");
    spec.mode = mode == "bounded" ? CoinMode::bounded_deletion
                : mode == "random_order" ? CoinMode::random_order
                                         : CoinMode::plain;
    return gen_coin_stream(spec, seed);
  }
  if (kind == "planted_hh") {
    uint64_t n = cfg.get_int("n", 1 << 14);
    uint64_t k = cfg.get_int("k", 64);
    TurnstileStream s;
    s.n = n;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<int64_t> x(n);
    for (uint64_t i = 0; i < n; ++i) x[i] = std::llround(4.0 * normal(rng));
    int64_t v = std::llround(12.0 * std::sqrt(static_cast<double>(n) / k));
    for (uint64_t idx : distinct_indices(n, k / 2, rng))
      x[idx] = (rng() & 1) ? v : -v;
    int64_t max_abs = 1;
    for (uint64_t i = 0; i < n; ++i) {
      if (x[i] == 0) continue;
      s.updates.push_back({i, x[i]});
      max_abs = std::max(max_abs, std::abs(x[i]));
    }
    s.M = max_abs;
    return s;
  }
  if (kind == "pw11") {
    return gen_pw11(cfg.get_int("n", 1 << 14), cfg.get_int("k", 64), seed).stream;
  }
  if (kind == "augindex") {
    uint64_t n = cfg.get_int("n", 1 << 20);
    int t = static_cast<int>(cfg.get_int("t", 16));
    int l = t / 8;
    std::vector<int> u(l);
    for (int i = 0; i < l; ++i) u[i] = static_cast<int>(rng() & 1);
    uint64_t istar = 1 + rng() % l;
    AugIndexL0 inst = gen_augindex_l0(u, istar, n, t);
    TurnstileStream s = inst.alice;
    for (const Update& up : inst.bob_clear) s.updates.push_back(up);
    for (const Update& up : inst.bob_fill) s.updates.push_back(up);
    return s;
  }
  if (kind == "augdisj") {
    AugDisjLayered inst =
        gen_augdisj(cfg.get_int("n", 1 << 10), static_cast<int>(cfg.get_int("s", 8)),
                    static_cast<int>(cfg.get_int("r", 3)), seed);
    TurnstileStream s;
    s.n = inst.n;
    int64_t max_abs = 1;
    for (uint64_t i = 0; i < inst.n; ++i) {
      if (inst.y[i] == 0) continue;
      s.updates.push_back({i, inst.y[i]});
      max_abs = std::max(max_abs, std::abs(inst.y[i]));
    }
    s.M = max_abs;
    return s;
  }
  throw std::invalid_argument("unknown stream generator: " + kind);
}

MatrixStream build_generated_matrix(const ExperimentConfig& cfg, uint64_t seed) {
  std::string kind = cfg.source.substr(4);
  uint64_t n = cfg.get_int("n", 64);
  std::mt19937_64 rng(seed);
  MatrixStream m;
  m.n = n;
  int64_t max_abs = 1;
  auto push = [&](uint64_t r, uint64_t c, int64_t v) {
    if (v == 0) return;
    m.updates.push_back({r, c, v});
    max_abs = std::max(max_abs, std::abs(v));
  };
  if (kind == "matrix_identity") {
    for (uint64_t i = 0; i < n; ++i) push(i, i, 1);
  } else if (kind == "matrix_rank1") {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> u(n), v(n);
    for (auto& x : u) x = normal(rng);
    for (auto& x : v) x = normal(rng);
    for (uint64_t i = 0; i < n; ++i)
      for (uint64_t j = 0; j < n; ++j) push(i, j, std::llround(8.0 * u[i] * v[j]));
  } else if (kind == "matrix_gauss") {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (uint64_t i = 0; i < n; ++i)
      for (uint64_t j = 0; j < n; ++j) push(i, j, std::llround(8.0 * normal(rng)));
  } else {
    throw std::invalid_argument("unknown matrix generator: " + kind);
  }
  m.M = max_abs;
  return m;
}

namespace {

struct TrialOutcome {
  double exact = 0.0;
  double estimate = 0.0;
  bool success = false;
  SpaceReport space;
};

bool within_factor(double estimate, double truth, double factor) {
  if (truth <= 0.0) return estimate == 0.0;
  double slack = 1.0 + 1e-9;
  return estimate >= truth / (factor * slack) && estimate <= truth * factor * slack;
}

bool within_relative(double estimate, double truth, double eps) {
  if (truth == 0.0) return estimate == 0.0;
  return std::fabs(estimate - truth) <= eps * truth * (1.0 + 1e-9);
}

bool one_sided_sandwich(double estimate, double truth, double alpha) {
  if (truth <= 0.0) return estimate <= 1e-9;
  double slack = 1.0 + 1e-9;
  return estimate >= truth / slack && estimate <= alpha * truth * slack;
}

using TrialFn = std::function<TrialOutcome(const ExperimentConfig&, uint64_t trial_seed)>;

TurnstileStream trial_stream(const ExperimentConfig& cfg, uint64_t trial_seed) {
  if (cfg.source.rfind("gen:", 0) == 0) return build_generated_stream(cfg, trial_seed);
  if (cfg.source.rfind("file:", 0) == 0) return load_turnstile_file(cfg.source.substr(5));
  throw std::invalid_argument("source must be gen:<kind> or file:<path>");
}

MatrixStream trial_matrix(const ExperimentConfig& cfg, uint64_t trial_seed) {
  if (cfg.source.rfind("gen:", 0) == 0) return build_generated_matrix(cfg, trial_seed);
  if (cfg.source.rfind("file:", 0) == 0) return load_matrix_file(cfg.source.substr(5));
  throw std::invalid_argument("source must be gen:<kind> or file:<path>");
}

L0Profile profile_from(const ExperimentConfig& cfg) {
  std::string name = cfg.get_str("l0_profile", "desk");
  if (name == "paper") return L0Profile::paper();
  if (name == "desk") return L0Profile::desk();
  if (name == "desk16") return L0Profile::desk16();
  throw std::invalid_argument("l0_profile must be paper, desk or desk16");
}

HeavyReport heavy_trial(const ExperimentConfig& cfg, uint64_t seed,
                        TurnstileStream* stream_out) {
  TurnstileStream s = trial_stream(cfg, derive_seed(seed, 1));
  uint64_t k = cfg.get_int("k", 64);
  double alpha = cfg.get_num("alpha", 4.0);
  CountSketchTable table(s.n, k, std::max<int64_t>(1, s.M), derive_seed(seed, 2));
  AmsF2Sketch f2(s.n, 0.5, std::max<int64_t>(1, s.M), derive_seed(seed, 3));
  for (const Update& u : s.updates) {
    table.update(u);
    f2.update(u);
  }
  HeavyReport rep = extract_heavy(table, k, alpha, f2.estimate());
  if (stream_out) *stream_out = std::move(s);
  return rep;
}

struct EstimatorEntry {
  TrialFn run;
  double floor;
};

EstimatorEntry make_entry(const std::string& id) {
  const double slack = 0.05;
  if (id == "l0_rough") {
    return {[](const ExperimentConfig& cfg, uint64_t seed) {
              TurnstileStream s = trial_stream(cfg, derive_seed(seed, 1));
              FrequencyVector x = accumulate(s);
              TrialOutcome out;
              out.exact = exact_moment(x, 0.0);
              int t = static_cast<int>(cfg.get_int("t", 4));
              RoughL0Sketch sk(s.n, t, std::max<int64_t>(1, s.M), derive_seed(seed, 2),
                               profile_from(cfg));
              for (const Update& u : s.updates) sk.update(u);
              L0Estimate e = sk.estimate();
              out.estimate = e.value;
              out.success = within_factor(out.estimate, out.exact, e.factor);
              out.space = sk.space();
              return out;
            },
            0.9 - slack};
  }
  if (id == "l0_twopass" || id == "l0_threepass") {
    bool three = id == "l0_threepass";
    return {[three](const ExperimentConfig& cfg, uint64_t seed) {
              TurnstileStream s = trial_stream(cfg, derive_seed(seed, 1));
              FrequencyVector x = accumulate(s);
              double eps = cfg.get_num("eps", 0.1);
              TrialOutcome out;
              out.exact = exact_moment(x, 0.0);
              MultiPassResult r = three
                                      ? threepass_estimate(s, eps, derive_seed(seed, 2))
                                      : twopass_estimate(s, eps, derive_seed(seed, 2));
              out.estimate = r.estimate.value;
              out.success = within_relative(out.estimate, out.exact, eps);
              out.space = r.space;
              return out;
            },
            (three ? 0.75 : 0.8) - slack};
  }
  if (id == "pstable") {
    return {[](const ExperimentConfig& cfg, uint64_t seed) {
              TurnstileStream s = trial_stream(cfg, derive_seed(seed, 1));
              FrequencyVector x = accumulate(s);
              double p = cfg.get_num("p", 1.0);
              double eps = cfg.get_num("eps", 0.2);
              TrialOutcome out;
              out.exact = exact_moment(x, p);
              PStableSketch sk(s.n, p, eps, std::max<int64_t>(1, s.M),
                               derive_seed(seed, 2));
              for (const Update& u : s.updates) sk.update(u);
              out.estimate = sk.estimate();
              out.success = within_relative(out.estimate, out.exact, eps);
              out.space = sk.space();
              return out;
            },
            0.9 - slack};
  }
  if (id == "ams") {
    return {[](const ExperimentConfig& cfg, uint64_t seed) {
              TurnstileStream s = trial_stream(cfg, derive_seed(seed, 1));
              FrequencyVector x = accumulate(s);
              double eps = cfg.get_num("eps", 0.2);
              TrialOutcome out;
              double f2 = exact_moment(x, 2.0);
              out.exact = f2 * f2;
              AmsF2Sketch sk(s.n, eps, std::max<int64_t>(1, s.M), derive_seed(seed, 2));
              for (const Update& u : s.updates) sk.update(u);
              out.estimate = sk.estimate();
              out.success = within_relative(out.estimate, out.exact, eps);
              out.space = sk.space();
              return out;
            },
            0.9 - slack};
  }
  if (id == "fp_twopass") {
    return {[](const ExperimentConfig& cfg, uint64_t seed) {
              TurnstileStream s = trial_stream(cfg, derive_seed(seed, 1));
              FrequencyVector x = accumulate(s);
              double p = cfg.get_num("p", 1.0);
              double eps = cfg.get_num("eps", 0.1);
              TrialOutcome out;
              out.exact = std::pow(exact_moment(x, p), p);
              FpTwoPassResult r = fp_twopass_estimate(s, p, eps, derive_seed(seed, 2));
              out.estimate = r.value;
              out.success = within_relative(out.estimate, out.exact, eps);
              out.space = r.space;
              return out;
            },
            0.9 - slack};
  }
  if (id == "lp_large") {
    return {[](const ExperimentConfig& cfg, uint64_t seed) {
              TurnstileStream s = trial_stream(cfg, derive_seed(seed, 1));
              FrequencyVector x = accumulate(s);
              double p = cfg.get_num("p", 4.0);
              double alpha = cfg.get_num("alpha", 4.0);
              std::string inner = cfg.get_str("inner", "psamp");
              TrialOutcome out;
              out.exact = exact_moment(x, p);
              LargePPlan plan = plan_lp_large(s.n, p, alpha, inner);
              auto est = make_norm_estimator(plan, std::max<int64_t>(1, s.M),
                                             derive_seed(seed, 2));
              LpLargeResult r = lp_large_estimate(s, p, alpha, *est);
              out.estimate = r.value;
              out.success =
                  one_sided_sandwich(out.estimate, out.exact, alpha * r.factor);
              out.space = r.space;
              return out;
            },
            2.0 / 3.0 - slack};
  }
  if (id == "fq_psamp") {
    return {[](const ExperimentConfig& cfg, uint64_t seed) {
              TurnstileStream s = trial_stream(cfg, derive_seed(seed, 1));
              FrequencyVector x = accumulate(s);
              double q = cfg.get_num("q", 4.0);
              TrialOutcome out;
              out.exact = std::pow(exact_moment(x, q), q);
              FqPrecisionSketch sk(s.n, q, std::max<int64_t>(1, s.M),
                                   derive_seed(seed, 2));
              for (const Update& u : s.updates) sk.update(u);
              out.estimate = sk.estimate();
              out.success = out.exact == 0.0
                                ? out.estimate == 0.0
                                : (out.estimate >= out.exact / (sk.f_target() * (1 + 1e-9)) &&
                                   out.estimate <= out.exact * sk.f_target() * (1 + 1e-9));
              out.space = sk.space();
              return out;
            },
            2.0 / 3.0 - slack};
  }
  if (id == "hh") {
    return {[](const ExperimentConfig& cfg, uint64_t seed) {
              TrialOutcome out;
              TurnstileStream s;
              HeavyReport rep = heavy_trial(cfg, seed, &s);
              FrequencyVector x = accumulate(s);
              auto truth = exact_heavy_set(x, cfg.get_int("k", 64));
              out.exact = static_cast<double>(truth.size());
              out.estimate = static_cast<double>(rep.set.size());
              out.success = rep.set == truth;
              CountSketchTable sizing(s.n, cfg.get_int("k", 64),
                                      std::max<int64_t>(1, s.M), 0);
              out.space = sizing.space();
              return out;
            },
            0.9 - slack};
  }
  if (id == "schatten") {
    return {[](const ExperimentConfig& cfg, uint64_t seed) {
              MatrixStream m = trial_matrix(cfg, derive_seed(seed, 1));
              double p = cfg.get_num("p", 4.0);
              double alpha = cfg.get_num("alpha", 2.0);
              TrialOutcome out;
              out.exact = exact_schatten(m, p);
              SchattenPlan plan = plan_schatten(m.n, p, alpha);
              std::string cache = cfg.get_str("gamma_cache", "");
              if (cache.empty())
                calibrate_gamma(plan, 60, derive_seed(cfg.master_seed, 0xCA11));
              else
                calibrate_gamma_cached(plan, 60, derive_seed(cfg.master_seed, 0xCA11),
                                       cache);
              BilinearSketchState st(plan, derive_seed(seed, 2));
              Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m.n, m.n);
              for (const auto& u : m.updates) a(u.row, u.col) += u.delta;
              st.absorb_dense(a);
              out.estimate = schatten_alpha_estimate(st, plan);
              out.success = one_sided_sandwich(out.estimate, out.exact, alpha);
              out.space = st.space();
              return out;
            },
            2.0 / 3.0 - slack};
  }
  if (id == "cascaded") {
    return {[](const ExperimentConfig& cfg, uint64_t seed) {
              MatrixStream m = trial_matrix(cfg, derive_seed(seed, 1));
              double p = cfg.get_num("p", 3.0);
              double q = cfg.get_num("q", 4.0);
              double alpha = cfg.get_num("alpha", 8.0);
              TrialOutcome out;
              out.exact = exact_cascaded(m, p, q);
              SpaceReport sp;
              out.estimate = cascaded_estimate(m, p, q, alpha, derive_seed(seed, 2), &sp);
              out.success = one_sided_sandwich(out.estimate, out.exact, alpha);
              out.space = sp;
              return out;
            },
            2.0 / 3.0 - slack};
  }
  std::string known;
  for (const auto& e : estimator_ids()) known += (known.empty() ? "" : ", ") + e;
  throw std::invalid_argument("unknown estimator '" + id + "'; valid ids: " + known);
}

}  // namespace

std::vector<uint64_t> run_heavy_extraction(const ExperimentConfig& cfg, int trial) {
  return heavy_trial(cfg, derive_seed(cfg.master_seed, trial), nullptr).set;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads) {
  EstimatorEntry entry = make_entry(cfg.estimator);
  ExperimentResult res;
  res.floor = entry.floor;
  res.rows.resize(cfg.trials);
  std::mutex next_mu;
  int next = 0;
  auto worker = [&]() {
    for (;;) {
      int trial;
      {
        std::lock_guard<std::mutex> lock(next_mu);
        if (next >= cfg.trials) return;
        trial = next++;
      }
      uint64_t trial_seed = derive_seed(cfg.master_seed, trial);
      TrialOutcome out = entry.run(cfg, trial_seed);
      TrialRow row;
      row.trial = trial;
      row.seed = trial_seed;
      row.exact = out.exact;
      row.estimate = out.estimate;
      row.ratio = out.exact != 0.0
                      ? out.estimate / out.exact
                      : (out.estimate > 0.0 ? std::numeric_limits<double>::infinity()
                                            : std::numeric_limits<double>::quiet_NaN());
      row.success = out.success;
      row.space = out.space;
      res.rows[trial] = row;
    }
  };
  std::vector<std::thread> pool;
  int nthreads = std::max(1, std::min<int>(threads, cfg.trials));
  for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  int ok = 0;
  for (const TrialRow& r : res.rows) ok += r.success ? 1 : 0;
  res.success_rate = cfg.trials > 0 ? static_cast<double>(ok) / cfg.trials : 1.0;
  res.pass = res.success_rate >= res.floor;
  return res;
}

std::string ExperimentResult::csv() const {
  std::string out = "trial,seed,exact,estimate,ratio,success,counter_bits,seed_bits,total_bits\n";
  char buf[256];
  for (const TrialRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%llu,%.17g,%.17g,%.17g,%d,%llu,%llu,%llu\n",
                  r.trial, static_cast<unsigned long long>(r.seed), r.exact, r.estimate,
                  r.ratio, r.success ? 1 : 0,
                  static_cast<unsigned long long>(r.space.counter_bits),
                  static_cast<unsigned long long>(r.space.hash_seed_bits),
                  static_cast<unsigned long long>(r.space.total_bits()));
    out += buf;
  }
  return out;
}

}  // namespace coarse
