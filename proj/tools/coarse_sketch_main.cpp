// coarse-sketch: run estimators against generators or stream files, compare
// to exact oracles, and emit CSV reports; also regenerates the p-stable
// median table and writes hard-instance stream files.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <random>

#include "coarse/bench.hpp"
#include "coarse/instances.hpp"
#include "coarse/lp.hpp"
#include "coarse/seeds.hpp"
#include "coarse/stream.hpp"

using namespace coarse;

namespace {

int cmd_run(const std::string& config_path, ExperimentConfig overrides,
            const std::vector<std::string>& sets) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = ExperimentConfig::load(config_path);
  if (!overrides.estimator.empty()) cfg.estimator = overrides.estimator;
  if (!overrides.source.empty()) cfg.source = overrides.source;
  if (overrides.trials > 0) cfg.trials = overrides.trials;
  if (overrides.master_seed != 0) cfg.master_seed = overrides.master_seed;
  if (!overrides.out_path.empty()) cfg.out_path = overrides.out_path;
  for (const auto& [k, v] : overrides.params) cfg.params[k] = v;
  for (const std::string& kv : sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--set expects key=value");
    cfg.params[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (cfg.estimator.empty()) throw CLI::ValidationError("no estimator selected");
  if (cfg.source.empty()) throw CLI::ValidationError("no stream source selected");

  ExperimentResult res = run_experiment(cfg);
  std::string csv = res.csv();
  if (!cfg.out_path.empty()) {
    std::ofstream f(cfg.out_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + cfg.out_path);
    f << csv;
  } else {
    std::cout << csv;
  }
  if (cfg.estimator == "hh") {
    // Report the recovered set of the first trial as a sorted index list.
    for (uint64_t i : run_heavy_extraction(cfg, 0)) std::cout << i << ' ';
    std::cout << '\n';
  }
  std::cerr << "estimator=" << cfg.estimator << " trials=" << cfg.trials
            << " success_rate=" << res.success_rate << " floor=" << res.floor
            << (res.pass ? " PASS" : " FAIL") << "\n";
  return res.pass ? 0 : 1;
}

int cmd_gen(const std::string& kind, const std::string& out_path, uint64_t seed,
            const ExperimentConfig& params) {
  std::ofstream f(out_path);
  if (!f) throw std::runtime_error("cannot write " + out_path);
  if (kind == "coin") {
    CoinStreamSpec spec;
    spec.length = params.get_int("mlen", 1000000);
    spec.beta = params.get_num("beta", 0.0);
    std::string mode = params.get_str("mode", "plain");
    spec.mode = mode == "bounded" ? CoinMode::bounded_deletion
                : mode == "random_order" ? CoinMode::random_order
                                         : CoinMode::plain;
    write_stream(f, gen_coin_stream(spec, seed));
    return 0;
  }
  if (kind == "disj") {
    DisjInstance inst = gen_disj(params.get_int("n", 1 << 10),
                                 static_cast<int>(params.get_int("s", 8)),
                                 static_cast<int>(params.get_int("z", 0)), seed);
    TurnstileStream s;
    s.n = inst.n;
    auto y = inst.column_sums();
    int64_t max_abs = 1;
    for (uint64_t i = 0; i < inst.n; ++i) {
      if (y[i] == 0) continue;
      s.updates.push_back({i, y[i]});
      max_abs = std::max(max_abs, std::abs(y[i]));
    }
    s.M = max_abs;
    write_stream(f, s);
    return 0;
  }
  if (kind == "augdisj" || kind == "augindex" || kind == "pw11") {
    ExperimentConfig cfg = params;
    cfg.source = "gen:" + kind;
    write_stream(f, build_generated_stream(cfg, seed));
    return 0;
  }
  throw CLI::ValidationError("unknown --kind; expected coin, disj, augdisj, augindex or pw11");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coarse-sketch: approximation-ratio benchmarks for turnstile sketches"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run an experiment and emit CSV");
  std::string config_path, estimator, source, out_path, inner, l0_profile, mode;
  int trials = 0, passes = 1;
  uint64_t seed = 0;
  std::vector<std::string> sets;
  double fp_p = 0, eps = 0, lp_p = 0, alpha = 0, schatten_p = 0;
  std::vector<double> cascaded_pq;
  uint64_t hh_k = 0, n_param = 0, t_param = 0;
  run->add_option("--config", config_path, "key = value experiment file");
  run->add_option("--estimator", estimator, "estimator id");
  run->add_option("--source", source, "gen:<kind> or file:<path>");
  run->add_option("--trials", trials, "number of trials");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--out", out_path, "CSV output path");
  run->add_option("--set", sets, "extra key=value parameter")->take_all();
  run->add_option("--fp", fp_p, "estimate ||x||_p^p for p in (0,2]");
  run->add_option("--eps", eps, "target relative error");
  run->add_option("--passes", passes, "1 or 2 (with --fp)");
  run->add_option("--lp", lp_p, "estimate ||x||_p for p > 2");
  run->add_option("--alpha", alpha, "approximation factor");
  run->add_option("--inner", inner, "lp inner estimator: exact, psamp or ams");
  run->add_option("--hh", hh_k, "heavy hitters with this k");
  run->add_option("--schatten", schatten_p, "Schatten-p estimation");
  run->add_option("--cascaded", cascaded_pq, "cascaded norm: p q")->expected(2);
  run->add_option("--l0-profile", l0_profile, "paper, desk or desk16");
  run->add_option("--n", n_param, "dimension for generators");
  run->add_option("--t", t_param, "level count for l0_rough");

  // gen
  auto* gen = app.add_subcommand("gen", "write a hard-instance stream file");
  std::string kind, gen_out;
  uint64_t gen_seed = 1;
  uint64_t g_n = 0, g_k = 0, g_mlen = 0, g_s = 0, g_r = 0, g_t = 0, g_z = 0;
  double g_beta = 0.0;
  gen->add_option("--kind", kind, "coin, disj, augdisj, augindex or pw11")->required();
  gen->add_option("--out", gen_out, "output stream file")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--n", g_n, "dimension");
  gen->add_option("--k", g_k, "sparsity / heaviness parameter");
  gen->add_option("--mlen", g_mlen, "coin stream length");
  gen->add_option("--beta", g_beta, "coin bias");
  gen->add_option("--mode", mode, "coin mode: plain, bounded, random_order");
  gen->add_option("--s", g_s, "players");
  gen->add_option("--z", g_z, "plant the all-ones column (disj)");
  gen->add_option("--r", g_r, "layers");
  gen->add_option("--t", g_t, "augindex parameter t (divisible by 8)");

  // median-table
  auto* med = app.add_subcommand("median-table", "regenerate the p-stable median table");
  std::string med_out = std::string(COARSE_SOURCE_DIR) + "/data/pstable_medians.txt";
  uint64_t med_draws = 10000000, med_seed = 20240601;
  double med_grid = 0.01;
  int med_threads = 2;
  med->add_option("--out", med_out, "table path");
  med->add_option("--draws", med_draws, "draws per grid point");
  med->add_option("--grid", med_grid, "grid step over p in (0,2)");
  med->add_option("--seed", med_seed, "generator seed");
  med->add_option("--threads", med_threads, "worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ExperimentConfig overrides;
      overrides.estimator = estimator;
      overrides.source = source;
      overrides.trials = trials;
      overrides.master_seed = seed;
      overrides.out_path = out_path;
      if (fp_p > 0) {
        overrides.estimator = passes >= 2 ? "fp_twopass" : (fp_p == 2.0 ? "ams" : "pstable");
        overrides.params["p"] = std::to_string(fp_p);
      }
      if (lp_p > 0) {
        overrides.estimator = "lp_large";
        overrides.params["p"] = std::to_string(lp_p);
      }
      if (hh_k > 0) {
        overrides.estimator = "hh";
        overrides.params["k"] = std::to_string(hh_k);
      }
      if (schatten_p > 0) {
        overrides.estimator = "schatten";
        overrides.params["p"] = std::to_string(schatten_p);
      }
      if (cascaded_pq.size() == 2) {
        overrides.estimator = "cascaded";
        overrides.params["p"] = std::to_string(cascaded_pq[0]);
        overrides.params["q"] = std::to_string(cascaded_pq[1]);
      }
      if (eps > 0) overrides.params["eps"] = std::to_string(eps);
      if (alpha > 0) overrides.params["alpha"] = std::to_string(alpha);
      if (!inner.empty()) overrides.params["inner"] = inner;
      if (!l0_profile.empty()) overrides.params["l0_profile"] = l0_profile;
      if (n_param > 0) overrides.params["n"] = std::to_string(n_param);
      if (t_param > 0) overrides.params["t"] = std::to_string(t_param);
      return cmd_run(config_path, overrides, sets);
    }
    if (gen->parsed()) {
      ExperimentConfig params;
      if (g_n) params.params["n"] = std::to_string(g_n);
      if (g_k) params.params["k"] = std::to_string(g_k);
      if (g_mlen) params.params["mlen"] = std::to_string(g_mlen);
      if (g_beta != 0.0) params.params["beta"] = std::to_string(g_beta);
      if (!mode.empty()) params.params["mode"] = mode;
      if (g_s) params.params["s"] = std::to_string(g_s);
      if (g_r) params.params["r"] = std::to_string(g_r);
      if (g_t) params.params["t"] = std::to_string(g_t);
      if (g_z) params.params["z"] = std::to_string(g_z);
      return cmd_gen(kind, gen_out, gen_seed, params);
    }
    if (med->parsed()) {
      std::ofstream f(med_out);
      if (!f) throw std::runtime_error("cannot write " + med_out);
      PStableMedianTable::generate(f, med_draws, med_grid, med_seed, med_threads);
      std::cerr << "wrote " << med_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
