#include <doctest.h>

#include <fstream>
#include <sstream>

#include "coarse/bench.hpp"
#include "coarse/cascaded.hpp"
#include "coarse/l0.hpp"
#include "coarse/lp.hpp"

using namespace coarse;

TEST_SUITE_BEGIN("bench");

TEST_CASE("config parsing and round trip") {
  std::stringstream in;
  in << "# comment\n"
     << "estimator = l0_rough\n"
     << "source = gen:planted_l0\n"
     << "trials = 5\n"
     << "seed = 42\n"
     << "n = 1024\n"
     << "t = 2\n";
  ExperimentConfig cfg = ExperimentConfig::parse(in);
  CHECK(cfg.estimator == "l0_rough");
  CHECK(cfg.trials == 5);
  CHECK(cfg.master_seed == 42);
  CHECK(cfg.get_int("n", 0) == 1024);
  std::stringstream out;
  cfg.serialize(out);
  ExperimentConfig back = ExperimentConfig::parse(out);
  CHECK(back.estimator == cfg.estimator);
  CHECK(back.params == cfg.params);
}

TEST_CASE("zero trials emit a header-only CSV") {
  ExperimentConfig cfg;
  cfg.estimator = "ams";
  cfg.source = "gen:random_vec";
  cfg.trials = 0;
  ExperimentResult res = run_experiment(cfg);
  CHECK(res.csv() ==
        "trial,seed,exact,estimate,ratio,success,counter_bits,seed_bits,total_bits\n");
}

TEST_CASE("identical config and seed give byte-identical CSV") {
  ExperimentConfig cfg;
  cfg.estimator = "ams";
  cfg.source = "gen:random_vec";
  cfg.trials = 8;
  cfg.master_seed = 13;
  cfg.params["n"] = "256";
  cfg.params["m"] = "64";
  cfg.params["eps"] = "0.3";
  ExperimentResult a = run_experiment(cfg);
  ExperimentResult b = run_experiment(cfg);
  CHECK(a.csv() == b.csv());
  CHECK(a.rows.size() == 8);
}

TEST_CASE("unknown estimator names the valid ids") {
  ExperimentConfig cfg;
  cfg.estimator = "nope";
  cfg.source = "gen:random_vec";
  cfg.trials = 1;
  CHECK_THROWS_WITH_AS(run_experiment(cfg),
                       doctest::Contains("valid ids"), std::invalid_argument);
}

TEST_CASE("l0 rough experiment meets its floor") {
  ExperimentConfig cfg;
  cfg.estimator = "l0_rough";
  cfg.source = "gen:planted_l0";
  cfg.trials = 40;
  cfg.master_seed = 7;
  cfg.params["n"] = "65536";
  cfg.params["t"] = "4";
  cfg.params["l0"] = "4096";
  cfg.params["l0_profile"] = "desk16";
  ExperimentResult res = run_experiment(cfg);
  CHECK(res.success_rate >= 0.85);
  CHECK(res.pass);
}

TEST_CASE("space scaling laws") {
  // Rough sketch bits grow linearly in t (same seed fixes the prime).
  RoughL0Sketch t4(1 << 16, 4, 1000, 9, L0Profile::desk());
  RoughL0Sketch t8(1 << 16, 8, 1000, 9, L0Profile::desk());
  CHECK(t8.space().counter_bits == 2 * t4.space().counter_bits);
  uint64_t fixed = t4.space().total_bits() - t4.space().counter_bits;
  CHECK(t8.space().total_bits() - t8.space().counter_bits == fixed);

  // p-stable bits scale as 1/eps^2 exactly at the word level.
  PStableSketch e1(256, 1.0, 0.1, 10, 3);
  PStableSketch e2(256, 1.0, 0.2, 10, 3);
  PStableSketch e4(256, 1.0, 0.4, 10, 3);
  CHECK(e1.space().counter_bits == 4 * e2.space().counter_bits);
  CHECK(e2.space().counter_bits == 4 * e4.space().counter_bits);

  // Precision-sampling width follows n^(1-2/q), i.e. alpha^-2 under the
  // norm reduction.
  uint64_t w2 = FqPrecisionSketch::default_width(1 << 16, 8.0 / 3.0);
  uint64_t w4 = FqPrecisionSketch::default_width(1 << 16, 16.0 / 7.0);
  // q values chosen so n^(1-2/q) is 16 and 4: a factor-4 (=alpha^2) step.
  CHECK(static_cast<double>(w2) / w4 == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("stream files can drive an experiment") {
  std::string path = "/tmp/coarse_bench_stream.txt";
  {
    TurnstileStream s{8, 4, {{0, 3}, {1, 4}}};
    std::ofstream f(path);
    write_stream(f, s);
  }
  ExperimentConfig cfg;
  cfg.estimator = "ams";
  cfg.source = "file:" + path;
  cfg.trials = 3;
  cfg.params["eps"] = "0.3";
  ExperimentResult res = run_experiment(cfg);
  for (const TrialRow& r : res.rows) CHECK(r.exact == doctest::Approx(25.0));
  std::remove(path.c_str());
}

TEST_SUITE_END();
