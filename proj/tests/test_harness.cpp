#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "kaczmarz/harness.hpp"
#include "kaczmarz/kernels.hpp"
#include "kaczmarz/precond.hpp"
#include "kaczmarz/sampler.hpp"
#include "kaczmarz/solvers.hpp"
#include "kaczmarz/svd.hpp"

using namespace kaczmarz;

namespace {

std::filesystem::path fresh_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("kaczmarz_harness_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("name round-trips") {
  for (const char* name : {"rk", "apk", "sag", "sag_rk", "sag_rk_relaxed",
                           "ark", "adagrad_rk"}) {
    CHECK(algorithm_name(algorithm_from_name(name)) == std::string(name));
  }
  CHECK_THROWS_AS(algorithm_from_name("sor"), Error);
  for (const char* name : {"one_over_L", "one_over_2mL", "one_over_16L",
                           "two_over_L_plus_m_mu", "explicit"}) {
    CHECK(step_rule_name(step_rule_from_name(name)) == std::string(name));
  }
  CHECK_THROWS_AS(step_rule_from_name("adaptive"), Error);
}

TEST_CASE("rk run converges and is deterministic") {
  const ProblemInstance inst =
      make_instance(Family::gaussian, 60, 30, std::nullopt, 7);
  ExperimentConfig cfg;
  cfg.algorithm = Algorithm::rk;
  cfg.seed = 11;

  const Trace t1 = run(inst, cfg);
  CHECK(t1.terminal == Terminal::converged);
  REQUIRE_FALSE(t1.samples.empty());
  CHECK(t1.samples.back().rel_residual < cfg.tol);
  CHECK(t1.total_iterations == t1.samples.back().iteration);
  // default check interval is 10m
  CHECK(t1.samples.front().iteration == 600);
  for (std::size_t i = 1; i < t1.samples.size(); ++i) {
    CHECK(t1.samples[i].iteration > t1.samples[i - 1].iteration);
  }

  const Trace t2 = run(inst, cfg);
  REQUIRE(t1.samples.size() == t2.samples.size());
  for (std::size_t i = 0; i < t1.samples.size(); ++i) {
    CHECK(t1.samples[i].iteration == t2.samples[i].iteration);
    CHECK(t1.samples[i].rel_residual == t2.samples[i].rel_residual);
  }

  ExperimentConfig other = cfg;
  other.seed = 12;
  const Trace t3 = run(inst, other);
  CHECK((t3.total_iterations != t1.total_iterations ||
         t3.samples.back().rel_residual != t1.samples.back().rel_residual));
}

TEST_CASE("starting at the solution converges at the first check") {
  const ProblemInstance inst =
      make_instance(Family::gaussian, 40, 20, std::nullopt, 9);
  ExperimentConfig cfg;
  cfg.algorithm = Algorithm::rk;
  cfg.seed = 1;
  const Trace t = run_with_start(inst, cfg, inst.x_true);
  CHECK(t.terminal == Terminal::converged);
  CHECK(t.total_iterations == 400);  // one check interval of 10m
  REQUIRE(t.samples.size() == 1);
  CHECK(t.samples.front().rel_residual <= 1e-12);
}

TEST_CASE("config validation") {
  const ProblemInstance inst =
      make_instance(Family::gaussian, 10, 5, std::nullopt, 3);
  ExperimentConfig cfg;
  cfg.tol = 0.0;
  CHECK_THROWS_AS(run(inst, cfg), Error);
  cfg = {};
  cfg.check_interval = 100;
  cfg.max_iters = 50;
  CHECK_THROWS_AS(run(inst, cfg), Error);
  cfg = {};
  cfg.step_rule = StepRule::explicit_value;
  cfg.algorithm = Algorithm::sag;
  cfg.explicit_step = 0.0;
  CHECK_THROWS_AS(run(inst, cfg), Error);
}

TEST_CASE("all algorithms converge on a small well-conditioned instance") {
  const ProblemInstance inst =
      make_instance(Family::gaussian, 50, 20, std::nullopt, 21);
  const SvdResult dec = svd(inst.a);
  const double smin = dec.sigma.back();
  for (Algorithm alg : {Algorithm::rk, Algorithm::apk, Algorithm::sag,
                        Algorithm::sag_rk, Algorithm::sag_rk_relaxed,
                        Algorithm::ark, Algorithm::adagrad_rk}) {
    CAPTURE(algorithm_name(alg));
    ExperimentConfig cfg;
    cfg.algorithm = alg;
    cfg.seed = 5;
    cfg.max_iters = 2'000'000;
    cfg.ark.lambda = smin * smin;  // exact lambda_min for the accelerated run
    const Trace t = run(inst, cfg);
    CHECK(t.terminal == Terminal::converged);
    CHECK(t.samples.back().rel_residual < cfg.tol);
    if (alg == Algorithm::adagrad_rk) {
      CHECK(t.config_echo.at("adagrad").at("lambda0").get<double>() == 0.2);
      CHECK(t.config_echo.at("adagrad").at("zeta").get<double>() == 1e-8);
    }
  }
}

TEST_CASE("step rules resolve to the documented sizes") {
  const ProblemInstance inst =
      make_instance(Family::gaussian, 30, 10, std::nullopt, 33);
  const double big_l = lipschitz_constant(inst.a);
  ExperimentConfig cfg;
  cfg.algorithm = Algorithm::sag_rk;
  cfg.seed = 2;
  cfg.max_iters = 600;
  cfg.check_interval = 300;

  cfg.step_rule = StepRule::one_over_L;
  CHECK(run(inst, cfg).config_echo.at("step").get<double>() ==
        doctest::Approx(1.0 / big_l));
  cfg.step_rule = StepRule::one_over_2mL;
  CHECK(run(inst, cfg).config_echo.at("step").get<double>() ==
        doctest::Approx(1.0 / (60.0 * big_l)));
  cfg.step_rule = StepRule::one_over_16L;
  CHECK(run(inst, cfg).config_echo.at("step").get<double>() ==
        doctest::Approx(1.0 / (16.0 * big_l)));
  cfg.step_rule = StepRule::two_over_L_plus_m_mu;
  const SvdResult dec = svd(inst.a);
  const double mu = dec.sigma.back() * dec.sigma.back() / 30.0;
  CHECK(run(inst, cfg).config_echo.at("step").get<double>() ==
        doctest::Approx(2.0 / (big_l + 30.0 * mu)).epsilon(1e-9));
  cfg.mu = 2.0 * mu;
  CHECK(run(inst, cfg).config_echo.at("step").get<double>() ==
        doctest::Approx(2.0 / (big_l + 60.0 * mu)).epsilon(1e-9));
  cfg.mu.reset();
  cfg.step_rule = StepRule::explicit_value;
  cfg.explicit_step = 0.001;
  CHECK(run(inst, cfg).config_echo.at("step").get<double>() == 0.001);
}

TEST_CASE("apk run refits on schedule and stays positive") {
  const ProblemInstance inst =
      make_instance(Family::gaussian, 40, 16, std::nullopt, 41);
  ExperimentConfig cfg;
  cfg.algorithm = Algorithm::apk;
  cfg.seed = 6;
  cfg.max_iters = 100'000;
  const Trace t = run(inst, cfg);
  CHECK(t.terminal == Terminal::converged);
  REQUIRE_FALSE(t.refit_events.empty());
  // first fit lands right after the two warmup sweeps
  CHECK(t.refit_events.front().iteration == 2 * 40);
  for (const RefitEvent& e : t.refit_events) {
    CHECK(e.s_min >= kPrecondClampLo);
    CHECK(std::isfinite(e.objective));
  }
  // determinism including the refit machinery
  const Trace t2 = run(inst, cfg);
  REQUIRE(t.samples.size() == t2.samples.size());
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    CHECK(t.samples[i].rel_residual == t2.samples[i].rel_residual);
  }
  REQUIRE(t.refit_events.size() == t2.refit_events.size());
  for (std::size_t i = 0; i < t.refit_events.size(); ++i) {
    CHECK(t.refit_events[i].iteration == t2.refit_events[i].iteration);
    CHECK(t.refit_events[i].s_min == t2.refit_events[i].s_min);
  }
}

TEST_CASE("apk diagnostic dump writes one record per refit") {
  const ProblemInstance inst =
      make_instance(Family::gaussian, 20, 8, std::nullopt, 43);
  const auto dir = fresh_dir("apkdump");
  const auto dump = dir / "refits.jsonl";
  ExperimentConfig cfg;
  cfg.algorithm = Algorithm::apk;
  cfg.seed = 3;
  cfg.max_iters = 10'000;
  cfg.apk.diag_dump_path = dump.string();
  const Trace t = run(inst, cfg);
  std::ifstream in(dump);
  REQUIRE(in.good());
  std::size_t lines = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    CHECK(rec.at("alpha_reg").get<double>() == 1.0);
    CHECK(rec.at("s").size() == 8);
    CHECK(rec.contains("objective_value"));
    ++lines;
  }
  CHECK(lines == t.refit_events.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("lambda estimator") {
  SUBCASE("closed form clamps on no progress") {
    CHECK(lambda_from_residual_ratio(100.0, 1.0, 10).no_progress);
    CHECK(lambda_from_residual_ratio(100.0, 1.0, 10).value == 0.0);
    CHECK(lambda_from_residual_ratio(100.0, 1.7, 10).no_progress);
    const auto est = lambda_from_residual_ratio(100.0, 0.5, 10);
    CHECK_FALSE(est.no_progress);
    CHECK(est.value ==
          doctest::Approx(100.0 * (1.0 - std::pow(0.5, 0.05))).epsilon(1e-14));
  }
  SUBCASE("ballpark of the smallest eigenvalue on a gaussian system") {
    const ProblemInstance inst =
        make_instance(Family::gaussian, 100, 50, std::nullopt, 51);
    const SvdResult dec = svd(inst.a);
    const double truth = dec.sigma.back() * dec.sigma.back();
    const auto est =
        estimate_lambda_min(inst.a, inst.b, 15 * inst.a.rows(), 99);
    CHECK_FALSE(est.no_progress);
    CHECK(est.value >= truth / 10.0);
    CHECK(est.value <= truth * 10.0);
  }
  SUBCASE("normalized estimate returns the original scale") {
    const ProblemInstance inst =
        make_instance(Family::gaussian, 60, 30, std::nullopt, 53);
    const auto plain =
        estimate_lambda_min(inst.a, inst.b, 15 * inst.a.rows(), 7, false);
    const auto normalized =
        estimate_lambda_min(inst.a, inst.b, 15 * inst.a.rows(), 7, true);
    CHECK(normalized.value == doctest::Approx(plain.value).epsilon(1e-12));
  }
  SUBCASE("window validation") {
    const ProblemInstance inst =
        make_instance(Family::gaussian, 10, 4, std::nullopt, 55);
    CHECK_THROWS_AS(estimate_lambda_min(inst.a, inst.b, 1, 1), BadShapeError);
  }
}

TEST_CASE("ark with estimated lambda accounts for its burn-in") {
  const ProblemInstance inst =
      make_instance(Family::gaussian, 300, 150, std::nullopt, 61);
  ExperimentConfig cfg;
  cfg.algorithm = Algorithm::ark;
  cfg.seed = 13;
  cfg.max_iters = 3'000'000;
  const Trace t = run(inst, cfg);
  REQUIRE(t.ark_lambda_used.has_value());
  CHECK(*t.ark_lambda_used >= 0.0);
  CHECK(t.ark_burn_in_seconds > 0.0);
  CHECK(t.wall_seconds >= t.ark_burn_in_seconds);

  // The burn-in is a bare k2-iteration rk run, so the whole trace cannot be
  // cheaper than that run measured on its own (generous slack for timer
  // noise).
  const std::size_t k2 = 15 * inst.a.rows();
  RkState st{Vector(inst.a.cols(), 0.0)};
  RowSampler rows(inst.a, 1234);
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k <= k2; ++k) rk_step(st, inst.a, inst.b, rows);
  const double bare =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  CHECK(t.wall_seconds >= 0.25 * bare);
}

TEST_CASE("divergence guard trips on an exploding run") {
  const ProblemInstance inst =
      make_instance(Family::gaussian, 30, 12, std::nullopt, 63);
  ExperimentConfig cfg;
  cfg.algorithm = Algorithm::sag;
  cfg.seed = 4;
  cfg.step_rule = StepRule::explicit_value;
  cfg.explicit_step = 1e3;  // far beyond 1/L: the iteration explodes
  cfg.check_interval = 30;
  cfg.max_iters = 1'000'000;
  const Trace t = run(inst, cfg);
  CHECK(t.terminal == Terminal::diverged);
}

TEST_CASE("trace files") {
  const auto dir = fresh_dir("traces");

  SUBCASE("empty sample list emits a header-only csv") {
    Trace t;
    t.config_echo = {{"algorithm", "rk"}};
    emit_trace(t, dir / "empty.csv");
    std::ifstream in(dir / "empty.csv");
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "iteration,rel_residual,elapsed_s");
    CHECK_FALSE(std::getline(in, line));
    CHECK(read_trace_samples(dir / "empty.csv").empty());
  }

  SUBCASE("samples round-trip bit-exactly") {
    Trace t;
    t.config_echo = {{"algorithm", "rk"}};
    t.samples = {{600, 0.12345678901234567, 0.25},
                 {1200, 3.0e-8, 0.5},
                 {1800, 1.0 / 3.0, 0.75}};
    t.terminal = Terminal::converged;
    t.total_iterations = 1800;
    emit_trace(t, dir / "rt.csv");
    const auto back = read_trace_samples(dir / "rt.csv");
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back[i].iteration == t.samples[i].iteration);
      CHECK(back[i].rel_residual == t.samples[i].rel_residual);
      CHECK(back[i].elapsed_s == t.samples[i].elapsed_s);
    }
  }

  SUBCASE("summaries order by wall seconds") {
    for (int i = 0; i < 3; ++i) {
      Trace t;
      t.config_echo = {{"algorithm", i == 0 ? "rk" : (i == 1 ? "sag" : "apk")}};
      t.terminal = Terminal::converged;
      t.total_iterations = 100 * (i + 1);
      t.wall_seconds = 3.0 - i;  // reverse order on purpose
      t.samples = {{100, 1e-8, 0.1}};
      emit_trace(t, dir / ("t" + std::to_string(i) + ".csv"));
    }
    const auto rows = summarize_traces(dir);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].algorithm == "apk");
    CHECK(rows[1].algorithm == "sag");
    CHECK(rows[2].algorithm == "rk");
    CHECK(rows[0].wall_s <= rows[1].wall_s);
    CHECK(rows[1].wall_s <= rows[2].wall_s);

    const std::string csv = render_summary_csv(rows);
    CHECK(csv.starts_with("algorithm,iterations,wall_s,terminal\n"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    const std::string text = render_summary_text(rows);
    CHECK(text.find("apk") != std::string::npos);
  }

  std::filesystem::remove_all(dir);
}

TEST_CASE("rk solves the overdetermined 500x400 gaussian case") {
  const ProblemInstance inst =
      make_instance(Family::gaussian, 500, 400, std::nullopt, 77);
  ExperimentConfig cfg;
  cfg.algorithm = Algorithm::rk;
  cfg.seed = 1;
  const Trace t = run(inst, cfg);
  CHECK(t.terminal == Terminal::converged);
  CHECK(t.total_iterations < cfg.max_iters);
  CHECK(t.samples.back().rel_residual < 1e-7);
}

TEST_CASE("gradient table drift control keeps long sag runs finite") {
  const ProblemInstance inst =
      make_instance(Family::power_spectrum, 50, 50, 0.9, 71);
  ExperimentConfig cfg;
  cfg.algorithm = Algorithm::sag_rk;
  cfg.seed = 8;
  cfg.max_iters = 250'000;  // crosses the 1e5 refresh boundary twice
  cfg.tol = 1e-12;
  const Trace t = run(inst, cfg);
  CHECK((t.terminal == Terminal::converged || t.terminal == Terminal::max_iters));
  for (const auto& s : t.samples) {
    CHECK(std::isfinite(s.rel_residual));
    CHECK(s.rel_residual >= 0.0);
  }
}
