// Command-line front end: generate instances, run solvers, batch benchmarks,
// and summarize trace directories.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kaczmarz/harness.hpp"
#include "kaczmarz/kernels.hpp"
#include "kaczmarz/probgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path default_out_dir() {
  if (const char* env = std::getenv("KACZMARZ_OUT_DIR")) {
    if (*env != '\0') return fs::path(env);
  }
  return fs::current_path();
}

int terminal_exit_code(kaczmarz::Terminal t) {
  switch (t) {
    case kaczmarz::Terminal::converged: return 0;
    case kaczmarz::Terminal::max_iters: return 2;
    case kaczmarz::Terminal::diverged: return 3;
  }
  return 1;
}

struct SolveFlags {
  std::string instance;
  std::string algorithm = "rk";
  std::uint64_t seed = 0;
  std::string step_rule = "one_over_L";
  double step = 0.0;
  double mu = -1.0;
  double tol = 1e-7;
  std::int64_t check_interval = -1;
  std::uint64_t max_iters = 10'000'000;
  double apk_alpha_reg = 1.0;
  std::int64_t apk_refit_interval = -1;
  std::uint64_t apk_warmup_sweeps = 2;
  std::string apk_diag_dump;
  double ark_lambda = -1.0;
  std::uint64_t ark_k2_mult = 15;
  bool ark_normalize_est = false;
  double adagrad_zeta = 1e-8;
  double adagrad_lambda0 = 0.2;
  std::string trace_out;
};

kaczmarz::ExperimentConfig config_from_flags(const SolveFlags& f) {
  kaczmarz::ExperimentConfig cfg;
  cfg.algorithm = kaczmarz::algorithm_from_name(f.algorithm);
  cfg.seed = f.seed;
  cfg.step_rule = kaczmarz::step_rule_from_name(f.step_rule);
  cfg.explicit_step = f.step;
  if (f.step > 0.0) cfg.step_rule = kaczmarz::StepRule::explicit_value;
  if (f.mu >= 0.0) cfg.mu = f.mu;
  cfg.tol = f.tol;
  if (f.check_interval > 0) {
    cfg.check_interval = static_cast<std::size_t>(f.check_interval);
  }
  cfg.max_iters = f.max_iters;
  cfg.apk.alpha_reg = f.apk_alpha_reg;
  if (f.apk_refit_interval > 0) {
    cfg.apk.refit_interval = static_cast<std::size_t>(f.apk_refit_interval);
  }
  cfg.apk.warmup_sweeps = f.apk_warmup_sweeps;
  if (!f.apk_diag_dump.empty()) cfg.apk.diag_dump_path = f.apk_diag_dump;
  if (f.ark_lambda >= 0.0) cfg.ark.lambda = f.ark_lambda;
  cfg.ark.k2_multiplier = f.ark_k2_mult;
  cfg.ark.normalize_estimate = f.ark_normalize_est;
  cfg.adagrad.zeta = f.adagrad_zeta;
  cfg.adagrad.lambda0 = f.adagrad_lambda0;
  return cfg;
}

kaczmarz::ExperimentConfig config_from_json(const json& j) {
  kaczmarz::ExperimentConfig cfg;
  cfg.algorithm =
      kaczmarz::algorithm_from_name(j.at("algorithm").get<std::string>());
  cfg.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("step_rule")) {
    cfg.step_rule =
        kaczmarz::step_rule_from_name(j["step_rule"].get<std::string>());
  }
  if (j.contains("step")) {
    cfg.step_rule = kaczmarz::StepRule::explicit_value;
    cfg.explicit_step = j["step"].get<double>();
  }
  if (j.contains("mu")) cfg.mu = j["mu"].get<double>();
  cfg.tol = j.value("tol", 1e-7);
  if (j.contains("check_interval")) {
    cfg.check_interval = j["check_interval"].get<std::size_t>();
  }
  cfg.max_iters = j.value("max_iters", std::uint64_t{10'000'000});
  if (j.contains("apk")) {
    const auto& a = j["apk"];
    cfg.apk.alpha_reg = a.value("alpha_reg", 1.0);
    if (a.contains("refit_interval")) {
      cfg.apk.refit_interval = a["refit_interval"].get<std::size_t>();
    }
    cfg.apk.warmup_sweeps = a.value("warmup_sweeps", std::size_t{2});
    if (a.contains("diag_dump")) {
      cfg.apk.diag_dump_path = a["diag_dump"].get<std::string>();
    }
  }
  if (j.contains("ark")) {
    const auto& a = j["ark"];
    if (a.contains("lambda")) cfg.ark.lambda = a["lambda"].get<double>();
    cfg.ark.k2_multiplier = a.value("k2_multiplier", std::size_t{15});
    cfg.ark.normalize_estimate = a.value("normalize", false);
  }
  if (j.contains("adagrad")) {
    const auto& a = j["adagrad"];
    cfg.adagrad.zeta = a.value("zeta", 1e-8);
    cfg.adagrad.lambda0 = a.value("lambda0", 0.2);
  }
  return cfg;
}

kaczmarz::ProblemInstance instance_from_spec(const json& spec) {
  const auto family =
      kaczmarz::family_from_name(spec.at("family").get<std::string>());
  const auto n = spec.at("n").get<std::size_t>();
  const auto m = family == kaczmarz::Family::gaussian
                     ? spec.at("m").get<std::size_t>()
                     : spec.value("m", n);
  std::optional<double> alpha;
  if (spec.contains("alpha")) alpha = spec["alpha"].get<double>();
  return kaczmarz::make_instance(family, m, n, alpha,
                                 spec.value("seed", std::uint64_t{0}));
}

int cmd_generate(const std::string& family, std::size_t m, std::size_t n,
                 double alpha, std::uint64_t seed, std::string out) {
  if (out.empty()) out = (default_out_dir() / "instance").string();
  const auto fam = kaczmarz::family_from_name(family);
  const auto inst = kaczmarz::make_instance(
      fam, m, n,
      fam == kaczmarz::Family::power_spectrum ? std::optional<double>(alpha)
                                              : std::nullopt,
      seed);
  kaczmarz::save_instance(inst, out);
  std::cout << "wrote " << out << " (family=" << family << " m=" << inst.a.rows()
            << " n=" << inst.a.cols() << " kappa_frob=" << inst.kappa_frob
            << ")\n";
  return 0;
}

int cmd_solve(const SolveFlags& flags) {
  const auto inst = kaczmarz::load_instance(flags.instance);
  const auto cfg = config_from_flags(flags);
  const auto trace = kaczmarz::run(inst, cfg);
  fs::path out = flags.trace_out.empty()
                     ? default_out_dir() /
                           (std::string(kaczmarz::algorithm_name(cfg.algorithm)) +
                            "_trace.csv")
                     : fs::path(flags.trace_out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  kaczmarz::emit_trace(trace, out);
  std::cout << kaczmarz::algorithm_name(cfg.algorithm) << ": "
            << kaczmarz::terminal_name(trace.terminal) << " after "
            << trace.total_iterations << " iterations, "
            << trace.wall_seconds << " s";
  if (!trace.samples.empty()) {
    std::cout << ", final residual " << trace.samples.back().rel_residual;
  }
  std::cout << " -> " << out.string() << "\n";
  return terminal_exit_code(trace.terminal);
}

int cmd_bench(const std::string& config_path, std::string out_dir) {
  std::ifstream in(config_path);
  if (!in) throw kaczmarz::IoError("cannot read " + config_path);
  const json cfg_json = json::parse(in);
  if (out_dir.empty()) {
    out_dir = cfg_json.value("out_dir",
                             (default_out_dir() / "traces").string());
  }
  fs::create_directories(out_dir);

  // Instances are cached so many runs can share one generated system.
  std::map<std::string, std::shared_ptr<const kaczmarz::ProblemInstance>> cache;
  auto get_instance = [&](const json& ref) {
    const std::string key = ref.dump();
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto inst = std::make_shared<const kaczmarz::ProblemInstance>(
        ref.is_string()
            ? kaczmarz::load_instance(ref.get<std::string>())
            : instance_from_spec(ref));
    cache.emplace(key, inst);
    return inst;
  };

  std::size_t index = 0;
  for (const auto& run_json : cfg_json.at("runs")) {
    const auto inst = get_instance(run_json.at("instance"));
    const auto cfg = config_from_json(run_json);
    const std::string name =
        run_json.value("name", std::string("run") + std::to_string(index) +
                                   "-" + kaczmarz::algorithm_name(cfg.algorithm));
    const auto trace = kaczmarz::run(*inst, cfg);
    const fs::path csv = fs::path(out_dir) / (name + ".csv");
    kaczmarz::emit_trace(trace, csv);
    std::cout << name << ": " << kaczmarz::terminal_name(trace.terminal)
              << " after " << trace.total_iterations << " iterations ("
              << trace.wall_seconds << " s)\n";
    ++index;
  }
  std::cout << "traces in " << out_dir << "\n";
  return 0;
}

int cmd_compare(const std::string& trace_dir, const std::string& out_file) {
  const auto rows = kaczmarz::summarize_traces(trace_dir);
  std::cout << kaczmarz::render_summary_text(rows);
  if (!out_file.empty()) {
    std::ofstream out(out_file);
    if (!out) throw kaczmarz::IoError("cannot write " + out_file);
    out << kaczmarz::render_summary_csv(rows);
    std::cout << "summary csv -> " << out_file << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Row-action linear solver benchmark"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a problem instance");
  std::string g_family = "gaussian";
  std::size_t g_m = 500, g_n = 400;
  double g_alpha = 0.75;
  std::uint64_t g_seed = 0;
  std::string g_out;
  gen->add_option("--family", g_family, "gaussian | power_spectrum");
  gen->add_option("--m", g_m, "rows (gaussian only; power_spectrum is square)");
  gen->add_option("--n", g_n, "columns");
  gen->add_option("--alpha", g_alpha, "spectrum exponent (power_spectrum)");
  gen->add_option("--seed", g_seed, "generator seed");
  gen->add_option("--out", g_out, "output directory (default $KACZMARZ_OUT_DIR/instance)");

  // solve
  auto* solve = app.add_subcommand("solve", "Run one solver on an instance");
  SolveFlags sf;
  solve->add_option("--instance", sf.instance, "instance directory")->required();
  solve->add_option("--algorithm", sf.algorithm,
                    "rk | apk | sag | sag_rk | sag_rk_relaxed | ark | adagrad_rk");
  solve->add_option("--seed", sf.seed, "run seed");
  solve->add_option("--step-rule", sf.step_rule,
                    "one_over_L | one_over_2mL | one_over_16L | "
                    "two_over_L_plus_m_mu | explicit");
  solve->add_option("--step", sf.step, "explicit step size (implies explicit rule)");
  solve->add_option("--mu", sf.mu, "strong convexity parameter for two_over_L_plus_m_mu");
  solve->add_option("--tol", sf.tol, "relative residual target");
  solve->add_option("--check-interval", sf.check_interval,
                    "iterations between residual checks (default 10m)");
  solve->add_option("--max-iters", sf.max_iters, "iteration budget");
  solve->add_option("--apk-alpha-reg", sf.apk_alpha_reg, "fit regularization weight");
  solve->add_option("--apk-refit-interval", sf.apk_refit_interval,
                    "iterations between refits (default 10m)");
  solve->add_option("--apk-warmup-sweeps", sf.apk_warmup_sweeps,
                    "cyclic warmup sweeps (>= 2)");
  solve->add_option("--apk-diag-dump", sf.apk_diag_dump,
                    "append one JSON record per refit to this file");
  solve->add_option("--ark-lambda", sf.ark_lambda,
                    "acceleration hyperparameter (omit to estimate)");
  solve->add_option("--ark-k2-mult", sf.ark_k2_mult, "burn-in length multiplier");
  solve->add_flag("--ark-normalize-est", sf.ark_normalize_est,
                  "estimate on a copy scaled so ||A||_F^2 = m");
  solve->add_option("--adagrad-zeta", sf.adagrad_zeta, "diagonal damping");
  solve->add_option("--adagrad-lambda0", sf.adagrad_lambda0, "decay term");
  solve->add_option("--trace-out", sf.trace_out, "trace CSV path");

  // bench
  auto* bench = app.add_subcommand("bench", "Run a JSON list of configurations");
  std::string b_config, b_out;
  bench->add_option("--config", b_config, "bench config JSON")->required();
  bench->add_option("--out", b_out, "trace output directory");

  // compare
  auto* comp = app.add_subcommand("compare", "Summarize a trace directory");
  std::string c_dir, c_out;
  comp->add_option("--traces", c_dir, "directory of trace CSV/meta pairs")->required();
  comp->add_option("--out", c_out, "also write the summary as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_generate(g_family, g_m, g_n, g_alpha, g_seed, g_out);
    if (solve->parsed()) return cmd_solve(sf);
    if (bench->parsed()) return cmd_bench(b_config, b_out);
    if (comp->parsed()) return cmd_compare(c_dir, c_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
