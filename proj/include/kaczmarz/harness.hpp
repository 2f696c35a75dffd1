#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kaczmarz/dense.hpp"
#include "kaczmarz/probgen.hpp"

// Experiment orchestration: run any solver on any instance under the stopping
// rule (residual checked every check_interval iterations against tol), with
// the preconditioner refit schedule and the burn-in eigenvalue estimate
// handled here. Deterministic given (config, seed): residuals are bit-equal
// across repeated runs; elapsed times are not part of that contract.
namespace kaczmarz {

enum class Algorithm { rk, apk, sag, sag_rk, sag_rk_relaxed, ark, adagrad_rk };
const char* algorithm_name(Algorithm alg);
Algorithm algorithm_from_name(const std::string& name);

enum class StepRule {
  one_over_L,
  one_over_2mL,
  one_over_16L,
  two_over_L_plus_m_mu,
  explicit_value,
};
const char* step_rule_name(StepRule rule);
StepRule step_rule_from_name(const std::string& name);

struct ApkConfig {
  double alpha_reg = 1.0;
  std::optional<std::size_t> refit_interval;  // default 10m
  std::size_t warmup_sweeps = 2;              // last two feed the fit
  std::optional<std::string> diag_dump_path;  // JSON lines, one per refit
};

struct ArkConfig {
  std::optional<double> lambda;  // absent: estimate via the burn-in heuristic
  std::size_t k2_multiplier = 15;
  bool normalize_estimate = false;
};

struct AdaGradConfig {
  double zeta = 1e-8;
  double lambda0 = 0.2;
};

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::rk;
  std::uint64_t seed = 0;
  StepRule step_rule = StepRule::one_over_L;
  double explicit_step = 0.0;        // used with StepRule::explicit_value
  std::optional<double> mu;          // for 2/(L+m*mu); default lambda_min/m
  double tol = 1e-7;
  std::optional<std::size_t> check_interval;  // default 10m
  std::size_t max_iters = 10'000'000;
  ApkConfig apk;
  ArkConfig ark;
  AdaGradConfig adagrad;
};

struct TraceSample {
  std::size_t iteration;
  double rel_residual;
  double elapsed_s;
};

enum class Terminal { converged, max_iters, diverged };
const char* terminal_name(Terminal t);

struct RefitEvent {
  std::size_t iteration;
  double s_min;
  double objective;
};

struct Trace {
  std::vector<TraceSample> samples;
  Terminal terminal = Terminal::max_iters;
  std::size_t total_iterations = 0;
  double wall_seconds = 0.0;  // includes any burn-in time
  std::vector<RefitEvent> refit_events;
  nlohmann::json config_echo;
  std::optional<double> ark_lambda_used;
  bool ark_estimate_no_progress = false;
  double ark_burn_in_seconds = 0.0;
};

// Runs from x0 = 0.
Trace run(const ProblemInstance& inst, const ExperimentConfig& cfg);
// Test hook: run from an explicit starting iterate.
Trace run_with_start(const ProblemInstance& inst, const ExperimentConfig& cfg,
                     Vector x0);

struct LambdaEstimate {
  double value = 0.0;       // >= 0, in the scale of the given system
  bool no_progress = false; // residual ratio >= 1; value clamped to 0
};

// Burn-in heuristic for the smallest eigenvalue of A'A: run plain randomized
// Kaczmarz for k2 iterations, record the iterates after steps k1+1 and k2+1
// (k1 = max(1, k2 - 10m)), and infer the eigenvalue from the residual decay
//   ||A||_F^2 * (1 - (||A x_{k2}-b|| / ||A x_{k1}-b||)^(0.5/(k2-k1))).
// With normalize set, the run happens on a copy scaled so ||A||_F^2 = m; the
// returned value is converted back to the original system's scale.
LambdaEstimate estimate_lambda_min(const DenseMatrix& a, const Vector& b,
                                   std::size_t k2, std::uint64_t seed,
                                   bool normalize = false);

// The closed-form part of the estimator: a ratio >= 1 means no progress and
// clamps the value to zero with the flag set.
LambdaEstimate lambda_from_residual_ratio(double frob_sq, double ratio,
                                          std::size_t dk);

// Writes samples as CSV (header: iteration,rel_residual,elapsed_s) plus a
// sidecar <stem>.meta.json with the terminal state, totals, refit events and
// the config echo.
void emit_trace(const Trace& t, const std::filesystem::path& csv_path);
std::vector<TraceSample> read_trace_samples(const std::filesystem::path& csv_path);

struct SummaryRow {
  std::string name;
  std::string algorithm;
  std::size_t iterations = 0;
  double wall_s = 0.0;
  std::string terminal;
};

// One row per trace found in dir (by *.meta.json), ordered by wall_s.
std::vector<SummaryRow> summarize_traces(const std::filesystem::path& dir);
std::string render_summary_csv(const std::vector<SummaryRow>& rows);
std::string render_summary_text(const std::vector<SummaryRow>& rows);

}  // namespace kaczmarz
