#include "kaczmarz/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

#include "kaczmarz/kernels.hpp"
#include "kaczmarz/matrix_market.hpp"
#include "kaczmarz/precond.hpp"
#include "kaczmarz/rng.hpp"
#include "kaczmarz/sampler.hpp"
#include "kaczmarz/solvers.hpp"
#include "kaczmarz/svd.hpp"

namespace kaczmarz {

namespace {

constexpr double kDivergenceGuard = 1e10;
constexpr std::size_t kTableRefreshInterval = 100'000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

const char* algorithm_name(Algorithm alg) {
  switch (alg) {
    case Algorithm::rk: return "rk";
    case Algorithm::apk: return "apk";
    case Algorithm::sag: return "sag";
    case Algorithm::sag_rk: return "sag_rk";
    case Algorithm::sag_rk_relaxed: return "sag_rk_relaxed";
    case Algorithm::ark: return "ark";
    case Algorithm::adagrad_rk: return "adagrad_rk";
  }
  return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
  for (Algorithm alg :
       {Algorithm::rk, Algorithm::apk, Algorithm::sag, Algorithm::sag_rk,
        Algorithm::sag_rk_relaxed, Algorithm::ark, Algorithm::adagrad_rk}) {
    if (name == algorithm_name(alg)) return alg;
  }
  throw Error("unknown algorithm: " + name);
}

const char* step_rule_name(StepRule rule) {
  switch (rule) {
    case StepRule::one_over_L: return "one_over_L";
    case StepRule::one_over_2mL: return "one_over_2mL";
    case StepRule::one_over_16L: return "one_over_16L";
    case StepRule::two_over_L_plus_m_mu: return "two_over_L_plus_m_mu";
    case StepRule::explicit_value: return "explicit";
  }
  return "?";
}

StepRule step_rule_from_name(const std::string& name) {
  for (StepRule r : {StepRule::one_over_L, StepRule::one_over_2mL,
                     StepRule::one_over_16L, StepRule::two_over_L_plus_m_mu,
                     StepRule::explicit_value}) {
    if (name == step_rule_name(r)) return r;
  }
  throw Error("unknown step rule: " + name);
}

const char* terminal_name(Terminal t) {
  switch (t) {
    case Terminal::converged: return "converged";
    case Terminal::max_iters: return "max_iters";
    case Terminal::diverged: return "diverged";
  }
  return "?";
}

namespace {

// Uniform view over the per-algorithm step rules.
struct Loop {
  virtual ~Loop() = default;
  virtual void step() = 0;
  virtual const Vector& x() const = 0;
};

struct RkLoop final : Loop {
  RkLoop(const ProblemInstance& inst, Vector x0, std::uint64_t seed)
      : inst_(inst), st_{std::move(x0)}, sampler_(inst.a, seed) {}
  void step() override { rk_step(st_, inst_.a, inst_.b, sampler_); }
  const Vector& x() const override { return st_.x; }
  const ProblemInstance& inst_;
  RkState st_;
  RowSampler sampler_;
};

struct SagLoop final : Loop {
  SagLoop(const ProblemInstance& inst, Vector x0, double step_size,
          std::uint64_t seed)
      : inst_(inst),
        st_(std::move(x0), inst.a.rows(), step_size),
        sampler_(inst.a, seed) {}
  void step() override {
    sag_step(st_, inst_.a, inst_.b, sampler_);
    if (st_.table.updates() % kTableRefreshInterval == 0) {
      st_.table.refresh_average(inst_.a);
    }
  }
  const Vector& x() const override { return st_.x; }
  const ProblemInstance& inst_;
  SagState st_;
  RowSampler sampler_;
};

struct SagRkLoop final : Loop {
  SagRkLoop(const ProblemInstance& inst, Vector x0, double step_size,
            SagRkMode mode, std::uint64_t seed)
      : inst_(inst),
        st_(std::move(x0), inst.a.rows(), step_size, mode),
        sampler_(inst.a, seed) {}
  void step() override {
    if (st_.mode == SagRkMode::exact) {
      sag_rk_step(st_, inst_.a, inst_.b, sampler_);
    } else {
      sag_rk_relaxed_step(st_, inst_.a, inst_.b, sampler_);
    }
    if (st_.table.updates() % kTableRefreshInterval == 0) {
      st_.table.refresh_average(inst_.a);
    }
  }
  const Vector& x() const override { return st_.x; }
  const ProblemInstance& inst_;
  SagRkState st_;
  RowSampler sampler_;
};

struct ArkLoop final : Loop {
  ArkLoop(const ProblemInstance& inst, Vector x0, double lambda,
          std::uint64_t seed)
      : inst_(inst),
        st_(std::move(x0), lambda, inst.a),
        sampler_(inst.a, seed) {}
  void step() override { ark_step(st_, inst_.a, inst_.b, sampler_); }
  const Vector& x() const override { return st_.x; }
  const ProblemInstance& inst_;
  ArkState st_;
  RowSampler sampler_;
};

struct AdaGradLoop final : Loop {
  AdaGradLoop(const ProblemInstance& inst, Vector x0, const AdaGradConfig& cfg,
              std::uint64_t seed)
      : inst_(inst),
        st_(std::move(x0), cfg.zeta, cfg.lambda0),
        sampler_(inst.a, seed) {}
  void step() override { adagrad_rk_step(st_, inst_.a, inst_.b, sampler_); }
  const Vector& x() const override { return st_.x; }
  const ProblemInstance& inst_;
  AdaGradRkState st_;
  RowSampler sampler_;
};

// Alternates between history-recording cyclic sweeps (which double as warmup)
// and randomly sampled preconditioned steps. Each fit consumes the two sweeps
// immediately preceding it; every sweep projection is a real iteration.
struct ApkLoop final : Loop {
  ApkLoop(const ProblemInstance& inst, Vector x0, const ApkConfig& cfg,
          std::uint64_t sampler_seed, std::uint64_t aux_seed, Trace& trace)
      : inst_(inst),
        cfg_(cfg),
        st_(std::move(x0), Vector(inst.a.cols(), 1.0)),
        sampler_(inst.a, sampler_seed),
        aux_rng_(aux_seed),
        trace_(trace) {
    const std::size_t m = inst_.a.rows();
    refit_interval_ = cfg.refit_interval.value_or(10 * m);
    if (cfg.warmup_sweeps < 2) {
      throw Error("apk warmup needs at least the two recorded sweeps");
    }
    plain_steps_left_ = (cfg.warmup_sweeps - 2) * m;
    if (plain_steps_left_ > 0) plain_order_ = fresh_order();
    if (!cfg_.diag_dump_path || cfg_.diag_dump_path->empty()) {
      dump_.reset();
    } else {
      dump_ = std::make_unique<std::ofstream>(*cfg_.diag_dump_path,
                                              std::ios::app);
      if (!*dump_) throw IoError("cannot open " + *cfg_.diag_dump_path);
    }
    begin_sweep();
  }

  void step() override {
    ++iteration_;
    if (plain_steps_left_ > 0) {
      const std::size_t row = plain_order_[plain_pos_ % plain_order_.size()];
      ++plain_pos_;
      project_row(st_.x, inst_.a.row_span(row), inst_.b[row],
                  inst_.a.row_norms_sq()[row]);
      --plain_steps_left_;
      return;
    }
    if (collector_) {
      collector_->step(st_.x);
      if (collector_->done()) {
        HistoryBuffer buf = collector_->finish();
        collector_.reset();
        if (inst_.a.rows() > 2000) {
          buf.subsample(std::min<std::size_t>(inst_.a.rows() - 1, 2000),
                        aux_rng_);
        }
        const DiagonalFit fit =
            fit_diagonal(buf, inst_.a, inst_.b, cfg_.alpha_reg);
        st_.s = fit.s;
        const double s_min = *std::min_element(fit.s.begin(), fit.s.end());
        trace_.refit_events.push_back({iteration_, s_min, fit.objective_value});
        if (dump_) {
          nlohmann::json rec;
          rec["iteration"] = iteration_;
          rec["alpha_reg"] = cfg_.alpha_reg;
          rec["objective_value"] = fit.objective_value;
          rec["s"] = fit.s;
          *dump_ << rec.dump() << "\n";
        }
        steps_since_fit_ = 0;
      }
      return;
    }
    apk_step(st_, inst_.a, inst_.b, sampler_);
    if (++steps_since_fit_ >= refit_interval_) begin_sweep();
  }

  const Vector& x() const override { return st_.x; }

 private:
  std::vector<std::size_t> fresh_order() {
    std::vector<std::size_t> order(inst_.a.rows());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const std::size_t j = i + aux_rng_.next_below(order.size() - i);
      std::swap(order[i], order[j]);
    }
    return order;
  }

  void begin_sweep() {
    collector_.emplace(inst_.a, inst_.b, fresh_order());
  }

  const ProblemInstance& inst_;
  ApkConfig cfg_;
  PrecondState st_;
  RowSampler sampler_;
  Xoshiro256pp aux_rng_;
  Trace& trace_;
  std::size_t refit_interval_ = 0;
  std::size_t plain_steps_left_ = 0;
  std::size_t plain_pos_ = 0;
  std::vector<std::size_t> plain_order_;
  std::optional<HistoryCollector> collector_;
  std::size_t steps_since_fit_ = 0;
  std::size_t iteration_ = 0;
  std::unique_ptr<std::ofstream> dump_;
};

double resolve_step_size(const ProblemInstance& inst,
                         const ExperimentConfig& cfg) {
  const double big_l = lipschitz_constant(inst.a);
  const double m = static_cast<double>(inst.a.rows());
  switch (cfg.step_rule) {
    case StepRule::one_over_L:
      return 1.0 / big_l;
    case StepRule::one_over_2mL:
      return 1.0 / (2.0 * m * big_l);
    case StepRule::one_over_16L:
      return 1.0 / (16.0 * big_l);
    case StepRule::two_over_L_plus_m_mu: {
      double mu;
      if (cfg.mu) {
        mu = *cfg.mu;
      } else {
        const SvdResult dec = svd(inst.a);
        const double smin = dec.sigma.back();
        mu = smin * smin / m;
      }
      return 2.0 / (big_l + m * mu);
    }
    case StepRule::explicit_value:
      if (!(cfg.explicit_step > 0.0)) {
        throw Error("explicit step size must be positive");
      }
      return cfg.explicit_step;
  }
  throw Error("unreachable step rule");
}

nlohmann::json echo_config(const ProblemInstance& inst,
                           const ExperimentConfig& cfg,
                           std::size_t check_interval,
                           std::optional<double> step_size) {
  nlohmann::json j;
  j["algorithm"] = algorithm_name(cfg.algorithm);
  j["seed"] = cfg.seed;
  j["tol"] = cfg.tol;
  j["check_interval"] = check_interval;
  j["max_iters"] = cfg.max_iters;
  j["kernels"] = kernels::backend_name();
  j["instance"] = {{"family", family_name(inst.family)},
                   {"m", inst.a.rows()},
                   {"n", inst.a.cols()},
                   {"seed", inst.seed},
                   {"kappa_frob", inst.kappa_frob}};
  if (inst.spectrum_alpha) j["instance"]["alpha"] = *inst.spectrum_alpha;
  if (step_size) {
    j["step_rule"] = step_rule_name(cfg.step_rule);
    j["step"] = *step_size;
  }
  if (cfg.algorithm == Algorithm::apk) {
    j["apk"] = {{"alpha_reg", cfg.apk.alpha_reg},
                {"refit_interval",
                 cfg.apk.refit_interval.value_or(10 * inst.a.rows())},
                {"warmup_sweeps", cfg.apk.warmup_sweeps}};
  }
  if (cfg.algorithm == Algorithm::ark) {
    j["ark"] = {{"k2_multiplier", cfg.ark.k2_multiplier},
                {"normalize_estimate", cfg.ark.normalize_estimate},
                {"estimated", !cfg.ark.lambda.has_value()}};
    if (cfg.ark.lambda) j["ark"]["lambda"] = *cfg.ark.lambda;
  }
  if (cfg.algorithm == Algorithm::adagrad_rk) {
    j["adagrad"] = {{"zeta", cfg.adagrad.zeta},
                    {"lambda0", cfg.adagrad.lambda0}};
  }
  return j;
}

}  // namespace

LambdaEstimate estimate_lambda_min(const DenseMatrix& a, const Vector& b,
                                   std::size_t k2, std::uint64_t seed,
                                   bool normalize) {
  const std::size_t m = a.rows();
  const std::size_t k1 = std::max<std::size_t>(1, k2 > 10 * m ? k2 - 10 * m : 1);
  if (k2 <= k1) throw BadShapeError("estimate_lambda_min requires k2 > k1 >= 1");

  const DenseMatrix* sys = &a;
  const Vector* rhs = &b;
  DenseMatrix scaled_a(1, 1, {1.0});
  Vector scaled_b;
  double rescale = 1.0;
  if (normalize) {
    // Work on a copy scaled so ||A||_F^2 = m; convert the estimate back at
    // the end (eigenvalues of A'A scale with the square of the factor).
    const double c = std::sqrt(static_cast<double>(m) / a.frob_sq());
    std::vector<double> entries = a.entries();
    for (double& e : entries) e *= c;
    scaled_a = DenseMatrix(m, a.cols(), std::move(entries));
    scaled_b = b;
    for (double& e : scaled_b) e *= c;
    sys = &scaled_a;
    rhs = &scaled_b;
    rescale = 1.0 / (c * c);
  }

  RkState st{Vector(sys->cols(), 0.0)};
  RowSampler sampler(*sys, seed);
  double r1 = 0.0;
  for (std::size_t k = 1; k <= k2 + 1; ++k) {
    rk_step(st, *sys, *rhs, sampler);
    if (k == k1 + 1) {
      Vector ax = sys->multiply(st.x);
      kernels::axpy(ax.data(), -1.0, rhs->data(), ax.size());
      r1 = norm(ax);
    }
  }
  Vector ax = sys->multiply(st.x);
  kernels::axpy(ax.data(), -1.0, rhs->data(), ax.size());
  const double r2 = norm(ax);

  if (r1 == 0.0) {
    // Solved during burn-in; any admissible value works downstream.
    return {sys->frob_sq() * rescale, false};
  }
  LambdaEstimate est = lambda_from_residual_ratio(sys->frob_sq(), r2 / r1, k2 - k1);
  est.value *= rescale;
  return est;
}

LambdaEstimate lambda_from_residual_ratio(double frob_sq, double ratio,
                                          std::size_t dk) {
  if (dk < 1) throw BadShapeError("estimator window must be nonempty");
  if (ratio >= 1.0) return {0.0, true};
  const double exponent = 0.5 / static_cast<double>(dk);
  const double value = frob_sq * (1.0 - std::pow(ratio, exponent));
  return {std::max(value, 0.0), false};
}

namespace {

Trace run_impl(const ProblemInstance& inst, const ExperimentConfig& cfg,
               Vector x0) {
  const DenseMatrix& a = inst.a;
  const std::size_t m = a.rows();
  const std::size_t check_interval = cfg.check_interval.value_or(10 * m);
  if (!(cfg.tol > 0.0)) throw Error("tol must be positive");
  if (check_interval < 1) throw Error("check_interval must be >= 1");
  if (cfg.max_iters < check_interval) {
    throw Error("max_iters must be at least check_interval");
  }
  if (x0.size() != a.cols()) throw BadShapeError("x0 has wrong length");

  SplitMix64 master(cfg.seed);
  const std::uint64_t sampler_seed = master.next();
  const std::uint64_t aux_seed = master.next();

  Trace trace;
  double extra_seconds = 0.0;

  std::optional<double> step_size;
  const bool sag_family = cfg.algorithm == Algorithm::sag ||
                          cfg.algorithm == Algorithm::sag_rk ||
                          cfg.algorithm == Algorithm::sag_rk_relaxed;
  if (sag_family) step_size = resolve_step_size(inst, cfg);

  double ark_lambda = 0.0;
  if (cfg.algorithm == Algorithm::ark) {
    if (cfg.ark.lambda) {
      ark_lambda = *cfg.ark.lambda;
    } else {
      // Burn-in: its cost belongs to the run's wall clock, not its
      // iteration count; the solve restarts from x0.
      const auto t0 = Clock::now();
      const LambdaEstimate est = estimate_lambda_min(
          a, inst.b, cfg.ark.k2_multiplier * m, aux_seed,
          cfg.ark.normalize_estimate);
      trace.ark_burn_in_seconds = seconds_since(t0);
      extra_seconds += trace.ark_burn_in_seconds;
      ark_lambda = est.value;
      trace.ark_estimate_no_progress = est.no_progress;
    }
    trace.ark_lambda_used = ark_lambda;
  }

  std::unique_ptr<Loop> loop;
  switch (cfg.algorithm) {
    case Algorithm::rk:
      loop = std::make_unique<RkLoop>(inst, std::move(x0), sampler_seed);
      break;
    case Algorithm::apk:
      loop = std::make_unique<ApkLoop>(inst, std::move(x0), cfg.apk,
                                       sampler_seed, aux_seed, trace);
      break;
    case Algorithm::sag:
      loop = std::make_unique<SagLoop>(inst, std::move(x0), *step_size,
                                       sampler_seed);
      break;
    case Algorithm::sag_rk:
      loop = std::make_unique<SagRkLoop>(inst, std::move(x0), *step_size,
                                         SagRkMode::exact, sampler_seed);
      break;
    case Algorithm::sag_rk_relaxed:
      loop = std::make_unique<SagRkLoop>(inst, std::move(x0), *step_size,
                                         SagRkMode::relaxed, sampler_seed);
      break;
    case Algorithm::ark:
      loop = std::make_unique<ArkLoop>(inst, std::move(x0), ark_lambda,
                                       sampler_seed);
      break;
    case Algorithm::adagrad_rk:
      loop = std::make_unique<AdaGradLoop>(inst, std::move(x0), cfg.adagrad,
                                           sampler_seed);
      break;
  }

  trace.config_echo = echo_config(inst, cfg, check_interval, step_size);
  trace.terminal = Terminal::max_iters;

  const auto t0 = Clock::now();
  std::size_t k = 0;
  while (k < cfg.max_iters) {
    loop->step();
    ++k;
    if (k % check_interval == 0) {
      const double res = relative_residual(a, loop->x(), inst.b);
      trace.samples.push_back({k, res, seconds_since(t0) + extra_seconds});
      if (!std::isfinite(res) || res > kDivergenceGuard) {
        trace.terminal = Terminal::diverged;
        break;
      }
      if (res < cfg.tol) {
        trace.terminal = Terminal::converged;
        break;
      }
    }
  }
  trace.total_iterations = k;
  trace.wall_seconds = seconds_since(t0) + extra_seconds;
  return trace;
}

}  // namespace

Trace run(const ProblemInstance& inst, const ExperimentConfig& cfg) {
  return run_impl(inst, cfg, Vector(inst.a.cols(), 0.0));
}

Trace run_with_start(const ProblemInstance& inst, const ExperimentConfig& cfg,
                     Vector x0) {
  return run_impl(inst, cfg, std::move(x0));
}

void emit_trace(const Trace& t, const std::filesystem::path& csv_path) {
  {
    std::ofstream out(csv_path);
    if (!out) throw IoError("cannot write " + csv_path.string());
    out << "iteration,rel_residual,elapsed_s\n";
    for (const TraceSample& s : t.samples) {
      out << s.iteration << "," << mm::format_value(s.rel_residual) << ","
          << mm::format_value(s.elapsed_s) << "\n";
    }
    if (!out) throw IoError("trace write failed: " + csv_path.string());
  }
  nlohmann::json meta;
  meta["config"] = t.config_echo;
  meta["terminal"] = terminal_name(t.terminal);
  meta["total_iterations"] = t.total_iterations;
  meta["wall_seconds"] = t.wall_seconds;
  meta["samples_file"] = csv_path.filename().string();
  if (t.ark_lambda_used) {
    meta["ark_lambda_used"] = *t.ark_lambda_used;
    meta["ark_estimate_no_progress"] = t.ark_estimate_no_progress;
    meta["ark_burn_in_seconds"] = t.ark_burn_in_seconds;
  }
  auto& refits = meta["refit_events"] = nlohmann::json::array();
  for (const RefitEvent& e : t.refit_events) {
    refits.push_back({{"iteration", e.iteration},
                      {"s_min", e.s_min},
                      {"objective_value", e.objective}});
  }
  std::filesystem::path meta_path = csv_path;
  meta_path.replace_extension(".meta.json");
  std::ofstream out(meta_path);
  if (!out) throw IoError("cannot write " + meta_path.string());
  out << meta.dump(2) << "\n";
}

std::vector<TraceSample> read_trace_samples(
    const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot read " + csv_path.string());
  std::string line;
  if (!std::getline(in, line) || line != "iteration,rel_residual,elapsed_s") {
    throw IoError("bad trace header in " + csv_path.string());
  }
  std::vector<TraceSample> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    TraceSample s{};
    if (!std::getline(ls, tok, ',')) throw IoError("bad trace row");
    s.iteration = std::stoull(tok);
    if (!std::getline(ls, tok, ',')) throw IoError("bad trace row");
    s.rel_residual = std::strtod(tok.c_str(), nullptr);
    if (!std::getline(ls, tok, ',')) throw IoError("bad trace row");
    s.elapsed_s = std::strtod(tok.c_str(), nullptr);
    samples.push_back(s);
  }
  return samples;
}

std::vector<SummaryRow> summarize_traces(const std::filesystem::path& dir) {
  std::vector<SummaryRow> rows;
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> metas;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 10 && name.ends_with(".meta.json")) {
      metas.push_back(entry.path());
    }
  }
  std::sort(metas.begin(), metas.end());
  for (const auto& path : metas) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    const auto meta = nlohmann::json::parse(in);
    SummaryRow row;
    row.name = path.filename().string();
    row.name.erase(row.name.size() - 10);  // drop ".meta.json"
    row.algorithm = meta.at("config").at("algorithm").get<std::string>();
    row.iterations = meta.at("total_iterations").get<std::size_t>();
    row.wall_s = meta.at("wall_seconds").get<double>();
    row.terminal = meta.at("terminal").get<std::string>();
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SummaryRow& a, const SummaryRow& b) {
                     return a.wall_s < b.wall_s;
                   });
  return rows;
}

std::string render_summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "algorithm,iterations,wall_s,terminal\n";
  for (const auto& r : rows) {
    out << r.algorithm << "," << r.iterations << ","
        << mm::format_value(r.wall_s) << "," << r.terminal << "\n";
  }
  return out.str();
}

std::string render_summary_text(const std::vector<SummaryRow>& rows) {
  std::size_t name_w = 4;
  for (const auto& r : rows) name_w = std::max(name_w, r.name.size());
  std::ostringstream out;
  out << std::left;
  out.width(static_cast<std::streamsize>(name_w + 2));
  out << "name";
  out << "algorithm        iterations    wall_s      terminal\n";
  for (const auto& r : rows) {
    out.width(static_cast<std::streamsize>(name_w + 2));
    out << r.name;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-16s %11zu %12.4f  %s", r.algorithm.c_str(),
                  r.iterations, r.wall_s, r.terminal.c_str());
    out << buf << "\n";
  }
  return out.str();
}

}  // namespace kaczmarz
