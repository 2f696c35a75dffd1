#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kaczmarz/kernels.hpp"
#include "kaczmarz/precond.hpp"
#include "kaczmarz/probgen.hpp"
#include "kaczmarz/rng.hpp"
#include "kaczmarz/solvers.hpp"

using namespace kaczmarz;

namespace {

std::vector<std::size_t> identity_order(std::size_t m) {
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  return order;
}

}  // namespace

TEST_CASE("collect_history") {
  SUBCASE("buffer holds exactly m-1 pairs") {
    const DenseMatrix a = gen_gaussian(7, 3, 1);
    const auto [xt, b] = gen_consistent(a, 2);
    const auto buf = collect_history(a, b, Vector(3, 0.0), identity_order(7));
    CHECK(buf.samples.size() == 6);
    for (std::size_t i = 0; i < buf.samples.size(); ++i) {
      CHECK(buf.samples[i].k == i + 2);
      CHECK(buf.samples[i].row == buf.order[i + 1]);
    }
  }
  SUBCASE("starting at the solution freezes every pair") {
    const DenseMatrix a = gen_gaussian(5, 4, 3);
    const auto [x_true, b] = gen_consistent(a, 4);
    const auto buf = collect_history(a, b, x_true, identity_order(5));
    for (const auto& p : buf.samples) {
      CHECK(p.x_prev == x_true);
      CHECK(p.x_far == x_true);
    }
  }
  SUBCASE("orthogonal 2x2 hand trace") {
    const DenseMatrix eye = build_matrix(2, 2, {1, 0, 0, 1});
    const Vector b{1.0, 2.0};
    const auto buf = collect_history(eye, b, Vector{0.0, 0.0}, {0, 1});
    // Sweep: x1=(1,0), x2=(1,2); second sweep is stationary: x3=x4=(1,2).
    REQUIRE(buf.samples.size() == 1);
    CHECK(buf.samples[0].row == 1);
    CHECK(buf.samples[0].x_prev == Vector{1.0, 0.0});
    CHECK(buf.samples[0].x_far == Vector{1.0, 2.0});
  }
  SUBCASE("recorded iterates sit on their cyclic hyperplanes") {
    const DenseMatrix a = gen_gaussian(9, 5, 5);
    const auto [xt, b] = gen_consistent(a, 6);
    Xoshiro256pp rng(7);
    auto order = identity_order(9);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      std::swap(order[i], order[i + rng.next_below(order.size() - i)]);
    }
    const auto buf = collect_history(a, b, Vector(5, 0.0), order);
    for (const auto& p : buf.samples) {
      const std::size_t row_prev = buf.order[p.k - 2];  // slot k-1
      const std::size_t row_far = p.row;                // slot k
      const double gap_prev =
          std::abs(kernels::dot(a.row(row_prev), p.x_prev.data(), 5) -
                   b[row_prev]);
      const double gap_far =
          std::abs(kernels::dot(a.row(row_far), p.x_far.data(), 5) -
                   b[row_far]);
      CHECK(gap_prev <=
            1e-8 * std::sqrt(a.row_norms_sq()[row_prev]) * (1.0 + norm(p.x_prev)));
      CHECK(gap_far <=
            1e-8 * std::sqrt(a.row_norms_sq()[row_far]) * (1.0 + norm(p.x_far)));
    }
  }
  SUBCASE("order must be a permutation") {
    const DenseMatrix a = gen_gaussian(4, 2, 8);
    const auto [xt, b] = gen_consistent(a, 9);
    CHECK_THROWS_AS(collect_history(a, b, Vector(2, 0.0), {0, 1, 2}),
                    BadShapeError);
    CHECK_THROWS_AS(collect_history(a, b, Vector(2, 0.0), {0, 1, 1, 2}),
                    BadShapeError);
    CHECK_THROWS_AS(collect_history(a, b, Vector(2, 0.0), {0, 1, 2, 4}),
                    BadShapeError);
  }
}

TEST_CASE("objective_f hand computation") {
  const DenseMatrix a = build_matrix(2, 1, {1.0, 2.0});
  const Vector b{0.5, 1.5};
  HistoryBuffer buf;
  buf.order = {0, 1};
  buf.samples.push_back({2, 1, Vector{0.5}, Vector{0.3}});
  const double coef = (b[1] - 2.0 * 0.5) / 4.0;  // residual over row norm^2
  const double s_val = 0.7;
  const double resid_term = (0.3 - 0.5) - coef * 2.0 * s_val;
  const double alpha = 0.25;
  const double expected =
      resid_term * resid_term + alpha * (s_val - 1.0) * (s_val - 1.0);
  CHECK(objective_f(Vector{s_val}, buf, a, b, alpha) ==
        doctest::Approx(expected).epsilon(1e-15));

  // Empty history: only the regularizer remains, zero at s = e.
  HistoryBuffer empty;
  empty.order = {0, 1};
  CHECK(objective_f(Vector{1.0}, empty, a, b, alpha) == 0.0);
  CHECK(objective_f(Vector{3.0}, empty, a, b, alpha) ==
        doctest::Approx(alpha * 4.0).epsilon(1e-15));
}

TEST_CASE("fit_diagonal") {
  SUBCASE("zero residual history returns the identity diagonal") {
    const DenseMatrix a = gen_gaussian(6, 3, 11);
    const auto [x_true, b] = gen_consistent(a, 12);
    const auto buf = collect_history(a, b, x_true, identity_order(6));
    const auto fit = fit_diagonal(buf, a, b, 1.0);
    CHECK(fit.s == Vector(3, 1.0));
  }
  SUBCASE("overwhelming regularization pins s to the identity") {
    const DenseMatrix a = gen_gaussian(6, 3, 13);
    const auto [xt, b] = gen_consistent(a, 14);
    const auto buf = collect_history(a, b, Vector(3, 0.0), identity_order(6));
    const auto fit = fit_diagonal(buf, a, b, 1e9);
    for (double s : fit.s) CHECK(std::abs(s - 1.0) <= 1e-6);
  }
  SUBCASE("matches a pure objective-evaluation oracle on seeded 6x4 systems") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const ProblemInstance inst =
          make_instance(Family::gaussian, 6, 4, std::nullopt, 100 + seed);
      const auto buf = collect_history(inst.a, inst.b, Vector(4, 0.0),
                                       identity_order(6));
      const double alpha = 1.0;
      const auto fit = fit_diagonal(buf, inst.a, inst.b, alpha);
      // The surrogate objective is separable; recover each coordinate's
      // minimizer from three function values of objective_f alone.
      for (std::size_t c = 0; c < 4; ++c) {
        auto eval = [&](double t) {
          Vector s = fit.s;
          s[c] = t;
          return objective_f(s, buf, inst.a, inst.b, alpha);
        };
        const double g0 = eval(0.0), g1 = eval(1.0), g2 = eval(2.0);
        const double quad = 0.5 * (g0 - 2.0 * g1 + g2);
        const double lin = g1 - g0 - quad;
        const double vertex = -lin / (2.0 * quad);
        CHECK(fit.s[c] == doctest::Approx(vertex).epsilon(1e-8));
      }
    }
  }
  SUBCASE("coordinate-wise stationarity of the normal equations") {
    const ProblemInstance inst =
        make_instance(Family::gaussian, 8, 5, std::nullopt, 21);
    const auto buf =
        collect_history(inst.a, inst.b, Vector(5, 0.0), identity_order(8));
    const double alpha = 0.5;
    const auto fit = fit_diagonal(buf, inst.a, inst.b, alpha);
    // Independent accumulation of the diagonal normal equations.
    Vector denom(5, alpha), numer(5, alpha);
    for (const auto& p : buf.samples) {
      double resid = inst.b[p.row];
      for (std::size_t t = 0; t < 5; ++t) resid -= inst.a(p.row, t) * p.x_prev[t];
      const double coef = resid / inst.a.row_norms_sq()[p.row];
      for (std::size_t t = 0; t < 5; ++t) {
        const double av = coef * inst.a(p.row, t);
        denom[t] += av * av;
        numer[t] += av * (p.x_far[t] - p.x_prev[t]);
      }
    }
    for (std::size_t t = 0; t < 5; ++t) {
      const double residual = denom[t] * fit.s[t] - numer[t];
      CHECK(std::abs(residual) <= 1e-10 * std::abs(numer[t]));
    }
  }
  SUBCASE("fit never loses to the identity diagonal") {
    for (std::uint64_t seed = 30; seed < 40; ++seed) {
      const ProblemInstance inst =
          make_instance(Family::gaussian, 7, 4, std::nullopt, seed);
      const auto buf =
          collect_history(inst.a, inst.b, Vector(4, 0.0), identity_order(7));
      const auto fit = fit_diagonal(buf, inst.a, inst.b, 1.0);
      const double f_fit = objective_f(fit.s, buf, inst.a, inst.b, 1.0);
      const double f_eye =
          objective_f(Vector(4, 1.0), buf, inst.a, inst.b, 1.0);
      CHECK(f_fit <= f_eye * (1.0 + 1e-12));
      CHECK(fit.objective_value == f_fit);
    }
  }
  SUBCASE("local minimality and flat gradient at the fit") {
    const ProblemInstance inst =
        make_instance(Family::gaussian, 6, 4, std::nullopt, 51);
    const auto buf =
        collect_history(inst.a, inst.b, Vector(4, 0.0), identity_order(6));
    const double alpha = 1.0;
    const auto fit = fit_diagonal(buf, inst.a, inst.b, alpha);
    const double f0 = fit.objective_value;
    Xoshiro256pp rng(52);
    for (int rep = 0; rep < 100; ++rep) {
      Vector probe(4);
      for (double& e : probe) e = rng.next_gaussian();
      kernels::scale(probe.data(), 1e-3 / norm(probe), probe.data(), 4);
      Vector s = fit.s;
      kernels::axpy(s.data(), 1.0, probe.data(), 4);
      CHECK(objective_f(s, buf, inst.a, inst.b, alpha) >= f0 - 1e-12 * (1.0 + f0));
    }
    for (std::size_t c = 0; c < 4; ++c) {
      const double h = 1e-6;
      Vector sp = fit.s, sm = fit.s;
      sp[c] += h;
      sm[c] -= h;
      const double grad = (objective_f(sp, buf, inst.a, inst.b, alpha) -
                           objective_f(sm, buf, inst.a, inst.b, alpha)) /
                          (2.0 * h);
      CHECK(std::abs(grad) <= 1e-6 * (1.0 + std::abs(f0)));
    }
  }
  SUBCASE("positivity clamp holds") {
    const ProblemInstance inst =
        make_instance(Family::gaussian, 6, 4, std::nullopt, 61);
    const auto buf =
        collect_history(inst.a, inst.b, Vector(4, 0.0), identity_order(6));
    const auto fit = fit_diagonal(buf, inst.a, inst.b, 1e-12);
    for (double s : fit.s) {
      CHECK(s >= kPrecondClampLo);
      CHECK(s <= kPrecondClampHi);
    }
  }
  SUBCASE("rejects non-positive regularization") {
    const DenseMatrix a = gen_gaussian(4, 2, 71);
    const auto [xt, b] = gen_consistent(a, 72);
    const auto buf = collect_history(a, b, Vector(2, 0.0), identity_order(4));
    CHECK_THROWS_AS(fit_diagonal(buf, a, b, 0.0), Error);
  }
}

TEST_CASE("subsampling") {
  const ProblemInstance inst =
      make_instance(Family::gaussian, 12, 5, std::nullopt, 81);
  auto buf =
      collect_history(inst.a, inst.b, Vector(5, 0.0), identity_order(12));
  const auto full = fit_diagonal(buf, inst.a, inst.b, 1.0);

  SUBCASE("selecting everything reproduces the full fit") {
    Xoshiro256pp rng(82);
    buf.subsample(buf.samples.size(), rng);
    CHECK_FALSE(buf.subset.has_value());
    const auto again = fit_diagonal(buf, inst.a, inst.b, 1.0);
    CHECK(again.s == full.s);

    // An explicit all-index mask is also identical.
    std::vector<std::size_t> all(buf.samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    buf.subset = all;
    const auto masked = fit_diagonal(buf, inst.a, inst.b, 1.0);
    CHECK(masked.s == full.s);
  }
  SUBCASE("a strict subsample keeps the requested size") {
    Xoshiro256pp rng(83);
    buf.subsample(4, rng);
    REQUIRE(buf.subset.has_value());
    CHECK(buf.subset->size() == 4);
    for (std::size_t i = 1; i < buf.subset->size(); ++i) {
      CHECK((*buf.subset)[i - 1] < (*buf.subset)[i]);
    }
    const auto fit = fit_diagonal(buf, inst.a, inst.b, 1.0);
    for (double s : fit.s) CHECK(std::isfinite(s));
  }
}

TEST_CASE("adagrad accumulator pieces") {
  SUBCASE("zero gradient leaves the accumulator untouched") {
    Vector acc{1.0, 2.0};
    adagrad_accumulate(acc, Vector{0.0, 0.0});
    CHECK(acc == Vector{1.0, 2.0});
  }
  SUBCASE("per-coordinate history norm") {
    Vector acc(2, 0.0);
    adagrad_accumulate(acc, Vector{3.0, 0.0});
    adagrad_accumulate(acc, Vector{0.0, 4.0});
    CHECK(acc == Vector{9.0, 16.0});
    Vector h;
    adagrad_matrix(acc, 1.0, h);
    CHECK(h == Vector{4.0, 5.0});  // zeta + sqrt(acc)
    Vector c;
    adagrad_precond(h, 0.0, c);
    CHECK(c == Vector{0.25, 0.2});
  }
  SUBCASE("order independence") {
    const std::vector<Vector> grads{{1.0, -2.0}, {0.5, 0.25}, {-4.0, 8.0}};
    Vector fwd(2, 0.0), rev(2, 0.0);
    for (const auto& g : grads) adagrad_accumulate(fwd, g);
    for (auto it = grads.rbegin(); it != grads.rend(); ++it) {
      adagrad_accumulate(rev, *it);
    }
    CHECK(fwd == rev);
  }
  SUBCASE("zero accumulator gives the isotropic preconditioner") {
    Vector acc(3, 0.0), h, c;
    adagrad_matrix(acc, 0.5, h);
    CHECK(h == Vector(3, 0.5));
    adagrad_precond(h, 0.2, c);
    CHECK(c == Vector(3, 2.2));
  }
  SUBCASE("validation") {
    Vector acc(2, 0.0), h;
    CHECK_THROWS_AS(adagrad_accumulate(acc, Vector{1.0}), BadShapeError);
    CHECK_THROWS_AS(adagrad_matrix(acc, 0.0, h), Error);
  }
}
