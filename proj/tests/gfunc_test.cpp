#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "symprice/error.hpp"
#include "symprice/gfunc.hpp"

using namespace symprice;

namespace {

std::vector<GSpec> builtins() {
  return {GSpec::sym_basic(),         GSpec::power_diff(0.5),     GSpec::power_diff(1),
          GSpec::power_diff(2),       GSpec::power_diff(3),       GSpec::power_diff(7.5),
          GSpec::odd_power_of_diff(1), GSpec::odd_power_of_diff(3), GSpec::odd_power_of_diff(5),
          GSpec::log_power(1),        GSpec::log_power(3),        GSpec::log_power(5),
          GSpec::log()};
}

const CheckResult& cond(const ConditionGReport& r, int i) { return r.conditions[i - 1]; }

}  // namespace

TEST_CASE("eval_g examples") {
  CHECK(eval_g(GSpec::sym_basic(), 1.0) == 0.0);
  CHECK(eval_g(GSpec::sym_basic(), 2.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(eval_g(GSpec::power_diff(2), 2.0) == doctest::Approx(3.75).epsilon(1e-15));
  CHECK(eval_g(GSpec::log(), std::numbers::e) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(eval_g(GSpec::log(), 0.0), DomainError);
  CHECK_THROWS_AS(eval_g(GSpec::sym_basic(), -1.0), DomainError);
}

TEST_CASE("eval_g_deriv examples") {
  CHECK(eval_g_deriv(GSpec::sym_basic(), 1.0, 1) == 1.0);
  CHECK(eval_g_deriv(GSpec::log(), 2.0, 1) == 0.5);
  CHECK(eval_g_deriv(GSpec::power_diff(1), 1.0, 2) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK_THROWS_AS(eval_g_deriv(GSpec::log(), -2.0, 1), DomainError);
  CHECK_THROWS_AS(eval_g_deriv(GSpec::log(), 2.0, 3), DomainError);
}

TEST_CASE("parameter invariants") {
  CHECK_THROWS_AS(GSpec::power_diff(0).validate(), DomainError);
  CHECK_THROWS_AS(GSpec::power_diff(-1).validate(), DomainError);
  CHECK_THROWS_AS(GSpec::odd_power_of_diff(2).validate(), DomainError);
  CHECK_THROWS_AS((GSpec{Family::LogPower, 2.5}).validate(), DomainError);
  CHECK(GSpec::log_power_from_p(1.0 / 3.0) == GSpec::log_power(3));
  CHECK_THROWS_AS(GSpec::log_power_from_p(0.5), DomainError);
}

TEST_CASE("SymBasic is PowerDiff(1) halved") {
  for (double x : {0.01, 0.3, 1.0, 2.0, 17.0, 1e4})
    CHECK(2.0 * eval_g(GSpec::sym_basic(), x) ==
          doctest::Approx(eval_g(GSpec::power_diff(1), x)).epsilon(1e-15));
}

TEST_CASE("normalize divides by G'(1)") {
  GSpec s = GSpec::power_diff(3);
  s.normalize = true;
  CHECK(eval_g_deriv(s, 1.0, 1) == doctest::Approx(1.0));
  CHECK(eval_g(s, 2.0) == doctest::Approx(eval_g(GSpec::power_diff(3), 2.0) / 6.0));
  GSpec o = GSpec::odd_power_of_diff(3);
  o.normalize = true;
  CHECK_THROWS_AS(eval_g(o, 2.0), DomainError);
}

TEST_CASE("antisymmetry on [1e-3, 1e3]") {
  const auto grid = reciprocal_log_grid(1e3, 300);
  for (const auto& s : builtins())
    for (double x : grid) {
      const double g = eval_g(s, x);
      CHECK_MESSAGE(std::fabs(g + eval_g(s, 1.0 / x)) <= 1e-12 * (1.0 + std::fabs(g)),
                    s.label(), " x=", x);
    }
}

TEST_CASE("derivative identity x G'(x) = (1/x) G'(1/x)") {
  const auto grid = reciprocal_log_grid(1e3, 300);
  for (const auto& s : builtins())
    for (double x : grid) {
      const double a = x * eval_g_deriv(s, x, 1);
      const double b = eval_g_deriv(s, 1.0 / x, 1) / x;
      CHECK_MESSAGE(std::fabs(a - b) <= 1e-10 * std::max(std::fabs(a), 1e-300), s.label(),
                    " x=", x);
    }
}

TEST_CASE("analytic derivatives match central differences") {
  // Skipped where G'(x) = 0 exactly (OddPowerOfDiff and LogPower with q >= 3
  // at x = 1): a relative error is undefined there.
  const auto grid = reciprocal_log_grid(1e3, 120);
  for (const auto& s : builtins())
    for (double x : grid) {
      const double h = 1e-5 * x;
      const double d1 = eval_g_deriv(s, x, 1);
      if (d1 == 0.0) continue;
      const double fd1 = (eval_g(s, x + h) - eval_g(s, x - h)) / (2 * h);
      CHECK_MESSAGE(std::fabs(fd1 - d1) <= 1e-6 * std::fabs(d1), s.label(), " x=", x);
      // second order against differences of G'; roundoff in G'(x +- h) is
      // about eps |G'| / h, which dominates when G'' nearly vanishes.
      const double fd2 =
          (eval_g_deriv(s, x + h, 1) - eval_g_deriv(s, x - h, 1)) / (2 * h);
      const double d2 = eval_g_deriv(s, x, 2);
      CHECK_MESSAGE(std::fabs(fd2 - d2) <= 1e-6 * std::fabs(d2) + 1e-10 * std::fabs(d1) / x,
                    s.label(), " x=", x);
    }
}

TEST_CASE("integrated bound G(x) >= G'(1) log x for families passing Condition G") {
  const auto grid = reciprocal_log_grid(1e3, 300);
  for (const auto& s : builtins()) {
    const double c = unit_slope(s);
    for (double x : grid)
      if (x > 1.0)
        CHECK_MESSAGE(eval_g(s, x) >= c * std::log(x) * (1 - 1e-12), s.label(), " x=", x);
  }
}

TEST_CASE("predicted tails") {
  CHECK(predicted_tail(GSpec::sym_basic()) == TailClass::power_law(2.0));
  CHECK(predicted_tail(GSpec::power_diff(3)).value == doctest::Approx(4.0 / 3.0));
  CHECK(predicted_tail(GSpec::power_diff(2)) == TailClass::power_law(1.5));
  CHECK(predicted_tail(GSpec::odd_power_of_diff(3)).value == doctest::Approx(4.0 / 3.0));
  CHECK(predicted_tail(GSpec::log()) == TailClass::exponential(1.0));
  const auto st = predicted_tail(GSpec::log_power(3));
  CHECK(st.kind == TailClass::Kind::StretchedExponential);
  CHECK(st.value == doctest::Approx(1.0 / 3.0));
  for (const auto& s : builtins()) {
    const auto t = predicted_tail(s);
    if (t.kind == TailClass::Kind::PowerLaw) CHECK(t.value > 1.0);
  }
  double prev = INFINITY;
  for (double q : {1.0, 2.0, 10.0, 100.0}) {
    const double e = predicted_tail(GSpec::power_diff(q)).value;
    CHECK(e < prev);
    prev = e;
  }
  CHECK(prev - 1.0 < 0.011);
  CHECK(predicted_tail(GSpec::power_diff(2)).describe() == "density tail x^{-1.5}");
  CHECK(predicted_tail(GSpec::log()).describe() == "density tail e^{-x}");
}

TEST_CASE("closed-form inverses") {
  for (const auto& s : builtins())
    for (double y : {-50.0, -3.0, -0.2, 0.0, 0.7, 4.0, 80.0}) {
      const double x = inverse_g(s, y);
      CHECK_MESSAGE(eval_g(s, x) == doctest::Approx(y).epsilon(1e-12).scale(1.0), s.label());
      const double xb = invert_increasing([&](double t) { return eval_g(s, t); }, y);
      CHECK(xb == doctest::Approx(x).epsilon(1e-11));
    }
}

TEST_CASE("log G' in log space agrees with direct evaluation") {
  for (const auto& s : builtins())
    for (double ell : {-5.0, -1.0, -0.1, 0.3, 2.0, 6.0}) {
      const double direct = std::log(eval_g_deriv(s, std::exp(ell), 1));
      CHECK_MESSAGE(log_g_prime_at_log(s, ell) == doctest::Approx(direct).epsilon(1e-10),
                    s.label(), " ell=", ell);
    }
  // usable far beyond the overflow range of G'
  CHECK(std::isfinite(log_g_prime_at_log(GSpec::power_diff(2), 900.0)));
}

TEST_CASE("reciprocal grid") {
  const auto g = reciprocal_log_grid(std::exp(6.0), 50);
  REQUIRE(g.size() == 101);
  CHECK(g[50] == 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g[i] * g[g.size() - 1 - i] == doctest::Approx(1.0).epsilon(1e-15));
    if (i) CHECK(g[i] > g[i - 1]);
  }
}

TEST_CASE("Condition G: SymBasic and PowerDiff pass everything") {
  const auto grid = reciprocal_log_grid(std::exp(6.0), 300);
  for (const auto& s : {GSpec::sym_basic(), GSpec::power_diff(0.25), GSpec::power_diff(1),
                        GSpec::power_diff(2), GSpec::power_diff(3), GSpec::odd_power_of_diff(1)}) {
    const auto r = check_condition_g(s, grid);
    CHECK_MESSAGE(r.all_conditions_pass(), r.to_text());
    CHECK(r.derivative_identity.pass);
    CHECK(r.log_bound.pass);
    CHECK_FALSE(r.log_identity.pass);
    CHECK_FALSE(r.grid_limited);
  }
}

TEST_CASE("Condition G: Log passes (i)-(iii) only, with x G'(x) = 1") {
  const auto r = check_condition_g(GSpec::log(), reciprocal_log_grid(std::exp(6.0), 300));
  CHECK(cond(r, 1).pass);
  CHECK(cond(r, 2).pass);
  CHECK(cond(r, 3).pass);
  CHECK_FALSE(cond(r, 4).pass);
  CHECK_FALSE(cond(r, 5).pass);
  CHECK_FALSE(cond(r, 4).witnesses.empty());
  CHECK_FALSE(cond(r, 5).witnesses.empty());
  CHECK(r.log_identity.pass);
  CHECK(r.derivative_identity.pass);
  CHECK(r.log_bound.pass);
}

TEST_CASE("Condition G: odd powers vanish to second order at 1") {
  // G'(1) = 0 for q >= 3, so the strict inequality (ii) fails exactly at x = 1.
  const auto grid = reciprocal_log_grid(std::exp(6.0), 300);
  for (const auto& s : {GSpec::odd_power_of_diff(3), GSpec::log_power(3)}) {
    const auto r = check_condition_g(s, grid);
    CHECK(cond(r, 1).pass);
    REQUIRE_FALSE(cond(r, 2).pass);
    REQUIRE(cond(r, 2).witnesses.size() == 1);
    CHECK(cond(r, 2).witnesses[0].x == 1.0);
    CHECK(cond(r, 2).witnesses[0].value == 0.0);
    CHECK(cond(r, 3).pass);
    CHECK(cond(r, 4).pass);
    CHECK(cond(r, 5).pass);
  }
}

TEST_CASE("Condition G on a tabulated x - 1") {
  std::vector<double> xs, gs;
  for (double x = 0.1; x <= 10.0001; x += 0.05) {
    xs.push_back(x);
    gs.push_back(x - 1.0);
  }
  const TabulatedG t(xs, gs);
  const std::vector<double> grid{0.5, 1.0, 2.0};
  const auto r = check_condition_g(t, grid);
  CHECK(r.lower_confidence);
  CHECK(r.grid_limited);
  CHECK(cond(r, 1).pass);
  REQUIRE_FALSE(cond(r, 3).pass);
  bool found = false;
  for (const auto& w : cond(r, 3).witnesses)
    if (w.x == 2.0) {
      found = true;
      CHECK(w.value == doctest::Approx(0.5));  // G(2) + G(1/2) = 1 - 1/2
    }
  CHECK(found);
  CHECK_FALSE(r.all_conditions_pass());
}

TEST_CASE("tabulated SymBasic reproduces the analytic verdict") {
  std::vector<double> xs, gs;
  for (int i = -600; i <= 600; ++i) {
    const double x = std::exp(i * 0.01);
    xs.push_back(x);
    gs.push_back(eval_g(GSpec::sym_basic(), x));
  }
  const TabulatedG t(xs, gs);
  CHECK(t(2.0) == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(t.deriv(1.0, 1) == doctest::Approx(1.0).epsilon(1e-4));
  ConditionGOptions opt;
  opt.identity_tol = 1e-6;
  opt.derivative_tol = 1e-3;
  const auto r = check_condition_g(t, reciprocal_log_grid(std::exp(5.0), 100), opt);
  CHECK_MESSAGE(r.all_conditions_pass(), r.to_text());
}

TEST_CASE("Condition G grid validation") {
  const std::vector<double> not_closed{0.5, 1.0, 3.0};
  CHECK_THROWS_AS(check_condition_g(GSpec::log(), not_closed), InputError);
  const std::vector<double> neg{-1.0, 1.0};
  CHECK_THROWS_AS(check_condition_g(GSpec::log(), neg), DomainError);
  CHECK_THROWS_AS(check_condition_g(GSpec::log(), std::vector<double>{}), InputError);
}

TEST_CASE("tabulated input validation") {
  CHECK_THROWS_AS(TabulatedG({1, 2, 2, 3}, {0, 1, 2, 3}), InputError);
  CHECK_THROWS_AS(TabulatedG({-1, 2, 3, 4}, {0, 1, 2, 3}), InputError);
  CHECK_THROWS_AS(TabulatedG({1, 2, 3}, {0, 1, 2}), InputError);
}
