#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "symprice/error.hpp"
#include "symprice/mc.hpp"
#include "symprice/rng.hpp"
#include "symprice/tailest.hpp"

using namespace symprice;
namespace ts = testsupport;
using Kind = TailClass::Kind;

namespace {

const std::vector<Kind> kPowerVsExp{Kind::PowerLaw, Kind::Exponential};

std::vector<double> path_steps(GSpec g, std::uint64_t n, std::uint64_t seed) {
  SimConfig c;
  c.params = BivarParams::make(1, 1, 0.37, 0.37, -1);
  c.gspec = g;
  c.n_steps = n;
  c.seed = seed;
  return log_increments(simulate_path(c), c.dt / c.tau0);
}

}  // namespace

TEST_CASE("Hill on exact Pareto samples") {
  const auto x1 = ts::pareto(1'000'000, 1.0, 1);
  const auto h1 = hill(x1, 10000);
  CHECK(h1.alpha == doctest::Approx(1.0).epsilon(0.03));
  CHECK(h1.stderr_ == doctest::Approx(h1.alpha / 100.0));
  CHECK(h1.density_exponent() == doctest::Approx(h1.alpha + 1));
  const auto x5 = ts::pareto(1'000'000, 0.5, 2);
  CHECK(std::fabs(hill(x5, 10000).alpha - 0.5) <= 0.015);
}

TEST_CASE("Hill consistency and scale invariance") {
  const auto x = ts::pareto(1'000'000, 1.5, 3);
  double prev_se = INFINITY;
  for (std::size_t k : {100, 1000, 10000}) {
    const auto h = hill(x, k);
    CHECK(std::fabs(h.alpha - 1.5) <= 5 * h.stderr_);
    CHECK(h.stderr_ < prev_se);
    prev_se = h.stderr_;
  }
  auto y = x;
  for (double& v : y) v *= 37.5;
  const double a = hill(x, 5000).alpha, b = hill(y, 5000).alpha;
  CHECK(std::fabs(a - b) <= 1e-10 * a);
}

TEST_CASE("Hill preconditions") {
  const auto x = ts::pareto(1000, 1.0, 4);
  CHECK_THROWS_AS(hill(x, 5), InsufficientDataError);
  CHECK_THROWS_AS(hill(x, 1000), InsufficientDataError);
  auto bad = x;
  bad[3] = -1.0;
  CHECK_THROWS_AS(hill(bad, 100), DomainError);
  std::vector<double> flat(1000, 2.0);
  CHECK_THROWS_AS(hill(flat, 100), InsufficientDataError);
}

TEST_CASE("rank regression") {
  const auto p = ts::pareto(1'000'000, 1.0, 5);
  CHECK(rank_regression(p, 0.01).slope == doctest::Approx(-1.0).epsilon(0.05));
  const auto e = ts::exponential(1'000'000, 1.0, 6);
  CHECK(rank_regression(e, 0.01, RankScale::SemiLog).slope == doctest::Approx(-1.0).epsilon(0.05));
  CHECK_THROWS_AS(rank_regression(std::vector<double>(1000, 1.0), 0.01), InsufficientDataError);
}

TEST_CASE("log R has an exponential tail") {
  const auto r = sample_ratio(BivarParams::make(1, 1, 1, 1, -0.5), 1'000'000, 7);
  std::vector<double> lr;
  for (double v : r.r)
    if (v > 0) lr.push_back(std::log(v));
  CHECK(rank_regression(lr, 0.001, RankScale::SemiLog).slope ==
        doctest::Approx(-1.0).epsilon(0.1));
}

TEST_CASE("ratio tails: Hill index of |R|") {
  // With sigma = 1 the x^-2 density dominates the top 0.1% of 1e7 draws.
  const auto wide = sample_ratio(BivarParams::make(1, 1, 1, 1, -0.5), 10'000'000, 8);
  const auto tw = make_tail_sample(wide.r, 0.001);
  const auto hw = hill(tw, 10000);
  CHECK(hw.alpha >= 0.9);
  CHECK(hw.alpha <= 1.1);
  // With sigma = 0.2 it does not: a nonpositive S is a 5-sigma event, so the
  // top 0.1% is still the Gaussian bulk and the index is far above 1.
  const auto narrow = sample_ratio(BivarParams::make(1, 1, 0.2, 0.2, -0.5), 10'000'000, 8);
  const auto hn = hill(make_tail_sample(narrow.r, 0.001), 10000);
  CHECK(hn.alpha > 2.0);
}

TEST_CASE("stretched exponential fit recovers p") {
  // survival exp(-x^p): X = (-log U)^(1/p)
  for (double p : {0.5, 1.0, 2.0}) {
    auto e = ts::exponential(1'000'000, 1.0, 9);
    for (double& v : e) v = std::pow(v, 1.0 / p);
    const auto f = stretched_fit(e, 0.01);
    CHECK(f.p == doctest::Approx(p).epsilon(0.05));
    CHECK(f.stderr_ > 0);
    CHECK(f.k == 10000);
  }
}

TEST_CASE("TopK streaming equals a direct sort") {
  const auto x = ts::pareto(200000, 1.0, 10);
  TopK top(1001);
  for (std::size_t i = 0; i < x.size(); i += 7919)
    top.add(std::span(x).subspan(i, std::min<std::size_t>(7919, x.size() - i)));
  const auto a = top.finish();
  const auto b = make_tail_sample(x, 0.005);
  REQUIRE(a.top.size() == 1001);
  REQUIRE(b.top.size() == 1001);
  CHECK(a.top == b.top);
  CHECK(a.n_total == b.n_total);
}

TEST_CASE("classifier on synthetic tails") {
  const auto p = ts::pareto(1'000'000, 1.0, 11);
  const auto rp = classify_tail(p, kPowerVsExp);
  CHECK(rp.tail.kind == Kind::PowerLaw);
  CHECK(rp.estimate == doctest::Approx(2.0).epsilon(0.05));
  CHECK(rp.k_used == 10000);
  CHECK(rp.sweep.size() == 3);
  CHECK(rp.sweep_consistent());
  const auto e = ts::exponential(1'000'000, 1.0, 12);
  const auto re = classify_tail(e, kPowerVsExp);
  CHECK(re.tail.kind == Kind::Exponential);
  CHECK(re.estimate == doctest::Approx(1.0).epsilon(0.05));
  CHECK(re.to_kv().at("class") == "Exponential");
  CHECK_THROWS_AS(classify_tail(e, {Kind::PowerLaw}), DomainError);
  CHECK_THROWS_AS(classify_tail(std::vector<double>(20000, 1.0), kPowerVsExp), InsufficientDataError);
}

TEST_CASE("classifier separation over 100 seeded trials") {
  int right = 0;
  for (int t = 0; t < 100; ++t) {
    const auto p = ts::pareto(1'000'000, 1.0, rng::derive_seed(100, t));
    const auto e = ts::exponential(1'000'000, 1.0, rng::derive_seed(200, t));
    if (classify_tail(p, kPowerVsExp).tail.kind == Kind::PowerLaw &&
        classify_tail(e, kPowerVsExp).tail.kind == Kind::Exponential)
      ++right;
  }
  CHECK(right >= 99);
}

TEST_CASE("classifier on simulated price returns") {
  const auto sym = classify_tail(path_steps(GSpec::sym_basic(), 1'000'000, 13), kPowerVsExp);
  CHECK(sym.tail.kind == Kind::PowerLaw);
  CHECK(sym.estimate == doctest::Approx(2.0).epsilon(0.1));
  const auto lg = classify_tail(path_steps(GSpec::log(), 1'000'000, 14), kPowerVsExp);
  CHECK(lg.tail.kind == Kind::Exponential);
  const auto gbm = log_increments(simulate_gbm(0.0, 0.2, 0.01, 1'000'000, 1.0, 15));
  CHECK(classify_tail(gbm, kPowerVsExp).tail.kind == Kind::Exponential);
}

TEST_CASE("density exponent falls toward 1 as q grows") {
  double prev = INFINITY;
  for (double q : {1.0, 2.0, 5.0}) {
    const auto steps = path_steps(GSpec::power_diff(q), 1'000'000, 16);
    const double e = hill(make_tail_sample(steps, 0.001), 1000).density_exponent();
    CHECK(e < prev);
    CHECK(e > 1.0);
    prev = e;
  }
}
