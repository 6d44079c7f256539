#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "support.hpp"
#include "symprice/error.hpp"
#include "symprice/kernels.hpp"
#include "symprice/mc.hpp"
#include "symprice/parallel.hpp"

using namespace symprice;
namespace ts = testsupport;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

SimConfig config(GSpec g, std::uint64_t steps, std::uint64_t seed) {
  SimConfig c;
  c.params = BivarParams::make(1, 1, 0.37, 0.37, -1);
  c.gspec = g;
  c.n_steps = steps;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("rho = -1 pairs lie on the degenerate line") {
  const auto p = BivarParams::make(1, 1, 0.2, 0.2, -1);
  const auto s = sample_bivariate(p, 100000, 3);
  for (std::size_t i = 0; i < s.d.size(); ++i) {
    const double a = (s.d[i] - 1) / 0.2, b = (s.s[i] - 1) / 0.2;
    CHECK(std::fabs(a + b) <= 8 * 2.3e-16 * (1 + std::fabs(a)) / 0.2);
  }
}

TEST_CASE("bivariate moments at n = 1e6") {
  const auto p = BivarParams::make(1, 1.2, 0.2, 0.3, 0.4);
  const std::size_t n = 1'000'000;
  const auto s = sample_bivariate(p, n, 17);
  const double md = ts::mean(s.d), ms = ts::mean(s.s);
  const double vd = ts::variance(s.d), vs = ts::variance(s.s);
  double c = 0;
  for (std::size_t i = 0; i < n; ++i) c += (s.d[i] - md) * (s.s[i] - ms);
  const double r = c / (n - 1) / std::sqrt(vd * vs);
  const double rn = std::sqrt(double(n));
  CHECK(std::fabs(md - 1.0) < 5 * 0.2 / rn);
  CHECK(std::fabs(ms - 1.2) < 5 * 0.3 / rn);
  CHECK(std::fabs(vd - 0.04) < 5 * 0.04 * std::sqrt(2.0) / rn);
  CHECK(std::fabs(vs - 0.09) < 5 * 0.09 * std::sqrt(2.0) / rn);
  CHECK(std::fabs(r - 0.4) < 5 * (1 - 0.16) / rn);

  const auto z = sample_bivariate(BivarParams::make(1, 1, 0.2, 0.2, 0), n, 18);
  const double mz1 = ts::mean(z.d), mz2 = ts::mean(z.s);
  double cz = 0;
  for (std::size_t i = 0; i < n; ++i) cz += (z.d[i] - mz1) * (z.s[i] - mz2);
  CHECK(std::fabs(cz / (n - 1) / std::sqrt(ts::variance(z.d) * ts::variance(z.s))) <= 0.005);
}

TEST_CASE("samples are bit-identical across worker counts and ISAs") {
  const auto p = BivarParams::make(1, 1, 0.37, 0.37, -0.3);
  const std::size_t n = 5 * kBlockSize + 123;
  set_thread_count(1);
  const auto a = sample_ratio(p, n, 99);
  const auto path1 = simulate_path(config(GSpec::power_diff(2), n, 5));
  set_thread_count(4);
  const auto b = sample_ratio(p, n, 99);
  const auto path4 = simulate_path(config(GSpec::power_diff(2), n, 5));
  kernels::set_isa(kernels::Isa::Scalar);
  const auto c = sample_ratio(p, n, 99);
  const auto paths = simulate_path(config(GSpec::power_diff(2), n, 5));
  kernels::set_isa(kernels::Isa::Avx2);
  set_thread_count(0);
  CHECK(same_bits(a.r, b.r));
  CHECK(same_bits(a.r, c.r));
  CHECK(same_bits(path1.log_prices, path4.log_prices));
  CHECK(same_bits(path1.log_prices, paths.log_prices));
  CHECK(path1.meta.rejections == path4.meta.rejections);
}

TEST_CASE("chunked increments concatenate to the full run") {
  const auto cfg = config(GSpec::sym_basic(), 50000, 12);
  std::vector<double> whole(cfg.n_steps), parts(cfg.n_steps);
  IncrementStats s1, s2;
  simulate_increments(cfg, 0, whole, s1);
  simulate_increments(cfg, 0, std::span(parts).first(20000), s2);
  simulate_increments(cfg, 20000, std::span(parts).subspan(20000), s2);
  CHECK(same_bits(whole, parts));
  CHECK(s1.rejections == s2.rejections);
}

TEST_CASE("ratio samples") {
  const auto tight = sample_ratio(BivarParams::make(1, 1, 0.1, 0.1, -1), 1'000'000, 1);
  CHECK(tight.nonpositive_s == 0);
  for (double v : tight.r) REQUIRE(v > 0);

  // exchange symmetry: R and 1/R have the same law
  const auto p = BivarParams::make(1, 1, 0.3, 0.3, -0.5);
  const auto a = sample_ratio(p, 1'000'000, 2);
  auto b = sample_ratio(p, 1'000'000, 3).r;
  for (double& v : b) v = 1.0 / v;
  CHECK(ts::ks_two_sample(a.r, b) <= 0.002);
}

TEST_CASE("simulate_path basics") {
  auto cfg = config(GSpec::sym_basic(), 10000, 4);
  cfg.params = BivarParams::make(1, 1, 1e-9, 1e-9, -1);
  const auto ps = simulate_path(cfg);
  REQUIRE(ps.size() == cfg.n_steps + 1);
  for (std::size_t i = 0; i < ps.size(); ++i) CHECK(std::fabs(ps.price(i) / cfg.p0 - 1) <= 1e-6);
  CHECK(ps.times.back() == doctest::Approx(100.0));

  const auto fat = simulate_path(config(GSpec::power_diff(3), 100000, 4));
  for (double lp : fat.log_prices) REQUIRE(std::isfinite(lp));
  CHECK(fat.meta.rejections > 0);
  CHECK(fat.meta.config_hash == config(GSpec::power_diff(3), 100000, 4).hash());
}

TEST_CASE("excess demand drifts prices up at the rate E[G(R)]") {
  auto cfg = config(GSpec::sym_basic(), 100000, 8);
  cfg.params = BivarParams::make(1.2, 1.0, 0.05, 0.05, -1);
  const auto ps = simulate_path(cfg);
  const auto inc = log_increments(ps);
  const double c = cfg.dt / cfg.tau0;
  // oracle: E[G(R)] from an independent generator, 1e7 draws
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> nd;
  double sum = 0;
  const int n = 10'000'000;
  for (int i = 0; i < n; ++i) {
    const double z = nd(gen);
    const double r = (1.2 + 0.05 * z) / (1.0 - 0.05 * z);
    sum += 0.5 * (r - 1 / r);
  }
  const double want = c * sum / n;
  const double se = std::sqrt(ts::variance(inc) / inc.size());
  CHECK(want > 0);
  CHECK(std::fabs(ts::mean(inc) - want) <= 3 * se);
  CHECK(ps.price(ps.size() - 1) > ps.price(0));
}

TEST_CASE("step distribution matches the transform density") {
  const auto cfg = config(GSpec::power_diff(2), 1'000'000, 6);
  const auto steps = log_increments(simulate_path(cfg), cfg.dt / cfg.tau0);
  auto f = [&](double y) { return transform_density(cfg.params, cfg.gspec, y); };
  CHECK(ts::binned_l1(steps, f, -30, 30, 300) <= 0.02);
}

TEST_CASE("rejection policies") {
  auto cfg = config(GSpec::sym_basic(), 100000, 9);
  cfg.policy = RejectionPolicy::AbortOnNonpositiveR;
  CHECK_THROWS_AS(simulate_path(cfg), PolicyError);
  cfg.policy = RejectionPolicy::ResampleNonpositiveR;
  cfg.params = BivarParams::make(1, 1, 0.6, 0.6, -1);  // ~10% of draws have R <= 0
  CHECK_THROWS_AS(simulate_path(cfg), PolicyError);
  cfg.max_rejection_rate = 0.5;
  const auto ps = simulate_path(cfg);
  for (double lp : ps.log_prices) CHECK(std::isfinite(lp));
  CHECK(double(ps.meta.rejections) / cfg.n_steps > 0.05);
  cfg.dt = 2.0;
  CHECK_THROWS_AS(simulate_path(cfg), DomainError);
}

TEST_CASE("GBM") {
  const auto flat = simulate_gbm(0.05, 0.0, 0.01, 1000, 1.0, 1);
  for (std::size_t k = 0; k < flat.size(); ++k)
    CHECK(flat.price(k) == std::exp(0.05 * double(k) * 0.01));
  const auto g = simulate_gbm(0.0, 0.2, 0.01, 100000, 1.0, 2);
  const auto r = log_increments(g);
  const double m = ts::mean(r), v = ts::variance(r);
  double s3 = 0, s4 = 0;
  for (double x : r) {
    s3 += std::pow(x - m, 3);
    s4 += std::pow(x - m, 4);
  }
  const double n = double(r.size());
  const double skew = s3 / n / std::pow(v, 1.5), kurt = s4 / n / (v * v) - 3.0;
  const double jb = n / 6.0 * (skew * skew + kurt * kurt / 4.0);
  CHECK(std::exp(-jb / 2.0) > 1e-3);  // chi-square(2) survival
  CHECK(v == doctest::Approx(0.04 * 0.01).epsilon(0.02));
  CHECK(same_bits(g.log_prices, simulate_gbm(0.0, 0.2, 0.01, 100000, 1.0, 2).log_prices));
  CHECK_THROWS_AS(simulate_gbm(0, -1, 0.01, 10, 1, 1), DomainError);
}

TEST_CASE("price CSV round trip") {
  const auto ps = simulate_path(config(GSpec::sym_basic(), 1000, 3));
  const auto back = PriceSeries::from_csv_text(ps.to_csv());
  REQUIRE(back.size() == ps.size());
  CHECK(ps.to_csv().rfind("t,price\n", 0) == 0);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    CHECK(back.times[i] == ps.times[i]);
    CHECK(std::fabs(back.log_prices[i] - ps.log_prices[i]) <= 4e-16 * (1 + std::fabs(ps.log_prices[i])));
  }
  // far beyond the double range: written as log prices, exact round trip
  PriceSeries huge = ps;
  huge.log_prices[10] = 5000.0;
  const std::string text = huge.to_csv();
  CHECK(text.rfind("t,log_price\n", 0) == 0);
  CHECK(PriceSeries::from_csv_text(text).log_prices == huge.log_prices);
  CHECK_THROWS_AS(PriceSeries::from_csv_text("t,price\n0,1\n0,2\n"), InputError);
  CHECK_THROWS_AS(PriceSeries::from_csv_text("t,price\n0,1\n1,-2\n"), InputError);
  CHECK_THROWS_AS(PriceSeries::from_csv_text("t,foo\n0,1\n"), InputError);
}
