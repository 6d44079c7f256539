#pragma once

// Oracles and statistics shared by the unit tests. Deliberately independent
// of the library's own numerics where that matters (std::erfc, std::mt19937).

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace testsupport {

inline double Phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Hinkley (1969) closed form for the density of D/S, -1 < rho < 1.
inline double hinkley_density(double mu1, double mu2, double s1, double s2, double rho,
                              double x) {
  const double r2 = 1.0 - rho * rho;
  const double a = std::sqrt(x * x / (s1 * s1) - 2 * rho * x / (s1 * s2) + 1 / (s2 * s2));
  const double b = mu1 * x / (s1 * s1) - rho * (mu1 + mu2 * x) / (s1 * s2) + mu2 / (s2 * s2);
  const double c = mu1 * mu1 / (s1 * s1) - 2 * rho * mu1 * mu2 / (s1 * s2) + mu2 * mu2 / (s2 * s2);
  const double d = std::exp((b * b - c * a * a) / (2 * r2 * a * a));
  const double t = b / (std::sqrt(r2) * a);
  return b * d / (std::sqrt(2 * std::numbers::pi) * s1 * s2 * a * a * a) * (Phi(t) - Phi(-t)) +
         std::sqrt(r2) / (std::numbers::pi * s1 * s2 * a * a) * std::exp(-c / (2 * r2));
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  return GK::integrate(f, a, b, 12, tol);
}

// L1 distance between the empirical law of `samples` and a density, over
// `bins` equal bins spanning the sample's [q_lo, q_hi] quantiles; bin masses
// of the density come from quadrature, mass outside the bins is compared too.
inline double binned_l1(std::vector<double> samples, const std::function<double(double)>& f,
                        double lo, double hi, int bins, double total_mass = 1.0,
                        std::vector<double> extra_edges = {}) {
  std::vector<double> edges;
  for (int i = 0; i <= bins; ++i) edges.push_back(lo + (hi - lo) * i / bins);
  for (double e : extra_edges) edges.push_back(e);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  std::sort(samples.begin(), samples.end());
  const double n = double(samples.size());
  double l1 = 0.0, inside_model = 0.0, inside_emp = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const auto a = std::lower_bound(samples.begin(), samples.end(), edges[i]);
    const auto b = std::lower_bound(samples.begin(), samples.end(), edges[i + 1]);
    const double emp = double(b - a) / n;
    const double mod = integrate(f, edges[i], edges[i + 1]);
    l1 += std::fabs(emp - mod);
    inside_model += mod;
    inside_emp += emp;
  }
  return l1 + std::fabs((total_mass - inside_model) - (1.0 - inside_emp));
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::fabs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

inline std::vector<double> pareto(std::size_t n, double alpha, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = std::pow(1.0 - u(gen), -1.0 / alpha);
  return x;
}

inline std::vector<double> exponential(std::size_t n, double rate, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = -std::log(1.0 - u(gen)) / rate;
  return x;
}

inline double mean(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v;
  return s / double(x.size());
}

inline double variance(std::span<const double> x) {
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / double(x.size() - 1);
}

}  // namespace testsupport
