#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "symprice/csv.hpp"
#include "symprice/gfunc.hpp"

namespace symprice {

/// Parameters of the bivariate normal order-flow pair (D, S).
struct BivarParams {
  double mu1 = 1.0;     // mean of D
  double mu2 = 1.0;     // mean of S
  double sigma1 = 0.2;  // sd of D
  double sigma2 = 0.2;  // sd of S
  double rho = -1.0;    // correlation, -1 <= rho < 1

  /// Validated constructor: positive means and sds, rho in [-1, 1).
  static BivarParams make(double mu1, double mu2, double sigma1, double sigma2, double rho);
  /// Skips the positivity checks on the means. For oracle tests only
  /// (e.g. the zero-mean Cauchy case).
  static BivarParams unchecked(double mu1, double mu2, double sigma1, double sigma2,
                               double rho) noexcept {
    return {mu1, mu2, sigma1, sigma2, rho};
  }

  void validate() const;
  bool anticorrelated() const noexcept { return rho == -1.0; }
  KeyValues to_kv(std::string_view prefix = {}) const;
  friend bool operator==(const BivarParams&, const BivarParams&) = default;
};

/// Closed-form density of R = D/S for rho = -1. Exactly 0 at x = -sigma1/sigma2.
/// Throws BranchError when rho != -1.
double ratio_density_anticorr(const BivarParams& p, double x);

struct QuadOptions {
  double abs_tol = 1e-10;
  unsigned max_depth = 20;
};

/// f_R(x) = integral of |s| phi2(xs, s) ds for -1 < rho < 1, by adaptive
/// Gauss-Kronrod split at the |s| kink. Throws BranchError for rho = -1 and
/// ConvergenceError when the error estimate exceeds abs_tol.
double ratio_density(const BivarParams& p, double x, const QuadOptions& opt = {});

/// Either branch, chosen from rho. Mean positivity is not required.
double ratio_pdf(const BivarParams& p, double x);

/// P{R > 0} = P{D and S share a sign}.
double prob_ratio_positive(const BivarParams& p);

using Density = std::function<double(double)>;

/// Density of G(R) given R > 0: f_R(G^{-1}(y)) / G'(G^{-1}(y)) / P{R > 0}.
/// G^{-1} comes from bracketed bisection to relative tolerance 1e-12.
double transform_density(const Density& base, double positive_mass, const GSpec& spec,
                         double y);
double transform_density(const BivarParams& p, const GSpec& spec, double y);

/// Density of R^q given R > 0 (the pure-power closed form):
/// f(y^{1/q}) (1/q) y^{1/q - 1} / P{R > 0}, zero for y <= 0.
double power_map_density(const Density& base, double positive_mass, double q, double y);

struct DensityCurve {
  enum class Method { ExactAnticorr, Quadrature, Empirical, Transform };
  std::vector<double> grid;
  std::vector<double> values;
  Method method = Method::Quadrature;
  /// Trapezoidal integral of values over grid.
  double mass = 0.0;

  bool mass_in_range(double lo = 0.98, double hi = 1.001) const noexcept {
    return mass >= lo && mass <= hi;
  }
  std::string to_csv() const;
};

std::string_view method_name(DensityCurve::Method m) noexcept;
double trapezoid(std::span<const double> x, std::span<const double> f);

/// Density of R on a strictly increasing grid.
DensityCurve ratio_density_curve(const BivarParams& p, std::vector<double> grid);
/// Density of G(R) given R > 0.
DensityCurve transform_density_curve(const BivarParams& p, const GSpec& spec,
                                     std::vector<double> grid);
/// Histogram density on bins [edges[i], edges[i+1]); grid = bin centres.
/// Normalised by `total` (defaults to the sample count) so that samples
/// outside the bins count as missing mass.
DensityCurve histogram_density(std::span<const double> samples, std::span<const double> edges,
                               double total = 0.0);

/// Predicted tail of G(R) with a numerical prefactor.
struct TailPrediction {
  TailClass tail;
  /// Estimated f0 in f(y) ~ f0 * shape(y); the last sampled value.
  double prefactor = 0.0;
  /// Relative change of the prefactor between the last two sample points.
  double drift = 0.0;
  std::vector<double> y;             // sample points (values of G)
  std::vector<double> scaled;        // f(y) / shape(y) at each point
  KeyValues to_kv() const;
};

TailPrediction tail_prediction(const BivarParams& p, const GSpec& spec);

/// Least-squares slope of log f against log x (or x when semilog).
double log_slope(const Density& f, double a, double b, bool semilog, int points = 41);

}  // namespace symprice
