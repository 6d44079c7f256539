#include "symprice/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "symprice/error.hpp"
#include "symprice/normal.hpp"

namespace symprice {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

// Standardised variable t spans [-kSpan, kSpan]; phi(40) ~ 1e-348.
constexpr double kSpan = 40.0;

void check_sigmas(const BivarParams& p) {
  if (!(p.sigma1 > 0.0) || !(p.sigma2 > 0.0) || !std::isfinite(p.sigma1) ||
      !std::isfinite(p.sigma2))
    throw DomainError("BivarParams: sigma1 and sigma2 must be positive");
  if (!(p.rho >= -1.0 && p.rho < 1.0))
    throw DomainError(fmt::format("BivarParams: rho = {} outside [-1, 1)", p.rho));
}

// integral of |a + w t| phi(t) dt over the truncated real line
double abs_affine_gauss(double a, double w, unsigned depth, double* err) {
  auto f = [&](double t) { return std::fabs(a + w * t) * normal_pdf(t); };
  const double kink = -a / w;
  double e1 = 0.0, e2 = 0.0, total = 0.0;
  if (kink > -kSpan && kink < kSpan) {
    total = GK::integrate(f, -kSpan, kink, depth, 1e-13, &e1) +
            GK::integrate(f, kink, kSpan, depth, 1e-13, &e2);
  } else {
    total = GK::integrate(f, -kSpan, kSpan, depth, 1e-13, &e1);
  }
  *err = e1 + e2;
  return total;
}

}  // namespace

BivarParams BivarParams::make(double mu1, double mu2, double sigma1, double sigma2,
                              double rho) {
  BivarParams p{mu1, mu2, sigma1, sigma2, rho};
  p.validate();
  return p;
}

void BivarParams::validate() const {
  if (!(mu1 > 0.0) || !(mu2 > 0.0) || !std::isfinite(mu1) || !std::isfinite(mu2))
    throw DomainError("BivarParams: mu1 and mu2 must be strictly positive");
  check_sigmas(*this);
}

KeyValues BivarParams::to_kv(std::string_view prefix) const {
  KeyValues kv;
  const std::string p(prefix);
  kv.set(p + "mu1", mu1);
  kv.set(p + "mu2", mu2);
  kv.set(p + "sigma1", sigma1);
  kv.set(p + "sigma2", sigma2);
  kv.set(p + "rho", rho);
  return kv;
}

double ratio_density_anticorr(const BivarParams& p, double x) {
  if (!p.anticorrelated())
    throw BranchError(fmt::format("exact density needs rho = -1, got {}", p.rho));
  check_sigmas(p);
  const double den = p.sigma2 * x + p.sigma1;
  if (den == 0.0) return 0.0;  // removable singularity at x = -sigma1/sigma2
  const double z = (p.mu2 * x - p.mu1) / den;
  const double c = std::fabs(p.mu1 * p.sigma2 + p.mu2 * p.sigma1) *
                   (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
  return c * std::exp(-0.5 * z * z) / (den * den);
}

double ratio_density(const BivarParams& p, double x, const QuadOptions& opt) {
  if (p.anticorrelated())
    throw BranchError("rho = -1: use ratio_density_anticorr (degenerate pair)");
  check_sigmas(p);
  if (!std::isfinite(x)) return 0.0;
  const double r2 = 1.0 - p.rho * p.rho;
  const double s1 = p.sigma1, s2 = p.sigma2;
  // exponent of phi2(xs, s) is -(A s^2 - 2 B s + C) / 2
  const double A = (x * x / (s1 * s1) - 2.0 * p.rho * x / (s1 * s2) + 1.0 / (s2 * s2)) / r2;
  const double B =
      (x * p.mu1 / (s1 * s1) - p.rho * (x * p.mu2 + p.mu1) / (s1 * s2) + p.mu2 / (s2 * s2)) /
      r2;
  const double C = (p.mu1 * p.mu1 / (s1 * s1) - 2.0 * p.rho * p.mu1 * p.mu2 / (s1 * s2) +
                    p.mu2 * p.mu2 / (s2 * s2)) /
                   r2;
  const double centre = B / A;
  const double w = 1.0 / std::sqrt(A);
  const double floor_q = std::max(0.0, C - B * centre);
  // |s| e^{-A (s - centre)^2 / 2} ds = w sqrt(2 pi) |centre + w t| phi(t) dt
  const double scale = std::exp(-0.5 * floor_q) * w /
                       (std::sqrt(2.0 * std::numbers::pi) * s1 * s2 * std::sqrt(r2));
  double err = 0.0;
  const double I = abs_affine_gauss(centre, w, opt.max_depth, &err);
  if (!(err * scale <= opt.abs_tol) || !std::isfinite(I))
    throw ConvergenceError(fmt::format(
        "ratio_density: quadrature error {} exceeds {} at x = {} (integral {}, scale {})",
        err * scale, opt.abs_tol, x, I, scale));
  return scale * I;
}

double ratio_pdf(const BivarParams& p, double x) {
  return p.anticorrelated() ? ratio_density_anticorr(p, x) : ratio_density(p, x);
}

double prob_ratio_positive(const BivarParams& p) {
  check_sigmas(p);
  const double a = -p.mu1 / p.sigma1;  // D > 0  <=>  Z1 > a
  const double b = p.mu2 / p.sigma2;
  if (p.anticorrelated()) {
    // S = mu2 - sigma2 Z1, so S > 0 <=> Z1 < b
    return std::fabs(1.0 - normal_sf(b) - normal_cdf(a));
  }
  const double r = std::sqrt(1.0 - p.rho * p.rho);
  auto pos = [&](double z) { return normal_pdf(z) * normal_cdf((b + p.rho * z) / r); };
  auto neg = [&](double z) { return normal_pdf(z) * normal_sf((b + p.rho * z) / r); };
  const double lo = std::clamp(a, -kSpan, kSpan);
  double e1 = 0.0, e2 = 0.0;
  const double both_pos = GK::integrate(pos, lo, kSpan, 20, 1e-13, &e1);
  const double both_neg = GK::integrate(neg, -kSpan, lo, 20, 1e-13, &e2);
  return both_pos + both_neg;
}

double transform_density(const Density& base, double positive_mass, const GSpec& spec,
                         double y) {
  if (!std::isfinite(y)) throw DomainError("transform_density: y must be finite");
  if (!(positive_mass > 0.0)) throw DomainError("transform_density: P{R > 0} is zero");
  const double x = invert_increasing([&](double t) { return eval_g(spec, t); }, y);
  const double slope = eval_g_deriv(spec, x, 1);
  const double f = base(x);
  if (f == 0.0) return 0.0;
  return f / slope / positive_mass;
}

double transform_density(const BivarParams& p, const GSpec& spec, double y) {
  return transform_density([&](double x) { return ratio_pdf(p, x); }, prob_ratio_positive(p),
                           spec, y);
}

double power_map_density(const Density& base, double positive_mass, double q, double y) {
  if (!(q > 0.0)) throw DomainError("power_map_density: q must be positive");
  if (!(y > 0.0)) return 0.0;
  const double x = std::pow(y, 1.0 / q);
  return base(x) * (1.0 / q) * std::pow(y, 1.0 / q - 1.0) / positive_mass;
}

// ---------------------------------------------------------------------------

std::string_view method_name(DensityCurve::Method m) noexcept {
  switch (m) {
    case DensityCurve::Method::ExactAnticorr: return "exact";
    case DensityCurve::Method::Quadrature: return "quadrature";
    case DensityCurve::Method::Empirical: return "empirical";
    case DensityCurve::Method::Transform: return "transform";
  }
  return "?";
}

double trapezoid(std::span<const double> x, std::span<const double> f) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

std::string DensityCurve::to_csv() const {
  std::string out = "x,f,method\n";
  const auto m = method_name(method);
  for (std::size_t i = 0; i < grid.size(); ++i)
    out += fmt::format("{},{},{}\n", format_double(grid[i]), format_double(values[i]), m);
  return out;
}

namespace {

void check_grid(const std::vector<double>& g) {
  if (g.empty()) throw InputError("density grid is empty");
  for (std::size_t i = 1; i < g.size(); ++i)
    if (!(g[i] > g[i - 1])) throw InputError("density grid must be strictly increasing");
}

}  // namespace

DensityCurve ratio_density_curve(const BivarParams& p, std::vector<double> grid) {
  check_grid(grid);
  DensityCurve c;
  c.method = p.anticorrelated() ? DensityCurve::Method::ExactAnticorr
                                : DensityCurve::Method::Quadrature;
  c.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) c.values[i] = ratio_pdf(p, grid[i]);
  c.grid = std::move(grid);
  c.mass = trapezoid(c.grid, c.values);
  return c;
}

DensityCurve transform_density_curve(const BivarParams& p, const GSpec& spec,
                                     std::vector<double> grid) {
  check_grid(grid);
  const double mass = prob_ratio_positive(p);
  const Density base = [&](double x) { return ratio_pdf(p, x); };
  DensityCurve c;
  c.method = DensityCurve::Method::Transform;
  c.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    c.values[i] = transform_density(base, mass, spec, grid[i]);
  c.grid = std::move(grid);
  c.mass = trapezoid(c.grid, c.values);
  return c;
}

DensityCurve histogram_density(std::span<const double> samples, std::span<const double> edges,
                               double total) {
  if (edges.size() < 2) throw InputError("histogram: need at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw InputError("histogram edges must increase");
  const std::size_t bins = edges.size() - 1;
  std::vector<double> counts(bins, 0.0);
  for (double v : samples) {
    if (!(v >= edges.front() && v < edges.back())) continue;
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    counts[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0;
  }
  if (total <= 0.0) total = static_cast<double>(samples.size());
  DensityCurve c;
  c.method = DensityCurve::Method::Empirical;
  c.grid.resize(bins);
  c.values.resize(bins);
  double in = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    const double w = edges[i + 1] - edges[i];
    c.grid[i] = 0.5 * (edges[i] + edges[i + 1]);
    c.values[i] = counts[i] / (total * w);
    in += counts[i];
  }
  c.mass = in / total;
  return c;
}

// ---------------------------------------------------------------------------

KeyValues TailPrediction::to_kv() const {
  KeyValues kv;
  kv.set("tail.kind", std::string(tail_kind_name(tail.kind)));
  kv.set("tail.value", tail.value);
  kv.set("tail.describe", tail.describe());
  kv.set("prefactor", prefactor);
  kv.set("prefactor.drift", drift);
  std::string ys, ss;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (i) {
      ys += ';';
      ss += ';';
    }
    ys += format_double(y[i]);
    ss += format_double(scaled[i]);
  }
  kv.set("prefactor.points", ys);
  kv.set("prefactor.samples", ss);
  return kv;
}

TailPrediction tail_prediction(const BivarParams& p, const GSpec& spec) {
  check_sigmas(p);
  TailPrediction out;
  out.tail = predicted_tail(spec);
  const double mass = prob_ratio_positive(p);
  const Density base = [&](double x) { return ratio_pdf(p, x); };
  for (double r : {1e3, 1e4, 1e5, 1e6}) {
    const double y = eval_g(spec, r);
    const double f = transform_density(base, mass, spec, y);
    double shape_inv = 1.0;  // 1 / shape(y)
    switch (out.tail.kind) {
      case TailClass::Kind::PowerLaw:
        shape_inv = std::pow(y, out.tail.value);
        break;
      case TailClass::Kind::Exponential:
        shape_inv = std::exp(out.tail.value * y);
        break;
      case TailClass::Kind::StretchedExponential: {
        const double pp = out.tail.value;
        shape_inv = std::pow(y, 1.0 - pp) * std::exp(std::pow(y, pp));
        break;
      }
    }
    out.y.push_back(y);
    out.scaled.push_back(f * shape_inv);
  }
  out.prefactor = out.scaled.back();
  const double prev = out.scaled[out.scaled.size() - 2];
  out.drift = std::fabs(out.prefactor - prev) / std::fabs(out.prefactor);
  return out;
}

double log_slope(const Density& f, double a, double b, bool semilog, int points) {
  if (!(b > a) || points < 2) throw DomainError("log_slope: need b > a and >= 2 points");
  if (!semilog && !(a > 0.0)) throw DomainError("log_slope: log-log needs a > 0");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < points; ++i) {
    const double t = double(i) / (points - 1);
    const double u = semilog ? a + t * (b - a) : std::log(a) + t * (std::log(b) - std::log(a));
    const double x = semilog ? u : std::exp(u);
    const double v = std::log(f(x));
    sx += u;
    sy += v;
    sxx += u * u;
    sxy += u * v;
  }
  const double n = points;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace symprice
