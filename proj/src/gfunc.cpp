#include "symprice/gfunc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

// Boost 1.74's pchip calls isnan unqualified.
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>
#include <fmt/format.h>

#include "symprice/csv.hpp"
#include "symprice/error.hpp"
#include "symprice/kernels.hpp"

namespace symprice {

namespace {

void require_positive(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError(fmt::format("G is defined on x > 0, got x = {}", x));
}

// log cosh(a) without overflow.
double log_cosh(double a) {
  a = std::fabs(a);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

// log |2 sinh(a)|
double log_abs_two_sinh(double a) {
  a = std::fabs(a);
  return a + std::log(-std::expm1(-2.0 * a));
}

double signed_root(double y, double q) {
  if (q == 1.0) return y;
  if (q == 3.0) return std::cbrt(y);
  return std::copysign(std::pow(std::fabs(y), 1.0 / q), y);
}

double power(double x, const GSpec& s) {
  const int qi = s.integer_param();
  return qi != 0 ? kernels::ipow(x, qi) : std::pow(x, s.param);
}

double raw_g(const GSpec& s, double x) {
  switch (s.family) {
    case Family::SymBasic:
      return 0.5 * (x - 1.0 / x);
    case Family::PowerDiff: {
      const double p = power(x, s);
      return p - 1.0 / p;
    }
    case Family::OddPowerOfDiff:
      return kernels::ipow(x - 1.0 / x, s.integer_param());
    case Family::LogPower:
      return kernels::ipow(std::log(x), s.integer_param());
    case Family::Log:
      return std::log(x);
  }
  return 0.0;
}

double raw_deriv(const GSpec& s, double x, int order) {
  const double q = s.param;
  switch (s.family) {
    case Family::SymBasic:
      return order == 1 ? 0.5 * (1.0 + 1.0 / (x * x)) : -1.0 / (x * x * x);
    case Family::PowerDiff:
      if (order == 1) return q * (std::pow(x, q - 1.0) + std::pow(x, -q - 1.0));
      return q * ((q - 1.0) * std::pow(x, q - 2.0) - (q + 1.0) * std::pow(x, -q - 2.0));
    case Family::OddPowerOfDiff: {
      const int qi = s.integer_param();
      const double h = x - 1.0 / x;
      const double dh = 1.0 + 1.0 / (x * x);
      const double hq1 = qi == 1 ? 1.0 : kernels::ipow(h, qi - 1);
      if (order == 1) return q * hq1 * dh;
      const double hq2 = qi <= 2 ? (qi == 2 ? 1.0 : 0.0) : kernels::ipow(h, qi - 2);
      return q * (q - 1.0) * hq2 * dh * dh + q * hq1 * (-2.0 / (x * x * x));
    }
    case Family::LogPower: {
      const int qi = s.integer_param();
      const double l = std::log(x);
      const double lq1 = qi == 1 ? 1.0 : kernels::ipow(l, qi - 1);
      if (order == 1) return q * lq1 / x;
      const double lq2 = qi <= 2 ? (qi == 2 ? 1.0 : 0.0) : kernels::ipow(l, qi - 2);
      return q * ((q - 1.0) * lq2 - lq1) / (x * x);
    }
    case Family::Log:
      return order == 1 ? 1.0 / x : -1.0 / (x * x);
  }
  return 0.0;
}

double normaliser(const GSpec& s) {
  if (!s.normalize) return 1.0;
  const double c = unit_slope(s);
  if (!(c > 0.0))
    throw DomainError(fmt::format("{} has G'(1) = 0 and cannot be normalised", s.label()));
  return c;
}

}  // namespace

std::string_view family_name(Family f) noexcept {
  switch (f) {
    case Family::SymBasic: return "SymBasic";
    case Family::PowerDiff: return "PowerDiff";
    case Family::OddPowerOfDiff: return "OddPowerOfDiff";
    case Family::LogPower: return "LogPower";
    case Family::Log: return "Log";
  }
  return "?";
}

std::optional<Family> parse_family(std::string_view n) noexcept {
  if (n == "SymBasic" || n == "sym") return Family::SymBasic;
  if (n == "PowerDiff" || n == "power") return Family::PowerDiff;
  if (n == "OddPowerOfDiff" || n == "oddpow") return Family::OddPowerOfDiff;
  if (n == "LogPower" || n == "logpow") return Family::LogPower;
  if (n == "Log" || n == "log") return Family::Log;
  return std::nullopt;
}

GSpec GSpec::log_power_from_p(double p) {
  if (!(p > 0.0)) throw DomainError("LogPower: p must be positive");
  const double inv = 1.0 / p;
  const double q = std::round(inv);
  if (std::fabs(inv - q) > 1e-9 * q || static_cast<long>(q) % 2 == 0)
    throw DomainError(fmt::format("LogPower: 1/p = {} is not an odd positive integer", inv));
  return {Family::LogPower, q};
}

bool GSpec::uses_param() const noexcept {
  return family == Family::PowerDiff || family == Family::OddPowerOfDiff ||
         family == Family::LogPower;
}

int GSpec::integer_param() const noexcept {
  if (!uses_param()) return 1;
  const double r = std::round(param);
  if (r >= 1.0 && r <= 64.0 && r == param) return static_cast<int>(r);
  return 0;
}

void GSpec::validate() const {
  if (!uses_param()) return;
  if (!(param > 0.0) || !std::isfinite(param))
    throw DomainError(fmt::format("{}: parameter must be positive, got {}",
                                  family_name(family), param));
  if (family == Family::OddPowerOfDiff || family == Family::LogPower) {
    const int qi = integer_param();
    if (qi == 0 || qi % 2 == 0)
      throw DomainError(fmt::format("{}: q must be an odd positive integer, got {}",
                                    family_name(family), param));
  }
}

std::string GSpec::label() const {
  std::string out(family_name(family));
  if (uses_param()) out += fmt::format("(q={:g})", param);
  if (normalize) out += "[normalized]";
  return out;
}

double unit_slope(const GSpec& spec) {
  spec.validate();
  return raw_deriv(spec, 1.0, 1);
}

double eval_g(const GSpec& spec, double x) {
  spec.validate();
  require_positive(x);
  const double g = raw_g(spec, x);
  return spec.normalize ? g / normaliser(spec) : g;
}

double eval_g_deriv(const GSpec& spec, double x, int order) {
  spec.validate();
  require_positive(x);
  if (order != 1 && order != 2) throw DomainError("derivative order must be 1 or 2");
  const double d = raw_deriv(spec, x, order);
  return spec.normalize ? d / normaliser(spec) : d;
}

void eval_g_batch(const GSpec& spec, std::span<const double> x, std::span<double> out) {
  spec.validate();
  if (out.size() < x.size()) throw DomainError("eval_g_batch: output span too small");
  for (double v : x) require_positive(v);
  const auto& k = kernels::active();
  const int qi = spec.integer_param();
  switch (spec.family) {
    case Family::SymBasic:
      k.sym_basic(x, out);
      break;
    case Family::PowerDiff:
      if (qi != 0) {
        k.power_diff_int(x, qi, out);
      } else {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = raw_g(spec, x[i]);
      }
      break;
    case Family::OddPowerOfDiff:
      k.odd_power_int(x, qi, out);
      break;
    default:
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = raw_g(spec, x[i]);
  }
  if (spec.normalize) {
    const double c = normaliser(spec);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = out[i] / c;
  }
}

double log_inverse_g(const GSpec& spec, double y) {
  spec.validate();
  if (!std::isfinite(y)) throw DomainError("G^{-1}: argument must be finite");
  if (spec.normalize) y *= normaliser(spec);
  switch (spec.family) {
    case Family::SymBasic:
      return std::asinh(y);
    case Family::PowerDiff:
      return std::asinh(0.5 * y) / spec.param;
    case Family::OddPowerOfDiff:
      return std::asinh(0.5 * signed_root(y, spec.param));
    case Family::LogPower:
      return signed_root(y, spec.param);
    case Family::Log:
      return y;
  }
  return 0.0;
}

double inverse_g(const GSpec& spec, double y) { return std::exp(log_inverse_g(spec, y)); }

double log_g_prime_at_log(const GSpec& spec, double ell) {
  spec.validate();
  const double q = spec.param;
  double v = 0.0;
  switch (spec.family) {
    case Family::SymBasic:
      v = -ell + log_cosh(ell);
      break;
    case Family::PowerDiff:
      v = std::log(2.0 * q) - ell + log_cosh(q * ell);
      break;
    case Family::OddPowerOfDiff:
      v = std::log(2.0 * q) + (q - 1.0) * log_abs_two_sinh(ell) - ell + log_cosh(ell);
      if (q == 1.0) v = std::log(2.0) - ell + log_cosh(ell);
      break;
    case Family::LogPower:
      v = std::log(q) + (q == 1.0 ? 0.0 : (q - 1.0) * std::log(std::fabs(ell))) - ell;
      break;
    case Family::Log:
      v = -ell;
      break;
  }
  return spec.normalize ? v - std::log(normaliser(spec)) : v;
}

double invert_increasing(const std::function<double(double)>& g, double y,
                         double rel_tol) {
  double lo = 0.5, hi = 2.0;
  int expand = 0;
  while (g(lo) > y) {
    lo *= lo;  // geometric in log x: log lo doubles
    if (++expand > 12 || lo == 0.0)
      throw ConvergenceError(fmt::format("G^-1({}): no lower bracket", y));
  }
  expand = 0;
  while (g(hi) < y) {
    hi *= hi;
    if (++expand > 12 || !std::isfinite(hi))
      throw ConvergenceError(fmt::format("G^-1({}): no upper bracket", y));
  }
  double a = std::log(lo), b = std::log(hi);
  for (int it = 0; it < 400; ++it) {
    const double m = 0.5 * (a + b);
    if (g(std::exp(m)) < y) a = m; else b = m;
    // relative tolerance on x = exp(ell) translates to absolute on ell
    if (b - a <= rel_tol) break;
  }
  return std::exp(0.5 * (a + b));
}

// ---------------------------------------------------------------------------

std::string_view tail_kind_name(TailClass::Kind k) noexcept {
  switch (k) {
    case TailClass::Kind::PowerLaw: return "PowerLaw";
    case TailClass::Kind::Exponential: return "Exponential";
    case TailClass::Kind::StretchedExponential: return "StretchedExponential";
  }
  return "?";
}

std::optional<TailClass::Kind> parse_tail_kind(std::string_view n) noexcept {
  if (n == "PowerLaw" || n == "power") return TailClass::Kind::PowerLaw;
  if (n == "Exponential" || n == "exp") return TailClass::Kind::Exponential;
  if (n == "StretchedExponential" || n == "stretched")
    return TailClass::Kind::StretchedExponential;
  return std::nullopt;
}

std::string TailClass::describe() const {
  switch (kind) {
    case Kind::PowerLaw: return fmt::format("density tail x^{{-{:.6g}}}", value);
    case Kind::Exponential:
      return value == 1.0 ? std::string("density tail e^{-x}")
                          : fmt::format("density tail e^{{-{:.6g}x}}", value);
    case Kind::StretchedExponential:
      return fmt::format("density tail x^{{p-1}}e^{{-x^p}} (p={:.6g})", value);
  }
  return {};
}

TailClass predicted_tail(const GSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::SymBasic: return TailClass::power_law(2.0);
    case Family::PowerDiff:
    case Family::OddPowerOfDiff: return TailClass::power_law(1.0 + 1.0 / spec.param);
    case Family::LogPower:
      if (spec.param == 1.0) return TailClass::exponential(1.0);
      return TailClass::stretched(1.0 / spec.param);
    case Family::Log: return TailClass::exponential(1.0);
  }
  return {};
}

// ---------------------------------------------------------------------------
// TabulatedG

struct TabulatedG::Interp {
  boost::math::interpolators::pchip<std::vector<double>> pchip;
};

TabulatedG::TabulatedG(std::vector<double> x, std::vector<double> g)
    : x_(std::move(x)), g_(std::move(g)) {
  if (x_.size() != g_.size()) throw InputError("G table: x and g lengths differ");
  if (x_.size() < 4) throw InputError("G table: need at least four rows");
  for (std::size_t i = 0; i < x_.size(); ++i) {
    if (!(x_[i] > 0.0)) throw InputError(fmt::format("G table: x = {} is not positive", x_[i]));
    if (i > 0 && !(x_[i] > x_[i - 1]))
      throw InputError(fmt::format("G table: x not strictly increasing at row {}", i + 1));
    if (!std::isfinite(g_[i])) throw InputError("G table: non-finite g value");
  }
  auto xc = x_;
  auto gc = g_;
  interp_ = std::make_shared<const Interp>(
      Interp{boost::math::interpolators::pchip<std::vector<double>>(std::move(xc),
                                                                    std::move(gc))});
}

TabulatedG TabulatedG::from_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const auto xi = t.column("x");
  const auto gi = t.column("g");
  return TabulatedG(t.numeric(xi), t.numeric(gi));
}

double TabulatedG::operator()(double x) const {
  if (!(x >= x_.front() && x <= x_.back()))
    throw DomainError(fmt::format("G table: x = {} outside [{}, {}]", x, x_.front(), x_.back()));
  return interp_->pchip(x);
}

double TabulatedG::deriv(double x, int order) const {
  if (!(x >= x_.front() && x <= x_.back()))
    throw DomainError(fmt::format("G table: x = {} outside [{}, {}]", x, x_.front(), x_.back()));
  if (order == 1) return interp_->pchip.prime(x);
  const double h = 1e-6 * x;
  const double a = std::max(x_.front(), x - h), b = std::min(x_.back(), x + h);
  return (interp_->pchip.prime(b) - interp_->pchip.prime(a)) / (b - a);
}

// ---------------------------------------------------------------------------
// Condition G

namespace {

struct Evaluator {
  std::function<double(double)> g;
  std::function<double(double, int)> d;
  // Symbolic divergence of x G'(x) at both ends; nullopt for tabulations.
  std::optional<bool> diverges;
};

class Collector {
 public:
  Collector(CheckResult& r, std::size_t cap) : r_(r), cap_(cap) {}
  void fail(double x, double value, double magnitude) {
    r_.pass = false;
    if (r_.witnesses.size() < cap_) r_.witnesses.push_back({x, value});
    r_.worst = std::max(r_.worst, magnitude);
  }
  void observe(double magnitude) { r_.worst = std::max(r_.worst, magnitude); }

 private:
  CheckResult& r_;
  std::size_t cap_;
};

std::vector<double> validated_grid(std::span<const double> grid) {
  if (grid.empty()) throw InputError("Condition G: grid is empty");
  std::vector<double> g(grid.begin(), grid.end());
  for (double x : g)
    if (!(x > 0.0) || !std::isfinite(x))
      throw DomainError(fmt::format("Condition G: grid point {} is not positive", x));
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double prod = g[i] * g[n - 1 - i];
    if (std::fabs(prod - 1.0) > 1e-9)
      throw InputError(fmt::format(
          "Condition G: grid is not closed under reciprocation (1/{} missing)", g[i]));
  }
  return g;
}

ConditionGReport run_checks(std::string subject, const Evaluator& ev,
                            std::span<const double> grid_in, const ConditionGOptions& opt) {
  const std::vector<double> x = validated_grid(grid_in);
  const std::size_t n = x.size();
  const double tol = opt.identity_tol;

  ConditionGReport rep;
  rep.subject = std::move(subject);
  static constexpr const char* kNames[5] = {"i", "ii", "iii", "iv", "v"};
  for (int c = 0; c < 5; ++c) rep.conditions[c].name = kNames[c];
  rep.derivative_identity.name = "derivative_identity";
  rep.log_identity.name = "log_identity";
  rep.log_bound.name = "log_bound";

  std::vector<double> g(n), d1(n), d2(n), xg(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = ev.g(x[i]);
    d1[i] = ev.d(x[i], 1);
    d2[i] = ev.d(x[i], 2);
    xg[i] = x[i] * d1[i];
  }

  // (i) G(1) = 0
  {
    Collector c(rep.conditions[0], opt.max_witnesses);
    double g1 = std::numeric_limits<double>::quiet_NaN();
    try {
      g1 = ev.g(1.0);
    } catch (const DomainError& e) {
      rep.conditions[0].note = e.what();
    }
    if (!(std::fabs(g1) <= tol)) c.fail(1.0, g1, std::isnan(g1) ? INFINITY : std::fabs(g1));
    else c.observe(std::fabs(g1));
  }

  // (ii) G' > 0
  {
    Collector c(rep.conditions[1], opt.max_witnesses);
    for (std::size_t i = 0; i < n; ++i)
      if (!(d1[i] > 0.0)) c.fail(x[i], d1[i], -d1[i]);
  }

  // (iii) G(x) + G(1/x) = 0; the reciprocal partner of x[i] is x[n-1-i].
  {
    Collector c(rep.conditions[2], opt.max_witnesses);
    for (std::size_t i = n / 2; i < n; ++i) {
      const double r = g[i] + g[n - 1 - i];
      const double rel = std::fabs(r) / (1.0 + std::fabs(g[i]));
      if (rel > tol) c.fail(x[i], r, rel); else c.observe(rel);
    }
  }

  // (iv) x G'(x) grows toward both ends: strictly monotone on the outer
  // deciles, plus the family's symbolic limit when there is one.
  {
    CheckResult& r = rep.conditions[3];
    Collector c(r, opt.max_witnesses);
    const std::size_t tail = std::max<std::size_t>(2, n / 10);
    if (n < 4) {
      c.fail(x.back(), 0.0, 0.0);
      r.note = "grid too small for a decile test";
    } else {
      for (std::size_t i = n - tail; i + 1 < n; ++i) {
        const double step = xg[i + 1] - xg[i];
        if (!(step > 0.0)) c.fail(x[i + 1], step, -step);
      }
      for (std::size_t i = 0; i + 1 < tail; ++i) {
        const double step = xg[i] - xg[i + 1];
        if (!(step > 0.0)) c.fail(x[i], step, -step);
      }
    }
    if (ev.diverges.has_value()) {
      if (!*ev.diverges) {
        r.pass = false;
        r.note = "x G'(x) is bounded (symbolic)";
        if (r.witnesses.empty()) r.witnesses.push_back({x.back(), xg.back()});
      }
    } else {
      rep.grid_limited = true;
      r.note = "grid-limited: monotone growth on the outer deciles only";
    }
  }

  // (v) (x G')' = G' + x G'' is negative below 1 and positive above.
  {
    Collector c(rep.conditions[4], opt.max_witnesses);
    for (std::size_t i = 0; i < n; ++i) {
      if (x[i] == 1.0) continue;
      const double v = d1[i] + x[i] * d2[i];
      const double scale = std::fabs(d1[i]) + std::fabs(x[i] * d2[i]);
      const double signed_v = x[i] < 1.0 ? -v : v;
      if (!(signed_v > tol * scale)) c.fail(x[i], v, scale > 0 ? -signed_v / scale : 0.0);
    }
  }

  // x G'(x) = (1/x) G'(1/x)
  {
    Collector c(rep.derivative_identity, opt.max_witnesses);
    for (std::size_t i = n / 2; i < n; ++i) {
      const double a = xg[i], b = xg[n - 1 - i];
      const double scale = std::max(std::fabs(a), std::fabs(b));
      const double rel = scale > 0.0 ? std::fabs(a - b) / scale : 0.0;
      if (rel > opt.derivative_tol) c.fail(x[i], a - b, rel); else c.observe(rel);
    }
  }

  // x G'(x) = 1
  {
    Collector c(rep.log_identity, opt.max_witnesses);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::fabs(xg[i] - 1.0);
      if (e > opt.derivative_tol) c.fail(x[i], xg[i], e); else c.observe(e);
    }
  }

  // G(x) >= G'(1) log x for x > 1
  {
    Collector c(rep.log_bound, opt.max_witnesses);
    double slope1 = std::numeric_limits<double>::quiet_NaN();
    try {
      slope1 = ev.d(1.0, 1);
    } catch (const DomainError& e) {
      rep.log_bound.note = e.what();
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!(x[i] > 1.0)) continue;
      const double gap = g[i] - slope1 * std::log(x[i]);
      if (!(gap >= -tol * (1.0 + std::fabs(g[i])))) c.fail(x[i], gap, -gap);
    }
  }
  return rep;
}

}  // namespace

bool ConditionGReport::all_conditions_pass() const noexcept {
  for (const auto& c : conditions)
    if (!c.pass) return false;
  return true;
}

std::string ConditionGReport::to_text() const {
  std::string out = fmt::format("subject={}\n", subject);
  auto emit = [&](const CheckResult& c) {
    out += fmt::format("{}.status={}\n", c.name, c.pass ? "PASS" : "FAIL");
    out += fmt::format("{}.worst={}\n", c.name, format_double(c.worst));
    if (!c.witnesses.empty()) {
      std::string w;
      for (const auto& wi : c.witnesses) {
        if (!w.empty()) w += ';';
        w += format_double(wi.x) + ':' + format_double(wi.value);
      }
      out += fmt::format("{}.witnesses={}\n", c.name, w);
    }
    if (!c.note.empty()) out += fmt::format("{}.note={}\n", c.name, c.note);
  };
  for (const auto& c : conditions) emit(c);
  emit(derivative_identity);
  emit(log_identity);
  emit(log_bound);
  out += fmt::format("grid_limited={}\n", grid_limited ? "true" : "false");
  out += fmt::format("lower_confidence={}\n", lower_confidence ? "true" : "false");
  out += fmt::format("all_conditions={}\n", all_conditions_pass() ? "PASS" : "FAIL");
  return out;
}

ConditionGReport check_condition_g(const GSpec& spec, std::span<const double> grid,
                                   const ConditionGOptions& opt) {
  spec.validate();
  Evaluator ev;
  ev.g = [&](double x) { return eval_g(spec, x); };
  ev.d = [&](double x, int o) { return eval_g_deriv(spec, x, o); };
  // x G'(x) is q (log x)^(q-1) for LogPower and identically 1 for Log.
  ev.diverges = !(spec.family == Family::Log ||
                  (spec.family == Family::LogPower && spec.param == 1.0));
  return run_checks(spec.label(), ev, grid, opt);
}

ConditionGReport check_condition_g(const TabulatedG& table, std::span<const double> grid,
                                   const ConditionGOptions& opt) {
  Evaluator ev;
  ev.g = [&](double x) { return table(x); };
  ev.d = [&](double x, int o) { return table.deriv(x, o); };
  auto rep = run_checks("tabulated", ev, grid, opt);
  rep.lower_confidence = true;
  return rep;
}

std::vector<double> reciprocal_log_grid(double x_max, std::size_t half) {
  if (!(x_max > 1.0) || half == 0)
    throw DomainError("reciprocal_log_grid: need x_max > 1 and half >= 1");
  const double h = std::log(x_max) / static_cast<double>(half);
  std::vector<double> up(half);
  for (std::size_t k = 0; k < half; ++k) up[k] = std::exp(h * static_cast<double>(k + 1));
  up.back() = x_max;
  std::vector<double> out;
  out.reserve(2 * half + 1);
  for (std::size_t k = half; k-- > 0;) out.push_back(1.0 / up[k]);
  out.push_back(1.0);
  out.insert(out.end(), up.begin(), up.end());
  return out;
}

}  // namespace symprice
