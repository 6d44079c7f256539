#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace symprice {

/// Families of price-response functions G : R+ -> R.
///
///   SymBasic        G(x) = (x - 1/x) / 2
///   PowerDiff       G(x) = x^q - x^-q,          q > 0
///   OddPowerOfDiff  G(x) = (x - 1/x)^q,         q odd positive integer
///   LogPower        G(x) = (log x)^q,           q odd positive integer
///   Log             G(x) = log x
///
/// LogPower is also written G = (log x)^(1/p) with 1/p odd; the two
/// parameterisations are related by q = 1/p (see GSpec::log_power_from_p).
enum class Family { SymBasic, PowerDiff, OddPowerOfDiff, LogPower, Log };

std::string_view family_name(Family f) noexcept;
/// Accepts the names produced by family_name plus the short CLI aliases
/// sym, power, oddpow, logpow, log.
std::optional<Family> parse_family(std::string_view name) noexcept;

struct GSpec {
  Family family = Family::SymBasic;
  /// q for PowerDiff, OddPowerOfDiff and LogPower; ignored otherwise.
  double param = 1.0;
  /// Divide by G'(1) so that the normalised function has unit slope at 1.
  bool normalize = false;

  static GSpec sym_basic() { return {Family::SymBasic, 1.0}; }
  static GSpec power_diff(double q) { return {Family::PowerDiff, q}; }
  static GSpec odd_power_of_diff(int q) { return {Family::OddPowerOfDiff, double(q)}; }
  static GSpec log_power(int q) { return {Family::LogPower, double(q)}; }
  /// G = (log x)^(1/p); requires 1/p to be an odd positive integer.
  static GSpec log_power_from_p(double p);
  static GSpec log() { return {Family::Log, 1.0}; }

  bool uses_param() const noexcept;
  /// Throws DomainError when the invariants on param are violated.
  void validate() const;
  /// Integer exponent when param is an integer in [1, 64], otherwise 0.
  int integer_param() const noexcept;

  std::string label() const;
  friend bool operator==(const GSpec&, const GSpec&) = default;
};

/// G(x). Throws DomainError for x <= 0.
double eval_g(const GSpec& spec, double x);

/// Analytic first (order = 1) or second (order = 2) derivative.
double eval_g_deriv(const GSpec& spec, double x, int order);

/// G'(1) of the un-normalised family (the normalisation constant).
double unit_slope(const GSpec& spec);

/// Batched G over x > 0, dispatched to the SIMD kernels where a kernel
/// exists. Matches eval_g bit for bit.
void eval_g_batch(const GSpec& spec, std::span<const double> x, std::span<double> out);

/// log G^{-1}(y), closed form, finite for every finite y.
double log_inverse_g(const GSpec& spec, double y);
/// G^{-1}(y) = exp(log_inverse_g(spec, y)); may overflow to +inf.
double inverse_g(const GSpec& spec, double y);

/// log G'(x) evaluated at ell = log x, stable for |ell| up to ~700 * q.
double log_g_prime_at_log(const GSpec& spec, double ell);

/// Root of g(x) = y for a strictly increasing g on (0, inf), by bisection in
/// log x on a bracket expanded geometrically from [1/2, 2].
double invert_increasing(const std::function<double(double)>& g, double y,
                         double rel_tol = 1e-12);

/// Shape of the density tail of G(R) when R has an x^-2 density tail.
struct TailClass {
  enum class Kind { PowerLaw, Exponential, StretchedExponential };
  Kind kind = Kind::PowerLaw;
  /// density exponent (PowerLaw), rate (Exponential) or p (Stretched).
  double value = 0.0;

  static TailClass power_law(double density_exponent) {
    return {Kind::PowerLaw, density_exponent};
  }
  static TailClass exponential(double rate) { return {Kind::Exponential, rate}; }
  static TailClass stretched(double p) { return {Kind::StretchedExponential, p}; }

  std::string describe() const;
  friend bool operator==(const TailClass&, const TailClass&) = default;
};

std::string_view tail_kind_name(TailClass::Kind k) noexcept;
std::optional<TailClass::Kind> parse_tail_kind(std::string_view name) noexcept;

/// PowerDiff(q), OddPowerOfDiff(q) -> PowerLaw(1 + 1/q); SymBasic ->
/// PowerLaw(2); Log -> Exponential(1); LogPower(q) -> Stretched(p = 1/q).
TailClass predicted_tail(const GSpec& spec);

/// Tabulated G from (x, g) pairs, interpolated by a monotone cubic (PCHIP).
class TabulatedG {
 public:
  TabulatedG(std::vector<double> x, std::vector<double> g);

  /// Two-column CSV with header `x,g`.
  static TabulatedG from_csv(const std::string& path);

  double operator()(double x) const;
  double deriv(double x, int order) const;
  double x_min() const noexcept { return x_.front(); }
  double x_max() const noexcept { return x_.back(); }
  const std::vector<double>& xs() const noexcept { return x_; }
  const std::vector<double>& gs() const noexcept { return g_; }

 private:
  struct Interp;
  std::vector<double> x_, g_;
  std::shared_ptr<const Interp> interp_;
};

// ---------------------------------------------------------------------------
// Condition G
// ---------------------------------------------------------------------------

struct Witness {
  double x;
  double value;  // the measured quantity that violated the inequality
};

struct CheckResult {
  std::string name;
  bool pass = true;
  double worst = 0.0;  // largest residual / most violating value seen
  std::vector<Witness> witnesses;
  std::string note;
};

struct ConditionGReport {
  std::string subject;
  /// (i)..(v) in order.
  CheckResult conditions[5];
  /// x G'(x) = (1/x) G'(1/x)
  CheckResult derivative_identity;
  /// x G'(x) = 1 (holds only for the logarithm)
  CheckResult log_identity;
  /// G(x) >= G'(1) log x for x > 1
  CheckResult log_bound;
  /// (iv) tested only on the grid, without a symbolic limit.
  bool grid_limited = false;
  /// Derivatives come from an interpolant rather than closed forms.
  bool lower_confidence = false;

  bool all_conditions_pass() const noexcept;
  std::string to_text() const;
};

struct ConditionGOptions {
  double identity_tol = 1e-12;
  double derivative_tol = 1e-10;
  std::size_t max_witnesses = 8;
};

ConditionGReport check_condition_g(const GSpec& spec, std::span<const double> grid,
                                   const ConditionGOptions& opt = {});
ConditionGReport check_condition_g(const TabulatedG& table, std::span<const double> grid,
                                   const ConditionGOptions& opt = {});

/// Log-spaced grid on [1/x_max, x_max] that contains 1 and is exactly closed
/// under reciprocation. 2 * half + 1 points.
std::vector<double> reciprocal_log_grid(double x_max, std::size_t half);

}  // namespace symprice
