#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "symprice/csv.hpp"
#include "symprice/error.hpp"
#include "symprice/gfunc.hpp"
#include "symprice/mc.hpp"

namespace symprice {

struct WindowSpec {
  double delta_t = 0.01;
  double big_delta_t = 10.0;
  double stride = 10.0;
  /// Requires delta_t <= big_delta_t / 10 and positive stride.
  void validate() const;
};

enum class ChangeMode {
  Simple,  // (P(s + dt) - P(s)) / (P(s) dt)
  Log,     // (log P(s + dt) - log P(s)) / dt
};

struct ChangeOptions {
  ChangeMode mode = ChangeMode::Simple;
  /// Linear interpolation in log-price at missing timestamps. Without it a
  /// timestamp further than delta_t / 2 from every sample is an error.
  bool interpolate = false;
};

struct RelativeChanges {
  std::vector<double> values;
  std::vector<std::uint32_t> window;  // window index of each value
  std::size_t n_windows = 0;
  std::size_t lookups = 0;
  std::size_t interpolated = 0;
  double interpolated_fraction() const noexcept {
    return lookups ? double(interpolated) / double(lookups) : 0.0;
  }
  /// More than 0.1% of price lookups were interpolated.
  bool interpolation_flagged() const noexcept { return interpolated_fraction() > 1e-3; }
};

/// Windows [t, t + Delta) start at t0 + j * stride; inside each, every
/// delta_t-subinterval start s = t + i * delta_t with s + delta_t <= t + Delta
/// contributes one forward change.
RelativeChanges relative_changes(const PriceSeries& series, const WindowSpec& w,
                                 const ChangeOptions& opt = {});

/// A family to score; free_param lets the tail fit choose q (PowerDiff).
struct Candidate {
  GSpec spec;
  bool free_param = false;
  int n_params() const noexcept { return free_param ? 1 : 0; }
  std::string label() const;
};

/// PowerDiff (q free), Log, LogPower(3), OddPowerOfDiff(3). SymBasic is left
/// out: it equals PowerDiff(1) up to the time scale, an exact tie.
std::vector<Candidate> default_candidates();
/// Parses "power,log,logpow:3,oddpow:3,sym"; "power:2" fixes q.
std::vector<Candidate> parse_candidates(std::string_view list);

struct FitOptions {
  double tie_tolerance = 1e-4;     // per-point average log-likelihood
  double tail_quantile = 0.01;     // tail = below q and above 1 - q
  std::size_t bulk_levels = 50;    // quantile levels in [0.01, 0.99]
  double q_min = 0.03, q_max = 20.0;
  std::size_t bootstrap = 20;      // window bootstrap replicates for stderr
  std::uint64_t seed = 1;
};

/// Nuisance model: the changes are kappa * G(R) with R = D / S,
/// D = m + s Z, S = 1 - s Z (rho = -1, equal relative spreads), given R > 0.
struct Nuisance {
  double kappa = 1.0;  // time scale, absorbs tau0 and delta_t
  double m = 1.0;      // mu1 / mu2
  double s = 0.3;      // sigma / mu2
};

struct FamilyScore {
  Candidate candidate;
  double param = 0.0;
  double score = 0.0;  // average log-likelihood over all changes
  double tail_score = 0.0;
  Nuisance nuisance;
};

struct GFitResult {
  GSpec family;
  double param_estimate = 0.0;
  double param_stderr = 0.0;
  TailClass implied_tail;
  std::vector<FamilyScore> scores;  // in candidate order
  std::size_t n_samples = 0;
  Nuisance nuisance;
  /// Best and runner-up were within tie_tolerance and the tie was broken
  /// toward the candidate with fewer free parameters.
  bool tie_broken = false;
  std::string tie_note;

  KeyValues to_kv() const;
  static std::string csv_header();
  std::string csv_row() const;
};

class NonIdentifiableError : public Error {
 public:
  NonIdentifiableError(const std::string& what, GFitResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const GFitResult& partial() const noexcept { return partial_; }

 private:
  GFitResult partial_;
};

/// Fits every candidate (bulk quantiles pin the nuisance, tail likelihood
/// picks q) and selects the highest average log-likelihood. Throws
/// NonIdentifiableError when the top scores tie within tie_tolerance and the
/// tied candidates have equal parameter counts.
GFitResult fit_g(const RelativeChanges& changes, const std::vector<Candidate>& candidates,
                 const FitOptions& opt = {});
GFitResult fit_g(std::span<const double> changes, const std::vector<Candidate>& candidates,
                 const FitOptions& opt = {});

/// Log-density of kappa * G(R) given R > 0 under the nuisance model.
double model_log_density(const GSpec& g, const Nuisance& nu, double y);
/// P{kappa G(R) <= y | R > 0}.
double model_cdf(const GSpec& g, const Nuisance& nu, double y);

struct ReportContext {
  std::uint64_t rejections = 0;
  std::uint64_t steps = 0;
  double interpolated_fraction = 0.0;
  bool interpolation_flagged = false;
  std::string sensitivity;  // optional threshold-sensitivity note
};

struct ExponentReport {
  std::string text;
  KeyValues kv;
};

ExponentReport exponent_report(const GFitResult& r, const ReportContext& ctx = {});

/// Fitted versus empirical density of the changes, CSV `x,empirical,fitted`.
std::string density_overlay_csv(std::span<const double> changes, const GFitResult& r,
                                std::size_t bins = 200);

}  // namespace symprice
