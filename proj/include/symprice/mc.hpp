#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "symprice/csv.hpp"
#include "symprice/dist.hpp"
#include "symprice/gfunc.hpp"

namespace symprice {

enum class RejectionPolicy { ResampleNonpositiveR, AbortOnNonpositiveR };

std::string_view policy_name(RejectionPolicy p) noexcept;
std::optional<RejectionPolicy> parse_policy(std::string_view s) noexcept;

struct SimConfig {
  BivarParams params;
  GSpec gspec;
  double tau0 = 1.0;
  double dt = 0.01;
  std::uint64_t n_steps = 1000;
  double p0 = 1.0;
  std::uint64_t seed = 1;
  RejectionPolicy policy = RejectionPolicy::ResampleNonpositiveR;
  /// Fraction of rejected draws above which the run fails.
  double max_rejection_rate = 0.01;

  void validate() const;
  KeyValues to_kv() const;
  /// SHA-256 of the canonical key=value form.
  std::string hash() const;
};

struct SeriesMeta {
  std::string model;  // "g" or "gbm"
  std::uint64_t seed = 0;
  std::string config_hash;
  std::uint64_t rejections = 0;
  std::uint64_t zero_denominators = 0;
};

/// Price path stored as log-prices: fat-tailed increments routinely exceed
/// the exponent range of a double, while log P stays finite.
struct PriceSeries {
  std::vector<double> times;
  std::vector<double> log_prices;
  SeriesMeta meta;

  std::size_t size() const noexcept { return times.size(); }
  double price(std::size_t i) const { return std::exp(log_prices[i]); }
  std::vector<double> prices() const;

  /// `t,price`, or `t,log_price` when some price is not representable.
  std::string to_csv() const;
  KeyValues meta_kv() const;
  /// Accepts `t,price` or `t,log_price`.
  static PriceSeries from_csv_text(std::string_view text, std::string_view origin = "<memory>");
  static PriceSeries from_csv(const std::string& path);
};

struct BivariateSample {
  std::vector<double> d, s;
};

/// Pair i uses normals (Z1, Z2) from counter (i, 0, bivariate stream).
BivariateSample sample_bivariate(const BivarParams& p, std::size_t n, std::uint64_t seed);

struct RatioSample {
  std::vector<double> r;
  std::uint64_t nonpositive_s = 0;   // draws with S <= 0 kept in r
  std::uint64_t zero_resamples = 0;  // S == 0 exactly, redrawn
  double nonpositive_s_fraction() const noexcept {
    return r.empty() ? 0.0 : double(nonpositive_s) / double(r.size());
  }
};

/// R = D / S per pair; S == 0 is redrawn on the next attempt counter.
RatioSample sample_ratio(const BivarParams& p, std::size_t n, std::uint64_t seed);

struct IncrementStats {
  std::uint64_t rejections = 0;
  std::uint64_t draws = 0;
  /// Smallest step index whose first draw had R <= 0 (Abort policy), or
  /// UINT64_MAX.
  std::uint64_t first_bad = UINT64_MAX;
};

/// Log-price increments (dt/tau0) G(R_k) for steps [first, first + out.size()).
/// Pure function of (cfg, k): chunked calls concatenate to the full run.
/// Does not enforce the rejection-rate limit; the caller sums stats.
void simulate_increments(const SimConfig& cfg, std::uint64_t first, std::span<double> out,
                         IncrementStats& stats);

/// Raises PolicyError when the policy or rejection limit is violated.
void enforce_policy(const SimConfig& cfg, const IncrementStats& stats);

PriceSeries simulate_path(const SimConfig& cfg);

/// Exact lognormal stepping; sigma may be zero.
PriceSeries simulate_gbm(double mu, double sigma, double dt, std::uint64_t n_steps, double p0,
                         std::uint64_t seed);

/// Per-step log-price increments divided by `scale` (dt/tau0 recovers G(R)).
std::vector<double> log_increments(const PriceSeries& s, double scale = 1.0);

}  // namespace symprice
