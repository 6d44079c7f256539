#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "symprice/csv.hpp"
#include "symprice/gfunc.hpp"

namespace symprice {

enum class TailSide { Both, Right, Left };
std::string_view side_name(TailSide s) noexcept;
std::optional<TailSide> parse_side(std::string_view s) noexcept;

/// The largest values of a sample in descending order, plus the size of the
/// sample they came from. All estimators below work from this, so a tail can
/// be gathered in streaming fashion (TopK) without holding the full sample.
struct TailSample {
  std::vector<double> top;  // descending
  std::size_t n_total = 0;
};

/// Keeps the `capacity` largest values seen so far.
class TopK {
 public:
  explicit TopK(std::size_t capacity);
  void add(std::span<const double> values);
  /// Adds |v| (Both), v (Right) or -v (Left) for each value.
  void add(std::span<const double> values, TailSide side);
  TailSample finish() const;
  std::size_t seen() const noexcept { return seen_; }

 private:
  void shrink();
  std::size_t cap_;
  std::size_t seen_ = 0;
  std::vector<double> buf_;
};

/// Top `fraction` of the transformed sample (|x|, x or -x) plus one extra
/// order statistic to serve as threshold.
TailSample make_tail_sample(std::span<const double> samples, double fraction,
                            TailSide side = TailSide::Both);

struct HillResult {
  double alpha = 0.0;   // survival index
  double stderr_ = 0.0;  // alpha / sqrt(k)
  double threshold = 0.0;
  std::size_t k = 0;
  double density_exponent() const noexcept { return alpha + 1.0; }
};

/// alpha = k / sum_{i<=k} log(X_(n-i+1) / X_(n-k)). Requires 10 <= k < n and
/// positive samples.
HillResult hill(std::span<const double> samples, std::size_t k);
HillResult hill(const TailSample& t, std::size_t k);

enum class RankScale { LogLog, SemiLog };

struct RegressionResult {
  double slope = 0.0;
  double stderr_ = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
  double threshold = 0.0;
};

/// Least-squares slope of log(i/n) against log x_(i) (LogLog) or x_(i)
/// (SemiLog) over the top tail_fraction. Needs at least 50 tail points.
RegressionResult rank_regression(std::span<const double> samples, double tail_fraction,
                                 RankScale scale = RankScale::LogLog);
RegressionResult rank_regression(const TailSample& t, std::size_t k, RankScale scale);

struct StretchedFit {
  double p = 0.0;
  double c = 0.0;  // survival ~ exp(-c x^p)
  double stderr_ = 0.0;
  double threshold = 0.0;
  std::size_t k = 0;
  double rss = 0.0;
};

/// Nonlinear least squares of the conditional log-survival log(i/k) against
/// -c (x^p - u^p) on the top k order statistics, u the (k+1)-th largest.
/// c has a closed form for fixed p; p is found by Brent's method.
StretchedFit stretched_fit(const TailSample& t, std::size_t k);
StretchedFit stretched_fit(std::span<const double> samples, double tail_fraction);

struct CandidateScore {
  TailClass::Kind kind;
  double value = 0.0;   // density exponent, rate or p
  double loglik = 0.0;  // per-point average on the exceedances
};

struct SweepPoint {
  double quantile = 0.0;
  TailClass::Kind best = TailClass::Kind::PowerLaw;
  double estimate = 0.0;
  std::size_t k = 0;
};

struct TailReport {
  TailClass tail;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t k_used = 0;
  double threshold = 0.0;
  std::size_t n_total = 0;
  double quantile = 0.0;
  std::vector<CandidateScore> scores;
  std::vector<SweepPoint> sweep;
  bool sweep_consistent() const noexcept;

  KeyValues to_kv() const;
  static std::string csv_header();
  std::string csv_row() const;
};

struct ClassifyOptions {
  double threshold_quantile = 0.99;
  std::vector<double> sweep{0.98, 0.99, 0.995};
  TailSide side = TailSide::Both;
};

/// Fits each candidate on the exceedances above the threshold quantile and
/// picks the highest per-point average log-likelihood:
///   PowerLaw      conditional Pareto, alpha by Hill
///   Exponential   shifted exponential, rate 1 / mean excess
///   Stretched     c p y^{p-1} exp(-c (y^p - u^p)), (p, c) from stretched_fit
TailReport classify_tail(std::span<const double> samples,
                         const std::vector<TailClass::Kind>& candidates,
                         const ClassifyOptions& opt = {});
TailReport classify_tail(const TailSample& t, const std::vector<TailClass::Kind>& candidates,
                         const ClassifyOptions& opt = {});

}  // namespace symprice
