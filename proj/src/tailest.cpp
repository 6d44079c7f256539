#include "symprice/tailest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include "symprice/error.hpp"

namespace symprice {

namespace {

constexpr std::size_t kShrinkSlack = 1024;

double transformed(double v, TailSide side) {
  switch (side) {
    case TailSide::Both: return std::fabs(v);
    case TailSide::Right: return v;
    case TailSide::Left: return -v;
  }
  return v;
}

std::size_t exceedances(std::size_t n, double quantile) {
  return static_cast<std::size_t>(std::floor(double(n) * (1.0 - quantile) + 1e-9));
}

void require_tail(const TailSample& t, std::size_t k, std::size_t minimum, const char* who) {
  if (k < minimum)
    throw InsufficientDataError(fmt::format("{}: {} tail points, need at least {}", who, k, minimum));
  if (k >= t.n_total || k + 1 > t.top.size())
    throw InsufficientDataError(fmt::format("{}: k = {} leaves no threshold (n = {}, kept {})",
                                            who, k, t.n_total, t.top.size()));
}

// argmin of f on [lo, hi] with Brent's method
std::pair<double, double> brent(const std::function<double(double)>& f, double lo, double hi) {
  std::uintmax_t iters = 200;
  return boost::math::tools::brent_find_minima(f, lo, hi, 40, iters);
}

}  // namespace

std::string_view side_name(TailSide s) noexcept {
  switch (s) {
    case TailSide::Both: return "both";
    case TailSide::Right: return "right";
    case TailSide::Left: return "left";
  }
  return "?";
}

std::optional<TailSide> parse_side(std::string_view s) noexcept {
  if (s == "both") return TailSide::Both;
  if (s == "right") return TailSide::Right;
  if (s == "left") return TailSide::Left;
  return std::nullopt;
}

TopK::TopK(std::size_t capacity) : cap_(capacity) {
  if (cap_ == 0) throw DomainError("TopK: capacity must be positive");
  buf_.reserve(2 * cap_ + kShrinkSlack);
}

void TopK::shrink() {
  if (buf_.size() <= cap_) return;
  std::nth_element(buf_.begin(), buf_.begin() + (cap_ - 1), buf_.end(), std::greater<>());
  buf_.resize(cap_);
}

void TopK::add(std::span<const double> values) {
  for (double v : values) {
    buf_.push_back(v);
    if (buf_.size() >= 2 * cap_ + kShrinkSlack) shrink();
  }
  seen_ += values.size();
}

void TopK::add(std::span<const double> values, TailSide side) {
  for (double v : values) {
    buf_.push_back(transformed(v, side));
    if (buf_.size() >= 2 * cap_ + kShrinkSlack) shrink();
  }
  seen_ += values.size();
}

TailSample TopK::finish() const {
  TailSample t;
  t.top = buf_;
  std::sort(t.top.begin(), t.top.end(), std::greater<>());
  if (t.top.size() > cap_) t.top.resize(cap_);
  t.n_total = seen_;
  return t;
}

TailSample make_tail_sample(std::span<const double> samples, double fraction, TailSide side) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw DomainError("tail fraction must lie in (0, 1]");
  const std::size_t n = samples.size();
  const std::size_t m = std::min(n, exceedances(n, 1.0 - fraction) + 1);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = transformed(samples[i], side);
  if (m < n) {
    std::nth_element(x.begin(), x.begin() + (m - 1), x.end(), std::greater<>());
    x.resize(m);
  }
  std::sort(x.begin(), x.end(), std::greater<>());
  return {std::move(x), n};
}

// ---------------------------------------------------------------------------

HillResult hill(const TailSample& t, std::size_t k) {
  require_tail(t, k, 10, "hill");
  const double u = t.top[k];
  if (!(u > 0.0)) throw DomainError("hill: samples must be positive");
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += std::log(t.top[i] / u);
  if (!(s > 0.0)) throw InsufficientDataError("hill: degenerate tail (all exceedances equal)");
  HillResult h;
  h.k = k;
  h.threshold = u;
  h.alpha = double(k) / s;
  h.stderr_ = h.alpha / std::sqrt(double(k));
  return h;
}

HillResult hill(std::span<const double> samples, std::size_t k) {
  for (double v : samples)
    if (!(v > 0.0)) throw DomainError("hill: samples must be positive");
  if (k >= samples.size())
    throw InsufficientDataError(fmt::format("hill: k = {} must be below n = {}", k, samples.size()));
  TailSample t = make_tail_sample(samples, double(k + 1) / double(samples.size()), TailSide::Right);
  while (t.top.size() < k + 1) t = make_tail_sample(samples, 1.0, TailSide::Right);
  return hill(t, k);
}

RegressionResult rank_regression(const TailSample& t, std::size_t k, RankScale scale) {
  require_tail(t, k, 50, "rank_regression");
  const double n = double(t.n_total);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double v = t.top[i];
    if (scale == RankScale::LogLog && !(v > 0.0))
      throw DomainError("rank_regression: log-log mode needs positive samples");
    const double x = scale == RankScale::LogLog ? std::log(v) : v;
    const double y = std::log(double(i + 1) / n);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = double(k);
  const double mx = sx / m, my = sy / m;
  const double vxx = sxx - m * mx * mx;
  if (!(vxx > 0.0)) throw InsufficientDataError("rank_regression: degenerate tail");
  RegressionResult r;
  r.slope = (sxy - m * mx * my) / vxx;
  r.intercept = my - r.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double x = scale == RankScale::LogLog ? std::log(t.top[i]) : t.top[i];
    const double e = std::log(double(i + 1) / n) - (r.intercept + r.slope * x);
    rss += e * e;
  }
  r.stderr_ = std::sqrt(rss / (m - 2.0) / vxx);
  r.points = k;
  r.threshold = t.top[k];
  return r;
}

RegressionResult rank_regression(std::span<const double> samples, double tail_fraction,
                                 RankScale scale) {
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0))
    throw DomainError("rank_regression: tail_fraction must lie in (0, 1)");
  const auto t = make_tail_sample(samples, tail_fraction, TailSide::Right);
  return rank_regression(t, exceedances(samples.size(), 1.0 - tail_fraction), scale);
}

StretchedFit stretched_fit(const TailSample& t, std::size_t k) {
  require_tail(t, k, 10, "stretched_fit");
  const double u = t.top[k];
  if (!(u > 0.0)) throw DomainError("stretched_fit: threshold must be positive");
  if (!(t.top[0] > u)) throw InsufficientDataError("stretched_fit: degenerate tail");
  std::vector<double> L(k), ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    L[i] = std::log((double(i) + 0.5) / double(k));
    ly[i] = std::log(t.top[i] / u);  // work with (y/u)^p to avoid overflow
  }
  // For fixed p the model is L = -c' v with v = (y/u)^p - 1, c' = c u^p.
  auto fit_c = [&](double p, double* rss) {
    double lv = 0, vv = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double v = std::expm1(p * ly[i]);
      lv += L[i] * v;
      vv += v * v;
    }
    const double c = -lv / vv;
    double r = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double e = L[i] + c * std::expm1(p * ly[i]);
      r += e * e;
    }
    *rss = r;
    return c;
  };
  auto objective = [&](double logp) {
    double r;
    fit_c(std::exp(logp), &r);
    return r;
  };
  const auto [logp, rss] = brent(objective, std::log(1e-3), std::log(20.0));
  StretchedFit f;
  f.p = std::exp(logp);
  double dummy;
  const double cprime = fit_c(f.p, &dummy);
  f.c = cprime * std::exp(-f.p * std::log(u));
  f.rss = rss;
  f.k = k;
  f.threshold = u;
  // curvature of the profile RSS in p: var(p) ~ 2 sigma^2 / RSS''
  const double h = 1e-3 * f.p;
  double rp, rm;
  fit_c(f.p + h, &rp);
  fit_c(f.p - h, &rm);
  const double curv = (rp - 2.0 * rss + rm) / (h * h);
  const double sigma2 = rss / std::max(1.0, double(k) - 2.0);
  f.stderr_ = curv > 0.0 ? std::sqrt(2.0 * sigma2 / curv) : INFINITY;
  return f;
}

StretchedFit stretched_fit(std::span<const double> samples, double tail_fraction) {
  const auto t = make_tail_sample(samples, tail_fraction, TailSide::Right);
  return stretched_fit(t, exceedances(samples.size(), 1.0 - tail_fraction));
}

// ---------------------------------------------------------------------------

namespace {

struct Classified {
  std::vector<CandidateScore> scores;
  std::size_t best = 0;
  std::size_t k = 0;
  double threshold = 0.0;
  double stderr_ = 0.0;
};

Classified classify_at(const TailSample& t, std::size_t k,
                       const std::vector<TailClass::Kind>& candidates) {
  require_tail(t, k, 10, "classify_tail");
  const double u = t.top[k];
  if (!(t.top[0] > u)) throw InsufficientDataError("classify_tail: degenerate tail (all exceedances equal)");
  Classified out;
  out.k = k;
  out.threshold = u;
  const double m = double(k);
  for (auto kind : candidates) {
    CandidateScore cs{kind};
    double se = 0.0;
    switch (kind) {
      case TailClass::Kind::PowerLaw: {
        if (!(u > 0.0)) {
          cs.loglik = -INFINITY;
          break;
        }
        const auto h = hill(t, k);
        double slog = 0.0;
        for (std::size_t i = 0; i < k; ++i) slog += std::log(t.top[i]);
        cs.loglik = std::log(h.alpha) + h.alpha * std::log(u) - (h.alpha + 1.0) * slog / m;
        cs.value = h.density_exponent();
        se = h.stderr_;
        break;
      }
      case TailClass::Kind::Exponential: {
        double excess = 0.0;
        for (std::size_t i = 0; i < k; ++i) excess += t.top[i] - u;
        const double lambda = m / excess;
        cs.loglik = std::log(lambda) - 1.0;
        cs.value = lambda;
        se = lambda / std::sqrt(m);
        break;
      }
      case TailClass::Kind::StretchedExponential: {
        if (!(u > 0.0)) {
          cs.loglik = -INFINITY;
          break;
        }
        const auto f = stretched_fit(t, k);
        double ll = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          const double y = t.top[i];
          const double lyu = std::log(y / u);
          // c (y^p - u^p) = c u^p ((y/u)^p - 1)
          ll += std::log(f.c * f.p) + (f.p - 1.0) * std::log(y) -
                f.c * std::exp(f.p * std::log(u)) * std::expm1(f.p * lyu);
        }
        cs.loglik = ll / m;
        cs.value = f.p;
        se = f.stderr_;
        break;
      }
    }
    out.scores.push_back(cs);
    if (out.scores.size() == 1 || cs.loglik > out.scores[out.best].loglik) {
      out.best = out.scores.size() - 1;
      out.stderr_ = se;
    }
  }
  return out;
}

}  // namespace

TailReport classify_tail(const TailSample& t, const std::vector<TailClass::Kind>& candidates,
                         const ClassifyOptions& opt) {
  if (candidates.size() < 2) throw DomainError("classify_tail: need at least two candidate kinds");
  if (!(opt.threshold_quantile > 0.0 && opt.threshold_quantile < 1.0))
    throw DomainError("classify_tail: threshold quantile must lie in (0, 1)");
  const std::size_t k = exceedances(t.n_total, opt.threshold_quantile);
  const auto main = classify_at(t, k, candidates);
  TailReport r;
  const auto& best = main.scores[main.best];
  r.tail = {best.kind, best.value};
  r.estimate = best.value;
  r.stderr_ = main.stderr_;
  r.k_used = main.k;
  r.threshold = main.threshold;
  r.n_total = t.n_total;
  r.quantile = opt.threshold_quantile;
  r.scores = main.scores;
  for (double q : opt.sweep) {
    const std::size_t kq = exceedances(t.n_total, q);
    if (kq < 10 || kq + 1 > t.top.size()) continue;
    const auto c = classify_at(t, kq, candidates);
    r.sweep.push_back({q, c.scores[c.best].kind, c.scores[c.best].value, kq});
  }
  return r;
}

TailReport classify_tail(std::span<const double> samples,
                         const std::vector<TailClass::Kind>& candidates,
                         const ClassifyOptions& opt) {
  double lowest = opt.threshold_quantile;
  for (double q : opt.sweep) lowest = std::min(lowest, q);
  const auto t = make_tail_sample(samples, std::min(1.0, 1.0 - lowest + 1e-6), opt.side);
  return classify_tail(t, candidates, opt);
}

bool TailReport::sweep_consistent() const noexcept {
  for (const auto& s : sweep)
    if (s.best != tail.kind) return false;
  return true;
}

KeyValues TailReport::to_kv() const {
  KeyValues kv;
  kv.set("class", std::string(tail_kind_name(tail.kind)));
  kv.set("estimate", estimate);
  kv.set("stderr", stderr_);
  kv.set("describe", tail.describe());
  kv.set("k_used", k_used);
  kv.set("threshold", threshold);
  kv.set("threshold_quantile", quantile);
  kv.set("n_total", n_total);
  for (const auto& s : scores) {
    const std::string key(tail_kind_name(s.kind));
    kv.set("loglik." + key, s.loglik);
    kv.set("fit." + key, s.value);
  }
  for (const auto& s : sweep) {
    const std::string key = fmt::format("sweep.{}", format_double(s.quantile));
    kv.set(key + ".class", std::string(tail_kind_name(s.best)));
    kv.set(key + ".estimate", s.estimate);
    kv.set(key + ".k", s.k);
  }
  kv.set("sweep_consistent", sweep_consistent());
  return kv;
}

std::string TailReport::csv_header() {
  return "class,estimate,stderr,k_used,threshold,n_total,loglik_power,loglik_exp,loglik_stretched";
}

std::string TailReport::csv_row() const {
  auto ll = [&](TailClass::Kind k) {
    for (const auto& s : scores)
      if (s.kind == k) return format_double(s.loglik);
    return std::string();
  };
  return fmt::format("{},{},{},{},{},{},{},{},{}", tail_kind_name(tail.kind),
                     format_double(estimate), format_double(stderr_), k_used,
                     format_double(threshold), n_total, ll(TailClass::Kind::PowerLaw),
                     ll(TailClass::Kind::Exponential), ll(TailClass::Kind::StretchedExponential));
}

}  // namespace symprice
