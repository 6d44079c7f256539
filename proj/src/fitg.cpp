#include "symprice/fitg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "symprice/normal.hpp"
#include "symprice/parallel.hpp"
#include "symprice/rng.hpp"

namespace symprice {

void WindowSpec::validate() const {
  if (!(delta_t > 0) || !std::isfinite(delta_t))
    throw DomainError("window: delta_t must be positive");
  if (!(big_delta_t > 0) || !std::isfinite(big_delta_t))
    throw DomainError("window: Delta_t must be positive");
  if (delta_t > big_delta_t / 10.0 * (1 + 1e-12))
    throw DomainError(fmt::format("window: delta_t = {} exceeds Delta_t / 10 = {}", delta_t,
                                  big_delta_t / 10.0));
  if (!(stride > 0) || !std::isfinite(stride))
    throw DomainError("window: stride must be positive");
}

namespace {

struct LogPriceLookup {
  const std::vector<double>& t;
  const std::vector<double>& lp;
  double half_step;
  double exact_tol;
  bool interpolate;
  std::size_t interpolated = 0;

  double at(double s) {
    auto it = std::lower_bound(t.begin(), t.end(), s);
    std::size_t hi = std::size_t(it - t.begin());
    if (hi < t.size() && t[hi] - s <= exact_tol) return lp[hi];
    if (hi > 0 && s - t[hi - 1] <= exact_tol) return lp[hi - 1];
    if (hi == 0 || hi == t.size())
      throw InputError(fmt::format("relative_changes: time {} outside the series", s));
    std::size_t lo = hi - 1;
    if (interpolate) {
      ++interpolated;
      double w = (s - t[lo]) / (t[hi] - t[lo]);
      return lp[lo] + w * (lp[hi] - lp[lo]);
    }
    double dlo = s - t[lo], dhi = t[hi] - s;
    if (std::min(dlo, dhi) > half_step)
      throw InputError(fmt::format(
          "relative_changes: irregular timestamps, no sample within delta_t/2 of t = {} "
          "(enable interpolation)",
          s));
    return dlo <= dhi ? lp[lo] : lp[hi];
  }
};

}  // namespace

RelativeChanges relative_changes(const PriceSeries& series, const WindowSpec& w,
                                 const ChangeOptions& opt) {
  w.validate();
  if (series.size() < 2) throw InsufficientDataError("relative_changes: fewer than 2 prices");
  const auto& t = series.times;
  const double t0 = t.front(), t_end = t.back();
  const double eps = 1e-9 * w.delta_t;
  const auto per_window = std::size_t(std::floor(w.big_delta_t / w.delta_t + 1e-9));

  RelativeChanges out;
  LogPriceLookup look{t, series.log_prices, w.delta_t / 2, 1e-6 * w.delta_t, opt.interpolate};
  for (std::size_t j = 0;; ++j) {
    const double start = t0 + double(j) * w.stride;
    if (start + w.big_delta_t > t_end + eps) break;
    if (j >= std::numeric_limits<std::uint32_t>::max())
      throw InputError("relative_changes: too many windows");
    double prev = look.at(start);
    for (std::size_t i = 0; i < per_window; ++i) {
      double next = look.at(start + double(i + 1) * w.delta_t);
      double d = next - prev;
      out.values.push_back(opt.mode == ChangeMode::Log ? d / w.delta_t
                                                        : std::expm1(d) / w.delta_t);
      out.window.push_back(std::uint32_t(j));
      prev = next;
    }
    out.lookups += per_window + 1;
    ++out.n_windows;
  }
  if (out.n_windows == 0)
    throw InsufficientDataError(fmt::format(
        "relative_changes: series spans {} < Delta_t = {}", t_end - t0, w.big_delta_t));
  out.interpolated = look.interpolated;
  return out;
}

std::string Candidate::label() const {
  if (free_param) return std::string(family_name(spec.family)) + "(q free)";
  return spec.label();
}

std::vector<Candidate> default_candidates() {
  return {{GSpec::power_diff(1.0), true},
          {GSpec::log(), false},
          {GSpec::log_power(3), false},
          {GSpec::odd_power_of_diff(3), false}};
}

std::vector<Candidate> parse_candidates(std::string_view list) {
  std::vector<Candidate> out;
  while (!list.empty()) {
    auto comma = list.find(',');
    std::string_view item = list.substr(0, comma);
    list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
    if (item.empty()) continue;
    auto colon = item.find(':');
    std::string_view name = item.substr(0, colon);
    auto fam = parse_family(name);
    if (!fam) throw InputError(fmt::format("unknown G family '{}'", name));
    Candidate c{GSpec{*fam, 1.0}, false};
    if (colon != std::string_view::npos) {
      c.spec.param = parse_double(item.substr(colon + 1));
    } else if (*fam == Family::PowerDiff) {
      c.free_param = true;
    } else if (c.spec.uses_param()) {
      c.spec.param = 3.0;
    }
    c.spec.validate();
    out.push_back(c);
  }
  if (out.empty()) throw InputError("empty candidate list");
  return out;
}

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
// +inf log-densities occur only at G'(x) = 0 (y = 0 for the cubic families);
// an integrable singularity, capped so one exact zero cannot decide a fit.
constexpr double kMaxLogDensity = 60.0;

/// kappa * G(R) | R > 0 with precomputed constants.
struct Model {
  GSpec g;
  Nuisance nu;
  double a_cdf = 0, top_sf = 0, mass = 0, log_const = 0;

  Model(const GSpec& spec, const Nuisance& n) : g(spec), nu(n) {
    const double zlo = -nu.m / nu.s, zhi = 1.0 / nu.s;
    a_cdf = normal_cdf(zlo);
    top_sf = normal_sf(zhi);
    mass = normal_cdf(zhi) - a_cdf;
    log_const = std::log1p(nu.m) - std::log(nu.s) - std::log(mass) - std::log(nu.kappa) -
                kHalfLog2Pi;
  }

  // z of the underlying normal and log(r + 1), from ell = log r.
  void z_of(double ell, double& z, double& log_r1) const {
    if (ell > 0) {
      double e = std::exp(-ell);
      z = (1.0 - nu.m * e) / (nu.s * (1.0 + e));
      log_r1 = ell + std::log1p(e);
    } else {
      double e = std::exp(ell);
      z = (e - nu.m) / (nu.s * (e + 1.0));
      log_r1 = std::log1p(e);
    }
  }

  double log_density(double y) const {
    double ell = log_inverse_g(g, y / nu.kappa), z, lr1;
    z_of(ell, z, lr1);
    double v = log_const - 0.5 * z * z - 2.0 * lr1 - log_g_prime_at_log(g, ell);
    return std::min(v, kMaxLogDensity);
  }
  double cdf(double y) const {
    double z, lr1;
    z_of(log_inverse_g(g, y / nu.kappa), z, lr1);
    return std::clamp((normal_cdf(z) - a_cdf) / mass, 0.0, 1.0);
  }
  double sf(double y) const {
    double z, lr1;
    z_of(log_inverse_g(g, y / nu.kappa), z, lr1);
    return std::clamp((normal_sf(z) - top_sf) / mass, 0.0, 1.0);
  }
  // Quantile of kappa G(R): R is increasing in Z on the positive branch.
  double quantile(double u) const {
    double p = a_cdf + u * mass;
    p = std::clamp(p, 1e-300, 1.0 - 1e-16);
    double z = normal_quantile(p);
    double r = (nu.m + nu.s * z) / (1.0 - nu.s * z);
    if (!(r > 0) || !std::isfinite(r)) return std::numeric_limits<double>::quiet_NaN();
    return nu.kappa * eval_g(g, r);
  }
};

/// Sorted changes with optional weights (window bootstrap multiplicities).
struct Data {
  std::vector<double> v;
  std::vector<std::uint32_t> win;
  std::vector<double> w;    // empty: unit weights
  std::vector<double> cum;  // running weight
  double total = 0;

  void set_weights(std::vector<double> weights) {
    w = std::move(weights);
    cum.resize(v.size());
    double acc = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      acc += w.empty() ? 1.0 : w[i];
      cum[i] = acc;
    }
    total = acc;
  }
  double weight(std::size_t i) const { return w.empty() ? 1.0 : w[i]; }
  double quantile(double u) const {
    auto it = std::lower_bound(cum.begin(), cum.end(), u * total);
    std::size_t i = std::min<std::size_t>(std::size_t(it - cum.begin()), v.size() - 1);
    return v[i];
  }
};

struct BulkTarget {
  std::vector<double> levels, q;
  double iqr = 1;
};

BulkTarget bulk_target(const Data& d, std::size_t levels) {
  BulkTarget t;
  for (std::size_t j = 0; j < levels; ++j) {
    double u = 0.01 + 0.98 * double(j) / double(levels - 1);
    t.levels.push_back(u);
    t.q.push_back(d.quantile(u));
  }
  t.iqr = d.quantile(0.75) - d.quantile(0.25);
  if (!(t.iqr > 0)) throw InsufficientDataError("fit_g: interquartile range is zero");
  return t;
}

Nuisance from_theta(const double* th) {
  return {std::exp(th[0]), std::exp(std::clamp(th[1], -12.0, 12.0)),
          std::exp(std::clamp(th[2], -8.0, 6.0))};
}

// Residuals in probability space, F(Q_emp(u)) - u, weighted as in
// Anderson-Darling. Quantile-space residuals let heavy tails swamp the bulk.
double bulk_loss(const GSpec& g, const Nuisance& nu, const BulkTarget& t) {
  if (!std::isfinite(nu.kappa) || nu.kappa <= 0) return 1e30;
  Model model(g, nu);
  if (!(model.mass > 1e-300)) return 1e30;
  double acc = 0;
  for (std::size_t j = 0; j < t.levels.size(); ++j) {
    const double u = t.levels[j];
    const double e = (u < 0.5 ? model.cdf(t.q[j]) - u : (1.0 - u) - model.sf(t.q[j])) /
                     std::sqrt(u * (1.0 - u));
    if (!std::isfinite(e)) return 1e30;
    acc += e * e;
  }
  return acc;
}

struct BulkCtx {
  const GSpec* g;
  const BulkTarget* t;
};

double gsl_bulk(const gsl_vector* x, void* p) {
  auto* c = static_cast<BulkCtx*>(p);
  double th[3] = {gsl_vector_get(x, 0), gsl_vector_get(x, 1), gsl_vector_get(x, 2)};
  return bulk_loss(*c->g, from_theta(th), *c->t);
}

std::pair<Nuisance, double> nelder_mead(const GSpec& g, const BulkTarget& t, const Nuisance& s0) {
  BulkCtx ctx{&g, &t};
  gsl_multimin_function f{&gsl_bulk, 3, &ctx};
  gsl_vector* x = gsl_vector_alloc(3);
  gsl_vector* step = gsl_vector_alloc(3);
  gsl_vector_set(x, 0, std::log(s0.kappa));
  gsl_vector_set(x, 1, std::log(s0.m));
  gsl_vector_set(x, 2, std::log(s0.s));
  gsl_vector_set_all(step, 0.3);
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
  gsl_multimin_fminimizer_set(m, &f, x, step);
  for (int it = 0; it < 4000; ++it) {
    if (gsl_multimin_fminimizer_iterate(m)) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-9) == GSL_SUCCESS) break;
  }
  double th[3] = {gsl_vector_get(m->x, 0), gsl_vector_get(m->x, 1), gsl_vector_get(m->x, 2)};
  std::pair<Nuisance, double> out{from_theta(th), m->fval};
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(x);
  gsl_vector_free(step);
  return out;
}

/// Stage 1: nuisance parameters from the bulk quantiles, best of a few starts
/// (or one start from a warm solution).
Nuisance fit_bulk(const GSpec& g, const BulkTarget& t, const Nuisance* warm = nullptr) {
  std::pair<Nuisance, double> best{{}, std::numeric_limits<double>::infinity()};
  auto polish = [&](std::pair<Nuisance, double> r) {
    auto again = nelder_mead(g, t, r.first);  // simplex restart
    return again.second <= r.second ? again.first : r.first;
  };
  if (warm) {
    best = nelder_mead(g, t, *warm);
    if (best.second < 1e29) return polish(best);
  }
  for (double s : {0.1, 0.3, 0.6}) {
    Nuisance start{1.0, 1.0, s};
    Model unit(g, start);
    double spread = unit.quantile(0.75) - unit.quantile(0.25);
    if (!(spread > 0) || !std::isfinite(spread)) continue;
    start.kappa = t.iqr / spread;
    auto r = nelder_mead(g, t, start);
    if (r.second < best.second) best = r;
  }
  if (!(best.second < 1e29)) throw ConvergenceError("fit_g: bulk fit failed for " + g.label());
  return polish(best);
}

double tail_loglik(const GSpec& g, const Nuisance& nu, const Data& d, double tq) {
  const double y_lo = d.quantile(tq), y_hi = d.quantile(1.0 - tq);
  Model model(g, nu);
  double mass = model.cdf(y_lo) + model.sf(y_hi);
  if (!(mass > 0)) return -std::numeric_limits<double>::infinity();
  const double log_mass = std::log(mass);
  const std::size_t i_lo = std::size_t(std::lower_bound(d.v.begin(), d.v.end(), y_lo) - d.v.begin());
  const std::size_t i_hi = std::size_t(std::upper_bound(d.v.begin(), d.v.end(), y_hi) - d.v.begin());
  double acc = 0, wsum = 0;
  auto add = [&](std::size_t i) {
    double w = d.weight(i);
    if (w == 0) return;
    acc += w * (model.log_density(d.v[i]) - log_mass);
    wsum += w;
  };
  for (std::size_t i = 0; i < i_lo; ++i) add(i);
  for (std::size_t i = i_hi; i < d.v.size(); ++i) add(i);
  if (wsum == 0) return -std::numeric_limits<double>::infinity();
  return acc / wsum;
}

double full_loglik(const GSpec& g, const Nuisance& nu, const Data& d) {
  Model model(g, nu);
  const std::size_t n = d.v.size();
  const std::size_t nb = (n + kBlockSize - 1) / kBlockSize;
  std::vector<double> part(nb, 0.0);
  parallel_blocks(n, [&](std::size_t b, std::size_t e) {
    double acc = 0;
    for (std::size_t i = b; i < e; ++i) {
      double w = d.weight(i);
      if (w != 0) acc += w * model.log_density(d.v[i]);
    }
    part[b / kBlockSize] = acc;
  });
  double acc = 0;
  for (double p : part) acc += p;  // fixed order
  return acc / d.total;
}

struct StageResult {
  double q;
  Nuisance nu;
  double tail;
};

/// Stage 2: q maximising the conditional tail likelihood, nuisance refit per q.
/// Searches log q on [lo, hi]. Every bulk refit starts from the same point
/// (warm or the cold grid): the profile is flat in q, and chaining starts
/// along the search makes it path dependent.
StageResult fit_free(const Candidate& c, const Data& d, const FitOptions& opt, double lo,
                     double hi, const Nuisance* warm = nullptr) {
  const BulkTarget t = bulk_target(d, opt.bulk_levels);
  auto refit = [&](double q) {
    GSpec g = c.spec;
    g.param = q;
    return std::pair{g, fit_bulk(g, t, warm)};
  };
  auto objective = [&](double log_q) {
    auto [g, nu] = refit(std::exp(log_q));
    double ll = tail_loglik(g, nu, d, opt.tail_quantile);
    return std::isfinite(ll) ? -ll : 1e30;
  };
  boost::uintmax_t iters = 80;
  auto r = boost::math::tools::brent_find_minima(objective, lo, hi, 24, iters);
  auto [g, nu] = refit(std::exp(r.first));
  return {g.param, nu, tail_loglik(g, nu, d, opt.tail_quantile)};
}

StageResult fit_free(const Candidate& c, const Data& d, const FitOptions& opt) {
  return fit_free(c, d, opt, std::log(opt.q_min), std::log(opt.q_max));
}

FamilyScore score_candidate(const Candidate& c, const Data& d, const FitOptions& opt) {
  FamilyScore fs{c, c.spec.param, 0, 0, {}};
  GSpec g = c.spec;
  if (c.free_param) {
    auto r = fit_free(c, d, opt);
    fs.param = r.q;
    fs.nuisance = r.nu;
    fs.tail_score = r.tail;
    g.param = r.q;
  } else {
    const BulkTarget t = bulk_target(d, opt.bulk_levels);
    fs.nuisance = fit_bulk(g, t);
    fs.tail_score = tail_loglik(g, fs.nuisance, d, opt.tail_quantile);
  }
  fs.score = full_loglik(g, fs.nuisance, d);
  return fs;
}

/// Replicates search within a factor 4 of the point estimate.
double bootstrap_stderr(const Candidate& c, const FamilyScore& point, Data d,
                        std::size_t n_windows, const FitOptions& opt) {
  if (opt.bootstrap < 2 || n_windows < 2) return 0.0;
  std::vector<double> qs;
  std::vector<double> count(n_windows);
  for (std::size_t b = 0; b < opt.bootstrap; ++b) {
    std::fill(count.begin(), count.end(), 0.0);
    const std::uint64_t seed = rng::derive_seed(opt.seed, b);
    for (std::size_t k = 0; k < n_windows; k += 2) {
      auto u = rng::uniform_pair(seed, {k / 2, 0, rng::kStreamBootstrap});
      for (std::size_t h = 0; h < 2 && k + h < n_windows; ++h) {
        auto idx = std::min(n_windows - 1, std::size_t(u[h] * double(n_windows)));
        count[idx] += 1.0;
      }
    }
    std::vector<double> w(d.v.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = count[d.win[i]];
    d.set_weights(std::move(w));
    try {
      const double lq = std::log(point.param);
      qs.push_back(fit_free(c, d, opt, std::max(std::log(opt.q_min), lq - std::log(4.0)),
                            std::min(std::log(opt.q_max), lq + std::log(4.0)), &point.nuisance)
                       .q);
    } catch (const Error&) {
      // replicate with a degenerate resample; dropped
    }
  }
  if (qs.size() < 2) return 0.0;
  double mean = std::accumulate(qs.begin(), qs.end(), 0.0) / double(qs.size());
  double ss = 0;
  for (double q : qs) ss += (q - mean) * (q - mean);
  return std::sqrt(ss / double(qs.size() - 1));
}

GFitResult fit_sorted(Data d, std::size_t n_windows, const std::vector<Candidate>& candidates,
                      const FitOptions& opt) {
  if (candidates.empty()) throw DomainError("fit_g: no candidates");
  if (d.v.size() < 200)
    throw InsufficientDataError(fmt::format("fit_g: {} changes, need at least 200", d.v.size()));
  if (!(opt.tail_quantile > 0 && opt.tail_quantile < 0.25) || opt.bulk_levels < 5 ||
      !(opt.q_min > 0 && opt.q_min < opt.q_max))
    throw DomainError("fit_g: invalid options");
  for (double v : d.v)
    if (!std::isfinite(v)) throw InputError("fit_g: non-finite change");
  d.set_weights({});

  GFitResult res;
  res.n_samples = d.v.size();
  for (const auto& c : candidates) {
    c.spec.validate();
    res.scores.push_back(score_candidate(c, d, opt));
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < res.scores.size(); ++i)
    if (res.scores[i].score > res.scores[best].score) best = i;

  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < res.scores.size(); ++i)
    if (res.scores[best].score - res.scores[i].score < opt.tie_tolerance) tied.push_back(i);
  auto set_choice = [&](std::size_t i) {
    const auto& fs = res.scores[i];
    res.family = fs.candidate.spec;
    res.family.param = fs.param;
    res.param_estimate = fs.candidate.spec.uses_param() ? fs.param : 0.0;
    res.nuisance = fs.nuisance;
    res.implied_tail = predicted_tail(res.family);
  };
  if (tied.size() > 1) {
    std::string names;
    for (auto i : tied)
      names += (names.empty() ? "" : ", ") +
               fmt::format("{} {:.6f}", res.scores[i].candidate.label(), res.scores[i].score);
    int fewest = std::numeric_limits<int>::max();
    for (auto i : tied) fewest = std::min(fewest, res.scores[i].candidate.n_params());
    std::vector<std::size_t> simplest;
    for (auto i : tied)
      if (res.scores[i].candidate.n_params() == fewest) simplest.push_back(i);
    if (simplest.size() > 1) {
      set_choice(best);
      throw NonIdentifiableError(
          fmt::format("fit_g: scores within {} per point with equal parameter counts: {}",
                      opt.tie_tolerance, names),
          std::move(res));
    }
    best = simplest.front();
    res.tie_broken = true;
    res.tie_note = fmt::format("tie within {} per point ({}); chose fewer parameters",
                               opt.tie_tolerance, names);
  }
  set_choice(best);
  if (res.scores[best].candidate.free_param)
    res.param_stderr = bootstrap_stderr(res.scores[best].candidate, res.scores[best], d, n_windows, opt);
  return res;
}

}  // namespace

double model_log_density(const GSpec& g, const Nuisance& nu, double y) {
  return Model(g, nu).log_density(y);
}

double model_cdf(const GSpec& g, const Nuisance& nu, double y) { return Model(g, nu).cdf(y); }

GFitResult fit_g(const RelativeChanges& changes, const std::vector<Candidate>& candidates,
                 const FitOptions& opt) {
  if (changes.window.size() != changes.values.size())
    throw InputError("fit_g: window labels do not match the changes");
  const std::size_t n = changes.values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](auto a, auto b) { return changes.values[a] < changes.values[b]; });
  Data d;
  d.v.resize(n);
  d.win.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.v[i] = changes.values[idx[i]];
    d.win[i] = changes.window[idx[i]];
  }
  return fit_sorted(std::move(d), changes.n_windows, candidates, opt);
}

GFitResult fit_g(std::span<const double> changes, const std::vector<Candidate>& candidates,
                 const FitOptions& opt) {
  RelativeChanges rc;
  rc.values.assign(changes.begin(), changes.end());
  rc.window.resize(changes.size());
  std::iota(rc.window.begin(), rc.window.end(), 0u);
  rc.n_windows = changes.size();
  return fit_g(rc, candidates, opt);
}

KeyValues GFitResult::to_kv() const {
  KeyValues kv;
  kv.set("family", std::string(family_name(family.family)));
  kv.set("param_estimate", param_estimate);
  kv.set("param_stderr", param_stderr);
  kv.set("implied_tail.kind", std::string(tail_kind_name(implied_tail.kind)));
  kv.set("implied_tail.value", implied_tail.value);
  kv.set("n_samples", n_samples);
  kv.set("nuisance.kappa", nuisance.kappa);
  kv.set("nuisance.m", nuisance.m);
  kv.set("nuisance.s", nuisance.s);
  kv.set("tie_broken", tie_broken);
  if (!tie_note.empty()) kv.set("tie_note", tie_note);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    std::string p = fmt::format("score.{}.", i);
    kv.set(p + "candidate", s.candidate.label());
    kv.set(p + "param", s.param);
    kv.set(p + "loglik", s.score);
    kv.set(p + "tail_loglik", s.tail_score);
  }
  return kv;
}

std::string GFitResult::csv_header() {
  return "family,param_estimate,param_stderr,implied_tail,implied_value,n_samples,kappa";
}

std::string GFitResult::csv_row() const {
  return fmt::format("{},{},{},{},{},{},{}", family_name(family.family),
                     format_double(param_estimate), format_double(param_stderr),
                     tail_kind_name(implied_tail.kind), format_double(implied_tail.value),
                     n_samples, format_double(nuisance.kappa));
}

ExponentReport exponent_report(const GFitResult& r, const ReportContext& ctx) {
  ExponentReport rep;
  rep.kv = r.to_kv();
  std::string& t = rep.text;
  t += fmt::format("family: {}", family_name(r.family.family));
  if (r.family.uses_param()) {
    t += fmt::format(" (q = {:.4g}", r.param_estimate);
    if (r.param_stderr > 0) t += fmt::format(" +/- {:.2g}", r.param_stderr);
    t += ")";
  }
  t += "\n";
  t += "implied tail: " + r.implied_tail.describe() + "\n";
  t += fmt::format("samples: {}\n", r.n_samples);
  for (const auto& s : r.scores)
    t += fmt::format("  {:<24} avg loglik {:.6f}\n", s.candidate.label(), s.score);

  std::vector<std::string> caveats;
  caveats.push_back("two-stage fit: bulk quantiles fix the nuisance parameters, the tail "
                    "likelihood fixes q");
  caveats.push_back(fmt::format("G is identified up to the time scale (kappa = {:.4g})",
                                r.nuisance.kappa));
  if (r.tie_broken) caveats.push_back(r.tie_note);
  if (ctx.steps > 0) {
    double rate = double(ctx.rejections) / double(ctx.steps);
    caveats.push_back(fmt::format("simulation rejections: {} of {} draws ({:.3g}%)",
                                  ctx.rejections, ctx.steps, 100 * rate));
  }
  if (ctx.interpolation_flagged)
    caveats.push_back(fmt::format("{:.3g}% of prices interpolated (above 0.1%)",
                                  100 * ctx.interpolated_fraction));
  if (!ctx.sensitivity.empty()) caveats.push_back(ctx.sensitivity);
  t += "caveats:\n";
  for (std::size_t i = 0; i < caveats.size(); ++i) {
    t += "  - " + caveats[i] + "\n";
    rep.kv.set(fmt::format("caveat.{}", i), caveats[i]);
  }
  rep.kv.set("implied_tail.describe", r.implied_tail.describe());
  return rep;
}

std::string density_overlay_csv(std::span<const double> changes, const GFitResult& r,
                                std::size_t bins) {
  if (changes.empty() || bins == 0) throw InsufficientDataError("density_overlay: no data");
  std::vector<double> v(changes.begin(), changes.end());
  std::sort(v.begin(), v.end());
  const double lo = v[std::size_t(0.005 * double(v.size() - 1))];
  const double hi = v[std::size_t(0.995 * double(v.size() - 1))];
  if (!(hi > lo)) throw InsufficientDataError("density_overlay: degenerate range");
  const double width = (hi - lo) / double(bins);
  std::vector<double> counts(bins, 0.0);
  for (double x : v) {
    if (x < lo || x >= hi) continue;
    counts[std::min(bins - 1, std::size_t((x - lo) / width))] += 1;
  }
  Model model(r.family, r.nuisance);
  std::string out = "x,empirical,fitted\n";
  for (std::size_t b = 0; b < bins; ++b) {
    double x = lo + (double(b) + 0.5) * width;
    out += fmt::format("{},{},{}\n", format_double(x),
                       format_double(counts[b] / (double(v.size()) * width)),
                       format_double(std::exp(model.log_density(x))));
  }
  return out;
}

}  // namespace symprice
