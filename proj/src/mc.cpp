#include "symprice/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>

#include <fmt/format.h>

#include "symprice/error.hpp"
#include "symprice/kernels.hpp"
#include "symprice/parallel.hpp"
#include "symprice/rng.hpp"

namespace symprice {

namespace {

// Draws after this many consecutive rejections indicate a broken config.
constexpr std::uint32_t kMaxAttempts = 1u << 16;

kernels::AffinePair affine_of(const BivarParams& p) {
  const double perp = p.rho == -1.0 ? 0.0 : std::sqrt(1.0 - p.rho * p.rho);
  return {p.mu1, p.mu2, p.sigma1, p.sigma2, p.rho, perp};
}

// Same expression order as the kernels, so redraws match a batch draw bitwise.
inline void draw_pair(const kernels::AffinePair& a, std::uint64_t seed, std::uint64_t index,
                      std::uint32_t attempt, double& d, double& s) {
  const auto z = rng::normal_pair(seed, {index, attempt, rng::kStreamBivariate});
  d = a.mu1 + a.sigma1 * z[0];
  s = a.mu2 + a.sigma2 * (a.rho * z[0] + a.rho_perp * z[1]);
}

struct Scratch {
  std::vector<double> z1, z2, d, s, r;
  void resize(std::size_t n) {
    z1.resize(n);
    z2.resize(n);
    d.resize(n);
    s.resize(n);
    r.resize(n);
  }
};

void first_draws(const kernels::AffinePair& a, std::uint64_t seed, std::uint64_t first,
                 std::size_t n, Scratch& w) {
  w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = rng::normal_pair(seed, {first + i, 0, rng::kStreamBivariate});
    w.z1[i] = z[0];
    w.z2[i] = z[1];
  }
  const auto& k = kernels::active();
  k.affine_pair(a, w.z1, w.z2, w.d, w.s);
  k.ratio(w.d, w.s, w.r);
}

}  // namespace

std::string_view policy_name(RejectionPolicy p) noexcept {
  return p == RejectionPolicy::ResampleNonpositiveR ? "resample" : "abort";
}

std::optional<RejectionPolicy> parse_policy(std::string_view s) noexcept {
  if (s == "resample" || s == "ResampleNonpositiveR") return RejectionPolicy::ResampleNonpositiveR;
  if (s == "abort" || s == "AbortOnNonpositiveR") return RejectionPolicy::AbortOnNonpositiveR;
  return std::nullopt;
}

void SimConfig::validate() const {
  params.validate();
  gspec.validate();
  if (!(tau0 > 0.0) || !(dt > 0.0)) throw DomainError("SimConfig: tau0 and dt must be positive");
  if (dt > tau0) throw DomainError("SimConfig: dt must not exceed tau0");
  if (n_steps == 0) throw DomainError("SimConfig: n_steps must be positive");
  if (!(p0 > 0.0) || !std::isfinite(p0)) throw DomainError("SimConfig: p0 must be positive");
  if (!(max_rejection_rate >= 0.0 && max_rejection_rate <= 1.0))
    throw DomainError("SimConfig: max_rejection_rate must lie in [0, 1]");
}

KeyValues SimConfig::to_kv() const {
  KeyValues kv;
  kv.set("model", "g");
  kv.append(params.to_kv());
  kv.set("family", std::string(family_name(gspec.family)));
  kv.set("param", gspec.param);
  kv.set("normalize", gspec.normalize);
  kv.set("tau0", tau0);
  kv.set("dt", dt);
  kv.set("n_steps", static_cast<unsigned long long>(n_steps));
  kv.set("p0", p0);
  kv.set("seed", static_cast<unsigned long long>(seed));
  kv.set("policy", std::string(policy_name(policy)));
  kv.set("max_rejection_rate", max_rejection_rate);
  return kv;
}

std::string SimConfig::hash() const { return sha256_hex(to_kv().to_text()); }

// ---------------------------------------------------------------------------

BivariateSample sample_bivariate(const BivarParams& p, std::size_t n, std::uint64_t seed) {
  p.validate();
  BivariateSample out;
  out.d.resize(n);
  out.s.resize(n);
  const auto a = affine_of(p);
  parallel_blocks(n, [&](std::size_t b, std::size_t e) {
    Scratch w;
    first_draws(a, seed, b, e - b, w);
    std::copy(w.d.begin(), w.d.end(), out.d.begin() + b);
    std::copy(w.s.begin(), w.s.end(), out.s.begin() + b);
  });
  return out;
}

RatioSample sample_ratio(const BivarParams& p, std::size_t n, std::uint64_t seed) {
  p.validate();
  RatioSample out;
  out.r.resize(n);
  const auto a = affine_of(p);
  std::atomic<std::uint64_t> nonpos{0}, zeros{0};
  parallel_blocks(n, [&](std::size_t b, std::size_t e) {
    Scratch w;
    first_draws(a, seed, b, e - b, w);
    std::uint64_t np = 0, zr = 0;
    for (std::size_t i = 0; i < e - b; ++i) {
      double d = w.d[i], s = w.s[i];
      for (std::uint32_t att = 1; s == 0.0; ++att) {
        if (att >= kMaxAttempts) throw PolicyError("sample_ratio: S = 0 on every attempt");
        ++zr;
        draw_pair(a, seed, b + i, att, d, s);
      }
      if (s != w.s[i]) w.r[i] = d / s;
      if (s < 0.0) ++np;
      out.r[b + i] = w.r[i];
    }
    nonpos += np;
    zeros += zr;
  });
  out.nonpositive_s = nonpos.load();
  out.zero_resamples = zeros.load();
  return out;
}

void simulate_increments(const SimConfig& cfg, std::uint64_t first, std::span<double> out,
                         IncrementStats& stats) {
  cfg.validate();
  const auto a = affine_of(cfg.params);
  const double c = cfg.dt / cfg.tau0;
  const bool abort_policy = cfg.policy == RejectionPolicy::AbortOnNonpositiveR;
  std::mutex m;
  parallel_blocks(out.size(), [&](std::size_t b, std::size_t e) {
    Scratch w;
    const std::size_t n = e - b;
    first_draws(a, cfg.seed, first + b, n, w);
    IncrementStats local;
    local.draws = n;
    for (std::size_t i = 0; i < n; ++i) {
      double r = w.r[i];
      if (r > 0.0 && std::isfinite(r)) continue;
      if (abort_policy) {
        local.first_bad = std::min<std::uint64_t>(local.first_bad, first + b + i);
        w.r[i] = 1.0;
        continue;
      }
      std::uint32_t att = 0;
      do {
        if (++att >= kMaxAttempts)
          throw PolicyError(fmt::format("step {}: no positive ratio in {} draws", first + b + i,
                                        kMaxAttempts));
        ++local.rejections;
        ++local.draws;
        double d, s;
        draw_pair(a, cfg.seed, first + b + i, att, d, s);
        r = d / s;
      } while (!(r > 0.0 && std::isfinite(r)));
      w.r[i] = r;
    }
    std::span<double> dst = out.subspan(b, n);
    eval_g_batch(cfg.gspec, w.r, dst);
    kernels::active().scale(dst, c, dst);
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(dst[i]))
        throw DomainError(fmt::format("step {}: G(R) overflowed (R = {})", first + b + i, w.r[i]));
    std::lock_guard lock(m);
    stats.rejections += local.rejections;
    stats.draws += local.draws;
    stats.first_bad = std::min(stats.first_bad, local.first_bad);
  });
}

void enforce_policy(const SimConfig& cfg, const IncrementStats& st) {
  if (cfg.policy == RejectionPolicy::AbortOnNonpositiveR && st.first_bad != UINT64_MAX)
    throw PolicyError(fmt::format("nonpositive ratio D/S at step {} (abort policy)", st.first_bad));
  if (st.draws > 0) {
    const double rate = double(st.rejections) / double(st.draws);
    if (rate > cfg.max_rejection_rate)
      throw PolicyError(fmt::format("rejection rate {:.4g} exceeds the limit {:.4g}", rate,
                                    cfg.max_rejection_rate));
  }
}

PriceSeries simulate_path(const SimConfig& cfg) {
  cfg.validate();
  std::vector<double> inc(cfg.n_steps);
  IncrementStats st;
  simulate_increments(cfg, 0, inc, st);
  enforce_policy(cfg, st);
  PriceSeries ps;
  ps.times.resize(cfg.n_steps + 1);
  ps.log_prices.resize(cfg.n_steps + 1);
  double lp = std::log(cfg.p0);
  ps.log_prices[0] = lp;
  ps.times[0] = 0.0;
  for (std::uint64_t k = 0; k < cfg.n_steps; ++k) {
    lp += inc[k];
    ps.log_prices[k + 1] = lp;
    ps.times[k + 1] = double(k + 1) * cfg.dt;
  }
  ps.meta.model = "g";
  ps.meta.seed = cfg.seed;
  ps.meta.config_hash = cfg.hash();
  ps.meta.rejections = st.rejections;
  return ps;
}

PriceSeries simulate_gbm(double mu, double sigma, double dt, std::uint64_t n_steps, double p0,
                         std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("GBM: sigma must be >= 0");
  if (!(dt > 0.0) || n_steps == 0 || !(p0 > 0.0))
    throw DomainError("GBM: need dt > 0, n_steps >= 1 and p0 > 0");
  std::vector<double> z(n_steps);
  parallel_blocks(n_steps, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) z[k] = rng::normal_pair(seed, {k, 0, rng::kStreamGbm})[0];
  });
  PriceSeries ps;
  ps.times.resize(n_steps + 1);
  ps.log_prices.resize(n_steps + 1);
  const double lp0 = std::log(p0);
  const double m = mu - 0.5 * sigma * sigma;
  const double vol = sigma * std::sqrt(dt);
  double w = 0.0;
  for (std::uint64_t k = 0; k <= n_steps; ++k) {
    if (k > 0) w += z[k - 1];
    // drift from the step count, not an accumulated sum: sigma = 0 is exact
    ps.log_prices[k] = lp0 + m * double(k) * dt + vol * w;
    ps.times[k] = double(k) * dt;
  }
  KeyValues kv;
  kv.set("model", "gbm");
  kv.set("mu", mu);
  kv.set("sigma", sigma);
  kv.set("dt", dt);
  kv.set("n_steps", static_cast<unsigned long long>(n_steps));
  kv.set("p0", p0);
  kv.set("seed", static_cast<unsigned long long>(seed));
  ps.meta.model = "gbm";
  ps.meta.seed = seed;
  ps.meta.config_hash = sha256_hex(kv.to_text());
  return ps;
}

std::vector<double> log_increments(const PriceSeries& s, double scale) {
  std::vector<double> out;
  if (s.size() < 2) return out;
  out.resize(s.size() - 1);
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    out[i] = (s.log_prices[i + 1] - s.log_prices[i]) / scale;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> PriceSeries::prices() const {
  std::vector<double> p(log_prices.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(log_prices[i]);
  return p;
}

std::string PriceSeries::to_csv() const {
  bool representable = true;
  for (double lp : log_prices) {
    const double p = std::exp(lp);
    if (!std::isnormal(p)) {
      representable = false;
      break;
    }
  }
  std::string out = representable ? "t,price\n" : "t,log_price\n";
  out.reserve(out.size() + 40 * times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    out += format_double(times[i]);
    out += ',';
    out += format_double(representable ? std::exp(log_prices[i]) : log_prices[i]);
    out += '\n';
  }
  return out;
}

KeyValues PriceSeries::meta_kv() const {
  KeyValues kv;
  kv.set("model", meta.model);
  kv.set("seed", static_cast<unsigned long long>(meta.seed));
  kv.set("config_hash", meta.config_hash);
  kv.set("rejections", static_cast<unsigned long long>(meta.rejections));
  kv.set("n_points", size());
  return kv;
}

PriceSeries PriceSeries::from_csv_text(std::string_view text, std::string_view origin) {
  const CsvTable t = parse_csv(text, origin);
  PriceSeries ps;
  ps.times = t.numeric(t.column("t"));
  if (t.has_column("price")) {
    const auto p = t.numeric(t.column("price"));
    ps.log_prices.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!(p[i] > 0.0) || !std::isfinite(p[i]))
        throw InputError(fmt::format("{}: row {}: price must be positive", origin, i + 2));
      ps.log_prices[i] = std::log(p[i]);
    }
  } else if (t.has_column("log_price")) {
    ps.log_prices = t.numeric(t.column("log_price"));
    for (std::size_t i = 0; i < ps.log_prices.size(); ++i)
      if (!std::isfinite(ps.log_prices[i]))
        throw InputError(fmt::format("{}: row {}: log_price must be finite", origin, i + 2));
  } else {
    throw InputError(fmt::format("{}: expected a price or log_price column", origin));
  }
  for (std::size_t i = 1; i < ps.times.size(); ++i)
    if (!(ps.times[i] > ps.times[i - 1]))
      throw InputError(fmt::format("{}: times must be strictly increasing (row {})", origin, i + 2));
  ps.meta.model = "file";
  return ps;
}

PriceSeries PriceSeries::from_csv(const std::string& path) {
  return from_csv_text(read_file(path), path);
}

}  // namespace symprice
