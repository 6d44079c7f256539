#include "symprice/app.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "symprice/dist.hpp"
#include "symprice/error.hpp"
#include "symprice/fitg.hpp"
#include "symprice/gfunc.hpp"
#include "symprice/mc.hpp"
#include "symprice/parallel.hpp"
#include "symprice/tailest.hpp"

namespace fs = std::filesystem;

namespace symprice::app {

namespace {

struct Param {
  const char* key;
  const char* def;
  const char* help;
  bool flag = false;
};

struct CommandSpec {
  const char* name;
  const char* help;
  std::vector<Param> params;
  std::vector<std::string> inputs;   // keys naming input files
  std::vector<std::string> outputs;  // keys naming output files
};

const std::vector<CommandSpec>& specs() {
  static const std::vector<CommandSpec> s = {
      {"gcheck",
       "Check Condition G (i)-(v) and the derivative identities on a reciprocal grid",
       {{"family", "", "built-in family: sym, power, oddpow, logpow, log"},
        {"param", "1", "family parameter q"},
        {"table", "", "tabulated G as CSV x,g (instead of --family)"},
        {"xmax", "", "grid upper bound, grid is [1/xmax, xmax] (default 1e3; table: its own x)"},
        {"half", "200", "grid points on each side of 1"},
        {"out", "", "report file (key=value); stdout only when empty"}},
       {"table"},
       {"out"}},
      {"density",
       "Density of R = D/S, or of G(R) given R > 0, on a grid",
       {{"mu1", "1", "mean of D"},
        {"mu2", "1", "mean of S"},
        {"sigma1", "0.2", "sd of D"},
        {"sigma2", "0.2", "sd of S"},
        {"rho", "-1", "correlation; -1 uses the exact closed form"},
        {"transform", "", "density of G(R) for this family instead of R"},
        {"param", "1", "family parameter q for --transform"},
        {"grid", "linear", "linear or log"},
        {"xmin", "", "grid start (default -5, log grid 1e-2)"},
        {"xmax", "", "grid end (default 5, log grid 1e4)"},
        {"points", "1001", "grid points"},
        {"diagnostic", "false", "allow zero means (ratio of centred normals)", true},
        {"out", "", "CSV x,f,method; stdout when empty"}},
       {},
       {"out"}},
      {"simulate",
       "Simulate a price path d log P/dt = G(D/S)/tau0, or GBM",
       {{"model", "sym", "G family (sym, power, oddpow, logpow, log) or gbm"},
        {"param", "1", "family parameter q"},
        {"mu1", "1", "mean of D"},
        {"mu2", "1", "mean of S"},
        {"sigma1", "0.37", "sd of D"},
        {"sigma2", "0.37", "sd of S"},
        {"rho", "-1", "correlation of D and S"},
        {"tau0", "1", "time constant"},
        {"dt", "0.01", "time step"},
        {"steps", "100000", "number of steps"},
        {"p0", "1", "initial price"},
        {"seed", "1", "RNG seed (env SYMPRICE_SEED)"},
        {"policy", "resample", "nonpositive R: resample or abort"},
        {"max_rejection", "0.01", "fail above this rejected-draw fraction"},
        {"gbm_mu", "0.05", "GBM drift"},
        {"gbm_sigma", "0.2", "GBM volatility"},
        {"out", "series.csv", "price CSV t,price"}},
       {},
       {"out"}},
      {"tails",
       "Classify the tail of a sample: power law, exponential or stretched exponential",
       {{"input", "", "CSV with a value column, or a price CSV t,price"},
        {"column", "", "column to use (default: value, or the only column)"},
        {"as_returns", "", "treat input as prices, returns = d log P / dt with this dt"},
        {"candidates", "power,exp", "comma list of power, exp, stretched"},
        {"quantile", "0.99", "threshold quantile"},
        {"side", "both", "both (|x|), right or left"},
        {"out", "", "report file (key=value); stdout only when empty"}},
       {"input"},
       {"out"}},
      {"fit",
       "Fit candidate G families to the relative price changes of a series",
       {{"input", "", "price CSV t,price"},
        {"delta_t", "", "change interval (default: median sample spacing)"},
        {"big_delta_t", "", "window length (default: 1000 delta_t, at most the series span)"},
        {"stride", "", "window advance (default: window length)"},
        {"mode", "log", "log (d log P / dt) or simple (dP / (P dt))"},
        {"interpolate", "false", "interpolate log price at missing timestamps", true},
        {"candidates", "power,log,logpow:3,oddpow:3", "families; power alone frees q"},
        {"bootstrap", "20", "window bootstrap replicates for the stderr of q"},
        {"seed", "1", "bootstrap seed (env SYMPRICE_SEED)"},
        {"tie_tolerance", "1e-4", "per-point log-likelihood tie threshold"},
        {"out", "", "report file (key=value); stdout only when empty"},
        {"overlay", "", "CSV of fitted vs empirical density"},
        {"row", "", "CSV summary row with header"}},
       {"input"},
       {"out", "overlay", "row"}},
  };
  return s;
}

const CommandSpec& spec_for(const std::string& name) {
  for (const auto& s : specs())
    if (name == s.name) return s;
  throw InputError(fmt::format("unknown command '{}'", name));
}

std::string cli_flag(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

// ---------------------------------------------------------------------------
// Parameter access

class Params {
 public:
  Params(const CommandSpec& spec, const KeyValues& given) {
    for (const auto& p : spec.params) kv_.set(p.key, p.def);
    for (const auto& [k, v] : given.entries()) {
      bool known = std::any_of(spec.params.begin(), spec.params.end(),
                               [&](const Param& p) { return k == p.key; });
      if (!known) throw InputError(fmt::format("{}: unknown parameter '{}'", spec.name, k));
      kv_.set(k, v);
    }
  }
  const KeyValues& kv() const { return kv_; }
  const std::string& str(std::string_view k) const { return kv_.at(k); }
  bool has(std::string_view k) const { return !str(k).empty(); }
  double num(std::string_view k) const {
    try {
      return parse_double(str(k));
    } catch (const Error&) {
      throw InputError(fmt::format("{}: expected a number, got '{}'", cli_flag(std::string(k)), str(k)));
    }
  }
  std::uint64_t u64(std::string_view k) const {
    const auto& s = str(k);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw InputError(fmt::format("{}: expected a non-negative integer, got '{}'",
                                   cli_flag(std::string(k)), s));
    return v;
  }
  bool flag(std::string_view k) const {
    const auto& s = str(k);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0" || s.empty()) return false;
    throw InputError(fmt::format("{}: expected true or false, got '{}'", cli_flag(std::string(k)), s));
  }

 private:
  KeyValues kv_;
};

GSpec family_from(const Params& p, std::string_view key) {
  auto f = parse_family(p.str(key));
  if (!f) throw InputError(fmt::format("{}: unknown family '{}'", cli_flag(std::string(key)), p.str(key)));
  GSpec g{*f, 1.0};
  if (g.uses_param()) g.param = p.num("param");
  g.validate();
  return g;
}

// Files produced by a command, written by execute() once everything succeeded.
struct Artifacts {
  int code = kOk;
  std::vector<std::pair<std::string, std::string>> files;  // output key, content
  KeyValues meta;
  std::uint64_t seed = 0;
};

double median_step(const std::vector<double>& t) {
  if (t.size() < 2) throw InsufficientDataError("series needs at least two samples");
  std::vector<double> d(t.size() - 1);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) d[i] = t[i + 1] - t[i];
  std::nth_element(d.begin(), d.begin() + std::ptrdiff_t(d.size() / 2), d.end());
  const double med = d[d.size() / 2];
  // Differences of k * dt carry rounding; a uniform grid gets span / steps.
  const bool uniform = std::all_of(d.begin(), d.end(),
                                   [&](double x) { return std::fabs(x - med) <= 1e-6 * med; });
  return uniform ? (t.back() - t.front()) / double(t.size() - 1) : med;
}

// ---------------------------------------------------------------------------
// Commands

Artifacts cmd_gcheck(const Params& p, std::ostream& out) {
  if (p.has("family") == p.has("table"))
    throw InputError("gcheck: give exactly one of --family and --table");
  ConditionGReport rep;
  if (p.has("family")) {
    const GSpec g = family_from(p, "family");
    const double xmax = p.has("xmax") ? p.num("xmax") : 1e3;
    const auto grid = reciprocal_log_grid(xmax, std::size_t(p.u64("half")));
    rep = check_condition_g(g, grid);
  } else {
    const auto table = TabulatedG::from_csv(p.str("table"));
    std::vector<double> grid = table.xs();
    if (p.has("xmax")) grid = reciprocal_log_grid(p.num("xmax"), std::size_t(p.u64("half")));
    rep = check_condition_g(table, grid);
  }
  const std::string text = rep.to_text();
  out << text;
  Artifacts a;
  a.code = rep.all_conditions_pass() ? kOk : kConditionFailed;
  if (p.has("out")) a.files.emplace_back("out", text);
  return a;
}

Artifacts cmd_density(const Params& p, std::ostream& out) {
  const BivarParams bp =
      p.flag("diagnostic")
          ? BivarParams::unchecked(p.num("mu1"), p.num("mu2"), p.num("sigma1"), p.num("sigma2"),
                                   p.num("rho"))
          : BivarParams::make(p.num("mu1"), p.num("mu2"), p.num("sigma1"), p.num("sigma2"),
                              p.num("rho"));
  const bool log_grid = p.str("grid") == "log";
  if (!log_grid && p.str("grid") != "linear")
    throw InputError(fmt::format("--grid: expected linear or log, got '{}'", p.str("grid")));
  const double lo = p.has("xmin") ? p.num("xmin") : (log_grid ? 1e-2 : -5.0);
  const double hi = p.has("xmax") ? p.num("xmax") : (log_grid ? 1e4 : 5.0);
  const auto n = std::size_t(p.u64("points"));
  if (n < 2 || !(hi > lo) || (log_grid && !(lo > 0)))
    throw InputError("density: need points >= 2 and xmin < xmax (xmin > 0 on a log grid)");
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = double(i) / double(n - 1);
    grid[i] = log_grid ? std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)))
                       : lo + u * (hi - lo);
  }
  grid.back() = hi;

  KeyValues diag;
  DensityCurve curve;
  if (p.has("transform")) {
    const GSpec g = family_from(p, "transform");
    curve = transform_density_curve(bp, g, grid);
    const TailClass tail = predicted_tail(g);
    const Density f = [&](double y) { return transform_density(bp, g, y); };
    diag.set("predicted_tail", tail.describe());
    if (tail.kind == TailClass::Kind::PowerLaw) {
      diag.set("tail_slope.range", "[1e2,1e4] log-log");
      diag.set("tail_slope", log_slope(f, 1e2, 1e4, false));
    } else if (tail.kind == TailClass::Kind::Exponential) {
      diag.set("tail_slope.range", "[5,12] semi-log");
      diag.set("tail_slope", log_slope(f, 5.0, 12.0, true));
    } else {
      diag.set("tail_slope", "n/a");
    }
  } else {
    curve = ratio_density_curve(bp, grid);
    const Density f = [&](double x) { return ratio_pdf(bp, x); };
    diag.set("tail_slope.range", "[1e2,1e4] log-log");
    diag.set("tail_slope", log_slope(f, 1e2, 1e4, false));
  }
  KeyValues head;
  head.set("method", std::string(method_name(curve.method)));
  head.set("points", n);
  head.set("mass", curve.mass);
  head.append(diag);
  out << head.to_text();
  Artifacts a;
  if (p.has("out"))
    a.files.emplace_back("out", curve.to_csv());
  else
    out << curve.to_csv();
  return a;
}

Artifacts cmd_simulate(const Params& p, std::ostream& out) {
  PriceSeries s;
  Artifacts a;
  a.seed = p.u64("seed");
  if (p.str("model") == "gbm") {
    s = simulate_gbm(p.num("gbm_mu"), p.num("gbm_sigma"), p.num("dt"), p.u64("steps"),
                     p.num("p0"), a.seed);
  } else {
    SimConfig c;
    c.params = BivarParams::make(p.num("mu1"), p.num("mu2"), p.num("sigma1"), p.num("sigma2"),
                                 p.num("rho"));
    c.gspec = family_from(p, "model");
    c.tau0 = p.num("tau0");
    c.dt = p.num("dt");
    c.n_steps = p.u64("steps");
    c.p0 = p.num("p0");
    c.seed = a.seed;
    const auto pol = parse_policy(p.str("policy"));
    if (!pol) throw InputError(fmt::format("--policy: expected resample or abort, got '{}'", p.str("policy")));
    c.policy = *pol;
    c.max_rejection_rate = p.num("max_rejection");
    s = simulate_path(c);
  }
  const auto r = log_increments(s);
  double mean = 0, var = 0;
  for (double x : r) mean += x;
  mean /= double(std::max<std::size_t>(1, r.size()));
  for (double x : r) var += (x - mean) * (x - mean);
  var /= double(std::max<std::size_t>(2, r.size()) - 1);

  a.meta = s.meta_kv();
  a.meta.set("steps", static_cast<unsigned long long>(r.size()));
  KeyValues sum;
  sum.set("steps", r.size());
  sum.set("mean_log_return", mean);
  sum.set("var_log_return", var);
  sum.set("rejections", static_cast<unsigned long long>(s.meta.rejections));
  sum.set("rejection_rate", r.empty() ? 0.0 : double(s.meta.rejections) / double(r.size()));
  sum.set("config_hash", s.meta.config_hash);
  out << sum.to_text();
  a.files.emplace_back("out", s.to_csv());
  return a;
}

std::vector<double> sample_column(const Params& p) {
  const std::string& path = p.str("input");
  if (path.empty()) throw InputError("--input is required");
  const CsvTable t = read_csv(path);
  const bool is_prices = t.has_column("t") && (t.has_column("price") || t.has_column("log_price"));
  if (p.has("as_returns") || (is_prices && !p.has("column"))) {
    const auto s = PriceSeries::from_csv(path);
    const double dt = p.has("as_returns") ? p.num("as_returns") : median_step(s.times);
    return log_increments(s, dt);
  }
  if (p.has("column")) return t.numeric(t.column(p.str("column")));
  if (t.has_column("value")) return t.numeric(t.column("value"));
  if (t.header.size() == 1) return t.numeric(0);
  throw InputError(fmt::format("{}: no 'value' column; pick one with --column", path));
}

Artifacts cmd_tails(const Params& p, std::ostream& out) {
  const auto values = sample_column(p);
  std::vector<TailClass::Kind> kinds;
  std::string_view list = p.str("candidates");
  while (!list.empty()) {
    auto comma = list.find(',');
    auto item = list.substr(0, comma);
    list = comma == std::string_view::npos ? std::string_view{} : list.substr(comma + 1);
    if (item.empty()) continue;
    auto k = parse_tail_kind(item);
    if (!k) throw InputError(fmt::format("--candidates: unknown tail class '{}'", item));
    kinds.push_back(*k);
  }
  ClassifyOptions opt;
  opt.threshold_quantile = p.num("quantile");
  const auto side = parse_side(p.str("side"));
  if (!side) throw InputError(fmt::format("--side: expected both, right or left, got '{}'", p.str("side")));
  opt.side = *side;
  const TailReport rep = classify_tail(values, kinds, opt);

  out << rep.tail.describe() << "\n";
  out << fmt::format("estimate {:.6g} +/- {:.2g} from k = {} of n = {} (threshold quantile {})\n",
                     rep.estimate, rep.stderr_, rep.k_used, rep.n_total, rep.quantile);
  out << "threshold sweep " << (rep.sweep_consistent() ? "consistent" : "NOT consistent") << ":";
  for (const auto& s : rep.sweep)
    out << fmt::format(" q={} {} {:.4g};", s.quantile, tail_kind_name(s.best), s.estimate);
  out << "\n";
  const std::string text = rep.to_kv().to_text();
  Artifacts a;
  if (p.has("out"))
    a.files.emplace_back("out", text);
  else
    out << text;
  return a;
}

// Rejection counts of a simulated input, from its manifest sidecar.
ReportContext context_from_sidecar(const std::string& input) {
  ReportContext ctx;
  std::error_code ec;
  const std::string side = RunManifest::sidecar(input);
  if (!fs::exists(side, ec)) return ctx;
  try {
    const auto m = RunManifest::load(side);
    if (const auto* r = m.meta.find("rejections")) ctx.rejections = std::stoull(*r);
    if (const auto* s = m.meta.find("steps")) ctx.steps = std::stoull(*s);
  } catch (const std::exception&) {
    // an unreadable sidecar only costs the caveat
  }
  return ctx;
}

Artifacts cmd_fit(const Params& p, std::ostream& out, std::ostream& err) {
  if (!p.has("input")) throw InputError("--input is required");
  const auto series = PriceSeries::from_csv(p.str("input"));
  WindowSpec w;
  w.delta_t = p.has("delta_t") ? p.num("delta_t") : median_step(series.times);
  const double span = series.times.back() - series.times.front();
  if (p.has("big_delta_t")) {
    w.big_delta_t = p.num("big_delta_t");
  } else {
    w.big_delta_t = std::min(1000.0, std::floor(span / w.delta_t * (1 + 1e-12))) * w.delta_t;
  }
  w.stride = p.has("stride") ? p.num("stride") : w.big_delta_t;
  ChangeOptions co;
  if (p.str("mode") == "simple")
    co.mode = ChangeMode::Simple;
  else if (p.str("mode") != "log")
    throw InputError(fmt::format("--mode: expected log or simple, got '{}'", p.str("mode")));
  else
    co.mode = ChangeMode::Log;
  co.interpolate = p.flag("interpolate");
  const RelativeChanges rc = relative_changes(series, w, co);

  FitOptions fo;
  fo.bootstrap = std::size_t(p.u64("bootstrap"));
  fo.seed = p.u64("seed");
  fo.tie_tolerance = p.num("tie_tolerance");
  const auto candidates = parse_candidates(p.str("candidates"));

  ReportContext ctx = context_from_sidecar(p.str("input"));
  ctx.interpolated_fraction = rc.interpolated_fraction();
  ctx.interpolation_flagged = rc.interpolation_flagged();
  try {
    const auto tr = classify_tail(rc.values,
                                  {TailClass::Kind::PowerLaw, TailClass::Kind::Exponential});
    std::string sweep;
    for (const auto& s : tr.sweep)
      sweep += fmt::format("{}{} at q={}", sweep.empty() ? "" : ", ", tail_kind_name(s.best),
                           s.quantile);
    ctx.sensitivity = fmt::format("threshold sweep of the changes {}: {}",
                                  tr.sweep_consistent() ? "stable" : "UNSTABLE", sweep);
  } catch (const Error& e) {
    ctx.sensitivity = std::string("threshold sweep unavailable: ") + e.what();
  }

  KeyValues head;
  head.set("window.delta_t", w.delta_t);
  head.set("window.big_delta_t", w.big_delta_t);
  head.set("window.stride", w.stride);
  head.set("window.count", rc.n_windows);
  head.set("mode", p.str("mode"));
  head.set("interpolated_fraction", rc.interpolated_fraction());

  Artifacts a;
  a.seed = fo.seed;
  GFitResult r;
  try {
    r = fit_g(rc, candidates, fo);
  } catch (const NonIdentifiableError& e) {
    err << "fit: " << e.what() << "\n";
    KeyValues kv;
    kv.set("status", "non_identifiable");
    kv.append(head);
    kv.append(e.partial().to_kv());
    out << kv.to_text();
    a.code = kNonIdentifiable;
    return a;
  }
  const ExponentReport rep = exponent_report(r, ctx);
  KeyValues kv;
  kv.set("status", "selected");
  kv.append(head);
  kv.append(rep.kv);
  out << rep.text;
  if (p.has("out"))
    a.files.emplace_back("out", kv.to_text());
  else
    out << kv.to_text();
  if (p.has("overlay")) a.files.emplace_back("overlay", density_overlay_csv(rc.values, r));
  if (p.has("row")) a.files.emplace_back("row", GFitResult::csv_header() + "\n" + r.csv_row() + "\n");
  return a;
}

int code_for(const std::exception& e) {
  if (dynamic_cast<const NonIdentifiableError*>(&e)) return kNonIdentifiable;
  if (dynamic_cast<const InsufficientDataError*>(&e)) return kInsufficientData;
  if (dynamic_cast<const ConvergenceError*>(&e)) return kNumerical;
  if (dynamic_cast<const PolicyError*>(&e)) return kPolicy;
  return kBadInput;
}

}  // namespace

std::vector<std::string> commands() {
  std::vector<std::string> out;
  for (const auto& s : specs()) out.emplace_back(s.name);
  return out;
}

RunResult execute(const Invocation& inv, std::ostream& out, std::ostream& err, unsigned threads) {
  RunResult res;
  RunManifest m;
  m.started = utc_now();
  try {
    const CommandSpec& spec = spec_for(inv.command);
    const Params p(spec, inv.params);
    set_thread_count(threads);
    for (const auto& key : spec.inputs)
      if (p.has(key)) res.inputs.push_back({key, p.str(key), sha256_file(p.str(key))});

    Artifacts a;
    if (inv.command == "gcheck") a = cmd_gcheck(p, out);
    else if (inv.command == "density") a = cmd_density(p, out);
    else if (inv.command == "simulate") a = cmd_simulate(p, out);
    else if (inv.command == "tails") a = cmd_tails(p, out);
    else a = cmd_fit(p, out, err);
    res.code = a.code;

    for (const auto& [key, content] : a.files)
      res.outputs.push_back({key, p.str(key), sha256_hex(content)});
    for (const auto& [key, content] : a.files) write_file_atomic(p.str(key), content);

    if (!res.outputs.empty()) {
      m.command = inv.command;
      m.params = p.kv();
      m.seed = a.seed;
      m.version = std::string(library_version());
      m.cwd = fs::current_path().string();
      m.threads = thread_count();
      m.inputs = res.inputs;
      m.outputs = res.outputs;
      m.meta = a.meta;
      m.finished = utc_now();
      const std::string text = m.to_text();
      for (const auto& o : res.outputs) write_file_atomic(RunManifest::sidecar(o.path), text);
    }
  } catch (const std::exception& e) {
    err << inv.command << ": " << e.what() << "\n";
    res.code = code_for(e);
    res.outputs.clear();
  }
  set_thread_count(0);
  return res;
}

int replay(const std::string& manifest_path, const std::string& out_dir, unsigned threads,
           std::ostream& out, std::ostream& err) {
  RunManifest m;
  try {
    m = RunManifest::load(manifest_path);
  } catch (const std::exception& e) {
    err << "replay: " << e.what() << "\n";
    return kBadInput;
  }
  const fs::path base = m.cwd;
  auto resolve = [&](const std::string& path) {
    fs::path q(path);
    return q.is_relative() ? (base / q).string() : path;
  };
  Invocation inv{m.command, m.params};
  for (const auto& in : m.inputs) {
    const std::string path = resolve(in.path);
    std::string sha;
    try {
      sha = sha256_file(path);
    } catch (const std::exception& e) {
      err << "replay: " << e.what() << "\n";
      return kBadInput;
    }
    if (sha != in.sha256) {
      err << fmt::format("replay: input {} changed since the run (sha256 {} != {})\n", path, sha,
                         in.sha256);
      return kBadInput;
    }
    inv.params.set(in.key, path);
  }
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
  }
  for (const auto& o : m.outputs) {
    const std::string path = out_dir.empty()
                                 ? resolve(o.path)
                                 : (fs::path(out_dir) / fs::path(o.path).filename()).string();
    inv.params.set(o.key, path);
  }
  std::ostringstream sink;
  const RunResult r = execute(inv, sink, err, threads);
  if (r.code != kOk && r.code != kConditionFailed) return r.code;
  int code = kOk;
  for (const auto& o : m.outputs) {
    auto it = std::find_if(r.outputs.begin(), r.outputs.end(),
                           [&](const FileRecord& f) { return f.key == o.key; });
    const bool same = it != r.outputs.end() && it->sha256 == o.sha256;
    out << fmt::format("{} {} {}\n", same ? "identical" : "DIFFERENT", o.key,
                       it != r.outputs.end() ? it->path : std::string("(missing)"));
    if (!same) code = kReplayMismatch;
  }
  return code;
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App cli{"Symmetric supply/demand price model: simulate, densities, tails, fit G", "symprice"};
  cli.set_config("--config", "", "key=value config file; flags override it");
  cli.set_version_flag("--version", std::string(library_version()));
  unsigned threads = 0;
  cli.add_option("--threads", threads, "worker cap, 0 = all cores (env SYMPRICE_THREADS)")
      ->envname("SYMPRICE_THREADS");
  cli.require_subcommand(1);
  cli.fallthrough();

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::map<std::string, bool>> flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& s : specs()) {
    CLI::App* sub = cli.add_subcommand(s.name, s.help);
    subs[s.name] = sub;
    for (const auto& prm : s.params) {
      if (prm.flag) {
        flags[s.name][prm.key] = false;
        sub->add_flag(cli_flag(prm.key), flags[s.name][prm.key], prm.help);
        continue;
      }
      auto& slot = values[s.name][prm.key];
      slot = prm.def;
      auto* opt = sub->add_option(cli_flag(prm.key), slot, prm.help);
      if (*prm.def) opt->default_str(prm.def);
      if (std::string_view(prm.key) == "seed") opt->envname("SYMPRICE_SEED");
    }
  }
  std::string manifest, out_dir;
  CLI::App* rp = cli.add_subcommand("replay", "Re-run a manifest and verify its outputs byte for byte");
  rp->add_option("manifest", manifest, "manifest file (an output's .manifest sidecar)")->required();
  rp->add_option("--out-dir", out_dir, "write outputs here instead of their recorded paths");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    cli.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e, out, err);
    return code == 0 ? kOk : kBadInput;
  }
  if (rp->parsed()) return replay(manifest, out_dir, threads, out, err);
  for (const auto& s : specs()) {
    if (!subs[s.name]->parsed()) continue;
    Invocation inv{s.name, {}};
    for (const auto& prm : s.params)
      inv.params.set(prm.key, prm.flag ? std::string(flags[s.name][prm.key] ? "true" : "false")
                                       : values[s.name][prm.key]);
    return execute(inv, out, err, threads).code;
  }
  return kBadInput;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return main(args, std::cout, std::cerr);
}

}  // namespace symprice::app
