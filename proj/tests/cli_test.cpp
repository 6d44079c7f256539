#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include <unistd.h>

#include "symprice/app.hpp"
#include "symprice/csv.hpp"
#include "symprice/dist.hpp"

using namespace symprice;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "symprice");
  std::ostringstream out, err;
  int code = app::main(args, out, err);
  return {code, out.str(), err.str()};
}

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("symprice_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string at(const char* name) { return (scratch() / name).string(); }

}  // namespace

TEST_CASE("gcheck exit codes and reports") {
  auto sym = cli({"gcheck", "--family", "sym"});
  CHECK(sym.code == 0);
  CHECK(sym.out.find("all_conditions=PASS") != std::string::npos);

  auto log = cli({"gcheck", "--family", "log"});
  CHECK(log.code == 1);
  for (const char* k : {"i.status=PASS", "ii.status=PASS", "iii.status=PASS", "iv.status=FAIL",
                        "v.status=FAIL", "log_identity.status=PASS"})
    CHECK(log.out.find(k) != std::string::npos);

  write_file_atomic(at("bad_g.csv"), "x,g\n0.25,-0.75\n0.5,-0.5\n1,0\n2,1\n4,3\n");
  auto bad = cli({"gcheck", "--table", at("bad_g.csv")});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("iii.status=FAIL") != std::string::npos);
  CHECK(bad.out.find("iii.witnesses=2:0.5") != std::string::npos);

  write_file_atomic(at("broken.csv"), "x,g\n1,zero\n");
  CHECK(cli({"gcheck", "--table", at("broken.csv")}).code == 2);
  CHECK(cli({"gcheck"}).code == 2);
  CHECK(cli({"gcheck", "--family", "sym", "--bogus", "1"}).code == 2);
  CHECK(cli({"nosuch"}).code == 2);
}

TEST_CASE("density command: exact branch, Cauchy diagnostic, log transform") {
  auto r = cli({"density", "--out", at("d.csv"), "--points", "101"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("method=exact") != std::string::npos);
  const auto t = read_csv(at("d.csv"));
  const auto p = BivarParams::make(1, 1, 0.2, 0.2, -1);
  for (const auto& row : t.rows) {
    const double x = parse_double(row[0]);
    // closed form, written out independently
    const double den = 0.2 * x + 0.2;
    const double z = (x - 1) / den;
    const double f = den == 0 ? 0.0 : 0.4 / (std::sqrt(2 * std::numbers::pi) * den * den) *
                                          std::exp(-0.5 * z * z);
    CHECK(parse_double(row[1]) == doctest::Approx(f).epsilon(1e-12));
    CHECK(parse_double(row[1]) == ratio_density_anticorr(p, x));
    CHECK(row[2] == "exact");
  }
  CHECK(fs::exists(at("d.csv.manifest")));

  auto c = cli({"density", "--diagnostic", "--mu1", "0", "--mu2", "0", "--sigma1", "1",
                "--sigma2", "1", "--rho", "0", "--xmin", "-1", "--xmax", "1", "--points", "3"});
  REQUIRE(c.code == 0);
  const auto ct = parse_csv(c.out.substr(c.out.find("x,f,method")));
  CHECK(parse_double(ct.rows[1][1]) == doctest::Approx(1 / std::numbers::pi).epsilon(1e-12));

  auto l = cli({"density", "--transform", "log", "--xmin", "-12", "--xmax", "12", "--points",
                "97"});
  REQUIRE(l.code == 0);
  const auto kv = KeyValues::parse(l.out.substr(0, l.out.find("x,f,method")));
  CHECK(kv.number("tail_slope") == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("simulate determinism, GBM exactness and atomic failure") {
  REQUIRE(cli({"simulate", "--steps", "20000", "--seed", "4", "--out", at("s1.csv")}).code == 0);
  REQUIRE(cli({"simulate", "--steps", "20000", "--seed", "4", "--out", at("s2.csv"),
               "--threads", "3"}).code == 0);
  CHECK(read_file(at("s1.csv")) == read_file(at("s2.csv")));

  REQUIRE(cli({"simulate", "--model", "gbm", "--gbm-mu", "0.3", "--gbm-sigma", "0", "--steps",
               "1000", "--out", at("g.csv")}).code == 0);
  const auto g = read_csv(at("g.csv"));
  for (const auto& row : g.rows) {
    const double t = parse_double(row[0]);
    CHECK(parse_double(row[1]) == doctest::Approx(std::exp(0.3 * t)).epsilon(1e-12));
  }

  auto fail = cli({"simulate", "--sigma1", "0.6", "--sigma2", "0.6", "--steps", "50000", "--out",
                   at("never.csv")});
  CHECK(fail.code == 6);
  CHECK_FALSE(fs::exists(at("never.csv")));
  CHECK_FALSE(fs::exists(at("never.csv.manifest")));
}

TEST_CASE("simulate output feeds tails and fit unchanged") {
  REQUIRE(cli({"simulate", "--steps", "1000000", "--seed", "12", "--out", at("sym.csv")}).code == 0);
  auto t = cli({"tails", "--input", at("sym.csv"), "--out", at("tails.txt")});
  REQUIRE(t.code == 0);
  const auto kv = KeyValues::parse(read_file(at("tails.txt")));
  CHECK(kv.at("class") == "PowerLaw");
  CHECK(std::fabs(kv.number("estimate") - 2.0) <= 0.2);

  auto f = cli({"fit", "--input", at("sym.csv"), "--bootstrap", "4", "--out", at("fit.txt"),
                "--overlay", at("overlay.csv"), "--row", at("row.csv")});
  REQUIRE(f.code == 0);
  const auto fk = KeyValues::parse(read_file(at("fit.txt")));
  CHECK(fk.at("status") == "selected");
  CHECK(fk.at("family") == "PowerDiff");
  CHECK(std::fabs(fk.number("param_estimate") - 1.0) <= 0.15);
  CHECK(fk.at("implied_tail.kind") == "PowerLaw");
  CHECK(read_csv(at("overlay.csv")).header.size() == 3);
  CHECK(read_csv(at("row.csv")).rows.size() == 1);
  CHECK(f.out.find("simulation rejections") != std::string::npos);

  auto tie = cli({"fit", "--input", at("sym.csv"), "--candidates", "power:1,sym", "--out",
                  at("tie.txt")});
  CHECK(tie.code == 3);
  CHECK(tie.out.find("status=non_identifiable") != std::string::npos);
  CHECK_FALSE(fs::exists(at("tie.txt")));

  CHECK(cli({"fit", "--input", at("sym.csv"), "--delta-t", "0.01", "--big-delta-t", "0.05"})
            .code == 2);
  write_file_atomic(at("few.csv"), "value\n1\n2\n3\n");
  CHECK(cli({"tails", "--input", at("few.csv")}).code == 4);
}

TEST_CASE("replay reproduces outputs and detects changes") {
  REQUIRE(cli({"simulate", "--model", "power", "--param", "2", "--steps", "200000", "--out",
               at("p.csv")}).code == 0);
  REQUIRE(cli({"fit", "--input", at("p.csv"), "--bootstrap", "3", "--out", at("pf.txt")}).code == 0);
  auto r = cli({"replay", at("pf.txt.manifest"), "--out-dir", at("replay"), "--threads", "4"});
  CHECK(r.code == 0);
  CHECK(r.out.find("identical out") != std::string::npos);
  CHECK(read_file(at("pf.txt")) == read_file((scratch() / "replay" / "pf.txt").string()));
  CHECK(cli({"replay", at("p.csv.manifest"), "--out-dir", at("replay")}).code == 0);

  // a recorded hash that no longer matches
  std::string m = read_file(at("pf.txt.manifest"));
  const auto pos = m.find("output.0.sha256=") + 16;
  m[pos] = m[pos] == '0' ? '1' : '0';
  write_file_atomic(at("tampered.manifest"), m);
  CHECK(cli({"replay", at("tampered.manifest"), "--out-dir", at("replay2")}).code == 7);

  // the input changed since the run
  write_file_atomic(at("p.csv"), read_file(at("p.csv")) + "\n");
  CHECK(cli({"replay", at("pf.txt.manifest"), "--out-dir", at("replay3")}).code == 2);
  CHECK(cli({"replay", at("missing.manifest")}).code == 2);
}

TEST_CASE("execute rejects unknown parameters") {
  std::ostringstream out, err;
  KeyValues kv;
  kv.set("nonsense", "1");
  CHECK(app::execute({"simulate", kv}, out, err).code == app::kBadInput);
  CHECK(app::commands().size() == 5);
}
