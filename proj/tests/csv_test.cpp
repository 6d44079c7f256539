#include <doctest.h>

#include <filesystem>

#include "symprice/csv.hpp"
#include "symprice/error.hpp"

using namespace symprice;

TEST_CASE("CSV parsing") {
  const auto t = parse_csv("x,g\r\n1, 2\n\n3,4.5\n");
  REQUIRE(t.header.size() == 2);
  CHECK(t.rows.size() == 2);
  CHECK(t.numeric(t.column("g")) == std::vector<double>{2.0, 4.5});
  CHECK_THROWS_AS(t.column("nope"), InputError);
  CHECK_THROWS_AS(parse_csv(""), InputError);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), InputError);
  CHECK_THROWS_AS(parse_csv("a\nfoo\n").numeric(0), InputError);
}

TEST_CASE("doubles round-trip through text") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 6.02214076e23})
    CHECK(parse_double(format_double(v)) == v);
}

TEST_CASE("key=value records") {
  KeyValues kv;
  kv.set("seed", 42ull);
  kv.set("mu", 0.25);
  kv.set("name", "sym");
  kv.set("mu", 0.5);
  const auto back = KeyValues::parse(kv.to_text());
  CHECK(back.at("seed") == "42");
  CHECK(back.number("mu") == 0.5);
  CHECK(back.entries().size() == 3);
  CHECK_THROWS_AS(back.at("missing"), InputError);
  CHECK_THROWS_AS(KeyValues::parse("novalue\n"), InputError);
}

TEST_CASE("atomic write leaves no temporary behind") {
  const auto dir = std::filesystem::temp_directory_path() / "symprice_csv_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "out.txt").string();
  write_file_atomic(path, "hello\n");
  CHECK(read_file(path) == "hello\n");
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
