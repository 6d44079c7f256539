#include "symprice/manifest.hpp"

#include <charconv>
#include <chrono>
#include <ctime>

#include <fmt/format.h>

#include "symprice/error.hpp"

#ifndef SYMPRICE_VERSION
#define SYMPRICE_VERSION "0.0.0"
#endif

namespace symprice {

std::string_view library_version() noexcept { return SYMPRICE_VERSION; }

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

void put_files(KeyValues& kv, std::string_view group, const std::vector<FileRecord>& files) {
  for (std::size_t i = 0; i < files.size(); ++i) {
    const std::string p = fmt::format("{}.{}.", group, i);
    kv.set(p + "key", files[i].key);
    kv.set(p + "path", files[i].path);
    kv.set(p + "sha256", files[i].sha256);
  }
}

std::vector<FileRecord> get_files(const KeyValues& kv, std::string_view group) {
  std::vector<FileRecord> out;
  for (std::size_t i = 0;; ++i) {
    const std::string p = fmt::format("{}.{}.", group, i);
    if (!kv.find(p + "path")) break;
    out.push_back({kv.at(p + "key"), kv.at(p + "path"), kv.at(p + "sha256")});
  }
  return out;
}

std::uint64_t parse_u64(const std::string& s, std::string_view what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw InputError(fmt::format("manifest: bad {} '{}'", what, s));
  return v;
}

}  // namespace

std::string RunManifest::to_text() const {
  KeyValues kv;
  kv.set("command", command);
  kv.set("version", version);
  kv.set("seed", static_cast<unsigned long long>(seed));
  kv.set("threads", static_cast<unsigned long long>(threads));
  kv.set("cwd", cwd);
  kv.set("started", started);
  kv.set("finished", finished);
  kv.append(params, "param.");
  put_files(kv, "input", inputs);
  put_files(kv, "output", outputs);
  kv.append(meta, "meta.");
  return kv.to_text();
}

RunManifest RunManifest::parse(std::string_view text) {
  const KeyValues kv = KeyValues::parse(text);
  RunManifest m;
  m.command = kv.at("command");
  m.version = kv.at("version");
  m.seed = parse_u64(kv.at("seed"), "seed");
  m.threads = unsigned(parse_u64(kv.at("threads"), "threads"));
  m.cwd = kv.at("cwd");
  m.started = kv.at("started");
  m.finished = kv.at("finished");
  for (const auto& [k, v] : kv.entries())
    if (k.starts_with("param."))
      m.params.set(k.substr(6), v);
    else if (k.starts_with("meta."))
      m.meta.set(k.substr(5), v);
  m.inputs = get_files(kv, "input");
  m.outputs = get_files(kv, "output");
  return m;
}

RunManifest RunManifest::load(const std::string& path) { return parse(read_file(path)); }

}  // namespace symprice
