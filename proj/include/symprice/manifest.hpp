#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "symprice/csv.hpp"

namespace symprice {

std::string_view library_version() noexcept;
/// UTC wall time, ISO 8601 to the second.
std::string utc_now();

/// One file read or written by a run. `key` is the parameter naming it.
struct FileRecord {
  std::string key;
  std::string path;
  std::string sha256;
};

/// Everything needed to re-run a command: the resolved parameters, never the
/// raw command line. Wall times and the thread cap are recorded but do not
/// affect outputs.
struct RunManifest {
  std::string command;
  KeyValues params;
  std::uint64_t seed = 0;
  std::string version;
  std::string cwd;
  unsigned threads = 0;
  std::vector<FileRecord> inputs;
  std::vector<FileRecord> outputs;
  /// Run facts that are not parameters (rejection counts, config hash).
  KeyValues meta;
  std::string started;
  std::string finished;

  std::string to_text() const;
  static RunManifest parse(std::string_view text);
  static RunManifest load(const std::string& path);
  /// Sidecar path for an output artifact.
  static std::string sidecar(const std::string& artifact) { return artifact + ".manifest"; }
};

}  // namespace symprice
