#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "symprice/csv.hpp"
#include "symprice/manifest.hpp"

namespace symprice::app {

/// Process exit codes. Stable: scripts depend on them.
enum Exit : int {
  kOk = 0,
  kConditionFailed = 1,   // gcheck: some condition (i)-(v) fails
  kBadInput = 2,          // usage, malformed files, invalid parameters
  kNonIdentifiable = 3,   // fit: tied candidates
  kInsufficientData = 4,  // too few points for an estimator
  kNumerical = 5,         // quadrature or optimiser failure
  kPolicy = 6,            // simulation rejection policy violated
  kReplayMismatch = 7,    // replay produced different bytes
};

/// A command with fully resolved parameters (flags > config > env > defaults).
struct Invocation {
  std::string command;
  KeyValues params;
};

struct RunResult {
  int code = kOk;
  std::vector<FileRecord> inputs;
  std::vector<FileRecord> outputs;
};

/// Runs one command. Output files are written atomically and only on
/// success; each gets a `.manifest` sidecar. `threads` caps workers and never
/// changes results.
RunResult execute(const Invocation& inv, std::ostream& out, std::ostream& err,
                  unsigned threads = 0);

/// Re-runs a manifest and compares every output with its recorded hash.
/// Outputs go to out_dir (by file name) when it is nonempty.
int replay(const std::string& manifest_path, const std::string& out_dir, unsigned threads,
           std::ostream& out, std::ostream& err);

/// Names of the commands execute() understands.
std::vector<std::string> commands();

int main(int argc, char** argv);
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace symprice::app
