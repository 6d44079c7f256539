#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace symprice {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws InputError when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const noexcept;
  /// Parses a column as doubles; throws InputError with the row number on
  /// malformed cells.
  std::vector<double> numeric(std::size_t col) const;
};

/// Comma-separated file with a mandatory header row. Blank lines are ignored.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(std::string_view text, std::string_view origin = "<memory>");

/// Shortest representation that round-trips to the same double.
std::string format_double(double x);

/// Writes to a temporary sibling and renames over `path`, so a failed run
/// never leaves a partial file behind.
void write_file_atomic(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

/// Ordered key=value record; the on-disk form of reports and manifests.
class KeyValues {
 public:
  void set(std::string key, std::string value);
  void set(std::string key, double value);
  void set(std::string key, long long value);
  void set(std::string key, unsigned long long value);
  void set(std::string key, std::size_t value) {
    set(std::move(key), static_cast<unsigned long long>(value));
  }
  void set(std::string key, int value) { set(std::move(key), static_cast<long long>(value)); }
  void set(std::string key, bool value) { set(std::move(key), std::string(value ? "true" : "false")); }
  void set(std::string key, const char* value) { set(std::move(key), std::string(value)); }

  const std::string* find(std::string_view key) const noexcept;
  /// Throws InputError when absent.
  const std::string& at(std::string_view key) const;
  double number(std::string_view key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept {
    return entries_;
  }
  void append(const KeyValues& other, std::string_view prefix = {});

  std::string to_text() const;
  static KeyValues parse(std::string_view text);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

double parse_double(std::string_view s);

}  // namespace symprice
