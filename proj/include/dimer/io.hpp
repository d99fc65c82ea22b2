#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace dimer {

// Shortest decimal representation that round-trips a double; NaN cells print
// as "nan". Locale-independent.
std::string format_value(double v);

// Comma-separated table with '#'-prefixed metadata lines. Content is fully
// determined by what the caller writes: no timestamps, so identical runs
// produce byte-identical files.
class TableWriter {
 public:
  explicit TableWriter(const std::filesystem::path& path);

  void comment(const std::string& text);
  void columns(const std::vector<std::string>& names);
  void row(const std::vector<double>& values);
  // Rows mixing text and numeric cells (labels, engine tags).
  void row_text(const std::vector<std::string>& cells);

  // Flush and verify the stream; throws ConfigError on write failure.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream stream_;
  size_t column_count_ = 0;
};

// Write a string to a file atomically enough for our purposes (truncate +
// write + close), throwing ConfigError on failure.
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

// UTC wall-clock timestamp, ISO 8601. Only manifests may contain this.
std::string utc_timestamp();

}  // namespace dimer
