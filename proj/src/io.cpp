#include "dimer/io.hpp"

#include <charconv>
#include <cstdio>
#include <ctime>

#include "dimer/errors.hpp"

namespace dimer {

std::string format_value(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) {
    int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf, buf + n);
  }
  return std::string(buf, ptr);
}

TableWriter::TableWriter(const std::filesystem::path& path)
    : path_(path), stream_(path, std::ios::trunc) {
  if (!stream_) {
    throw ConfigError("cannot open output file " + path.string());
  }
}

void TableWriter::comment(const std::string& text) {
  stream_ << "# " << text << "\n";
}

void TableWriter::columns(const std::vector<std::string>& names) {
  column_count_ = names.size();
  for (size_t i = 0; i < names.size(); ++i) {
    stream_ << (i ? "," : "") << names[i];
  }
  stream_ << "\n";
}

void TableWriter::row(const std::vector<double>& values) {
  if (column_count_ != 0 && values.size() != column_count_) {
    throw ConfigError("row width does not match declared columns in " +
                      path_.string());
  }
  for (size_t i = 0; i < values.size(); ++i) {
    stream_ << (i ? "," : "") << format_value(values[i]);
  }
  stream_ << "\n";
}

void TableWriter::row_text(const std::vector<std::string>& cells) {
  if (column_count_ != 0 && cells.size() != column_count_) {
    throw ConfigError("row width does not match declared columns in " +
                      path_.string());
  }
  for (size_t i = 0; i < cells.size(); ++i) {
    stream_ << (i ? "," : "") << cells[i];
  }
  stream_ << "\n";
}

void TableWriter::close() {
  stream_.flush();
  if (!stream_) {
    throw ConfigError("write failure on " + path_.string());
  }
  stream_.close();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw ConfigError("cannot open output file " + path.string());
  }
  out << content;
  out.flush();
  if (!out) {
    throw ConfigError("write failure on " + path.string());
  }
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace dimer
