#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace effdyn {

/// Named numeric columns, one row per sample.
struct Series {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  Series() = default;
  explicit Series(std::vector<std::string> names) : columns(std::move(names)) {}

  void add_row(std::vector<double> row);
  std::vector<double> column(const std::string& name) const;
};

/// 17 significant digits, enough to round-trip any double exactly.
std::string format_double(double v);

std::string format_series(const Series& series);
Series parse_series(const std::string& text);

/// Writes header plus rows; throws IoError if the path cannot be written.
void emit_series(const Series& series, const std::filesystem::path& path);
Series read_series(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

} // namespace effdyn
