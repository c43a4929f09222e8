#include "effdyn/csv.hpp"

#include "effdyn/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace effdyn {

void Series::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw std::invalid_argument("series row has wrong column count");
  rows.push_back(std::move(row));
}

std::vector<double> Series::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::invalid_argument("series has no column '" + name + "'");
  const auto c = static_cast<size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_series(const Series& series) {
  std::string out;
  for (size_t c = 0; c < series.columns.size(); ++c) {
    if (c) out += ',';
    out += series.columns[c];
  }
  out += '\n';
  for (const auto& row : series.rows) {
    for (size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

Series parse_series(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Series s;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (header) {
      s.columns = cells;
      header = false;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      row.push_back(std::strtod(c.c_str(), &end));
      if (end == c.c_str()) throw std::invalid_argument("unparsable CSV cell '" + c + "'");
    }
    s.add_row(std::move(row));
  }
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit_series(const Series& series, const std::filesystem::path& path) {
  write_text(path, format_series(series));
}

Series read_series(const std::filesystem::path& path) { return parse_series(read_text(path)); }

} // namespace effdyn
