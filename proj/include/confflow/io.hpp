#pragma once

// Output plumbing: %.17g CSV, ordered JSON, temp-file + rename writes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "confflow/error.hpp"

namespace confflow::io {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Writes through a sibling temp file and renames it into place.
inline void write_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  require(!ec, ErrorKind::invalid_input, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::invalid_input, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    require(static_cast<bool>(out), ErrorKind::invalid_input, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::invalid_input, "cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

inline std::string csv_text(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
  out += '\n';
  for (const auto& row : rows) {
    require(row.size() == header.size(), ErrorKind::invalid_input, "csv row width differs from header");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out += ',';
      out += format_double(row[j]);
    }
    out += '\n';
  }
  return out;
}

inline std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

inline Json read_json(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::config, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
}

/// A table read from a CSV file with a header row; all cells numeric.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::ptrdiff_t column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return static_cast<std::ptrdiff_t>(j);
    }
    return -1;
  }
};

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::config, "cannot read " + path.string());
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto a = cell.find_first_not_of(" \t\r");
      const auto b = cell.find_last_not_of(" \t\r");
      cells.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
    }
    return cells;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    require(cells.size() == table.header.size(), ErrorKind::config,
            path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(table.header.size()) +
                " cells");
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      require(!c.empty() && end && *end == '\0', ErrorKind::config,
              path.string() + ":" + std::to_string(lineno) + ": not a number: '" + c + "'");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  require(!table.header.empty(), ErrorKind::config, path.string() + ": empty file");
  return table;
}

/// Writes files below a root and remembers their relative paths.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const noexcept { return root_; }

  void text(const std::string& rel, const std::string& content) {
    write_atomic(root_ / rel, content);
    paths_.insert(rel);
  }
  void csv(const std::string& rel, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    text(rel, csv_text(header, rows));
  }
  void json(const std::string& rel, const Json& j) { text(rel, json_text(j)); }

  /// Sorted relative paths written so far.
  std::vector<std::string> paths() const { return {paths_.begin(), paths_.end()}; }

 private:
  fs::path root_;
  std::set<std::string> paths_;
};

}  // namespace confflow::io
