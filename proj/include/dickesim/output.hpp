#pragma once

// CSV (RFC 4180) and JSON output helpers for the scenario runners. Numeric
// formatting is fixed at %.17g so identical runs produce bit-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace dickesim {

using Json = nlohmann::json;

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

/// One CSV cell: a number, a label, or empty (emitted for undefined values).
using Cell = std::variant<double, std::string, std::monostate>;

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot open output file " + path.string());
    write_row_of_strings(header);
  }

  void write_row(const std::vector<Cell>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line += ',';
      if (const double* d = std::get_if<double>(&cells[i]))
        line += fmt_double(*d);
      else if (const std::string* s = std::get_if<std::string>(&cells[i]))
        line += csv_quote(*s);
    }
    out_ << line << "\r\n";
  }

 private:
  void write_row_of_strings(const std::vector<std::string>& row) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += ',';
      line += csv_quote(row[i]);
    }
    out_ << line << "\r\n";
  }
  std::ofstream out_;
};

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace dickesim
