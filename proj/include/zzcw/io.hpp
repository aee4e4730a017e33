#pragma once

// Result tables with a metadata block, written as CSV (canonical) or JSON.

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "zzcw/version.hpp"

namespace zzcw::io {

using Cell = std::variant<std::int64_t, double, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::logic_error("table row width does not match the header");
    rows.push_back(std::move(row));
  }
};

struct Document {
  std::string command;
  /// Resolved configuration in a fixed key order.
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::string> watermarks;
  std::vector<std::pair<std::string, Cell>> summary;
  Table table;
};

enum class Format { Csv, Json };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw std::invalid_argument("unknown format '" + s + "' (expected csv or json)");
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string to_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return format_double(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else if constexpr (std::is_same_v<T, std::string>) return v;
        else return std::to_string(v);
      },
      c);
}

inline nlohmann::ordered_json to_json(const Cell& c) {
  return std::visit([](const auto& v) { return nlohmann::ordered_json(v); }, c);
}

inline void write_csv(std::ostream& os, const Document& doc) {
  os << "# schema=" << kSchema << "\n";
  os << "# version=" << kVersion << "\n";
  os << "# command=" << doc.command << "\n";
  for (const auto& [k, v] : doc.config) os << "# config." << k << "=" << v << "\n";
  for (const auto& w : doc.watermarks) os << "# watermark=" << w << "\n";
  for (const auto& [k, v] : doc.summary) os << "# summary." << k << "=" << to_text(v) << "\n";
  for (std::size_t i = 0; i < doc.table.columns.size(); ++i) os << (i ? "," : "") << doc.table.columns[i];
  os << "\n";
  for (const auto& row : doc.table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << to_text(row[i]);
    os << "\n";
  }
}

inline void write_json(std::ostream& os, const Document& doc) {
  nlohmann::ordered_json j;
  j["schema"] = kSchema;
  j["version"] = kVersion;
  j["command"] = doc.command;
  auto& cfg = j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : doc.config) cfg[k] = v;
  j["watermarks"] = doc.watermarks;
  auto& sum = j["summary"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : doc.summary) sum[k] = to_json(v);
  j["columns"] = doc.table.columns;
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : doc.table.rows) {
    auto r = nlohmann::ordered_json::array();
    for (const auto& c : row) r.push_back(to_json(c));
    rows.push_back(std::move(r));
  }
  os << j.dump(2) << "\n";
}

inline void write(std::ostream& os, const Document& doc, Format f) {
  if (f == Format::Csv) write_csv(os, doc);
  else write_json(os, doc);
}

}  // namespace zzcw::io
