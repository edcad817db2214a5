#pragma once

// Delimited time-series tables: ISO date in the first column, numeric
// columns after it.

#include "dol/errors.hpp"
#include "dol/linalg.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace dol::io {

struct Table {
  std::vector<std::string> dates;
  std::vector<std::string> columns;
  Matrix values;  // rows x columns

  Eigen::Index rows() const { return values.rows(); }

  int column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return static_cast<int>(i);
    }
    throw ConfigError("table: no column named '" + name + "'");
  }
};

enum class ColumnKind { Price, Return };

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const int month = std::stoi(s.substr(5, 2));
  const int day = std::stoi(s.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

}  // namespace detail

// Row numbers in error messages are 1-based file lines (the header is line 1).
inline Table parse_table(std::istream& in, const std::string& source = "<input>") {
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file");
  const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
  const auto header = detail::split(line, delim);
  if (header.size() < 2) throw DataError(source + ": header needs a date column and at least one series");

  Table t;
  t.columns.assign(header.begin() + 1, header.end());
  std::set<std::string> names;
  for (const auto& c : t.columns) {
    if (c.empty()) throw DataError(source + ": empty column name in header");
    if (!names.insert(c).second) throw DataError(source + ": duplicate column '" + c + "'");
  }

  std::vector<std::vector<double>> rows;
  std::set<std::string> seen;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, delim);
    const std::string where = source + ": row " + std::to_string(lineno);
    if (cells.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(cells.size()));
    }
    if (!detail::is_iso_date(cells[0])) throw DataError(where + ": '" + cells[0] + "' is not an ISO date");
    if (!seen.insert(cells[0]).second) throw DataError(where + ": duplicate date " + cells[0]);
    if (!t.dates.empty() && cells[0] < t.dates.back()) {
      throw DataError(where + ": dates must be increasing");
    }
    std::vector<double> vals(t.columns.size());
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const std::string col = "column '" + t.columns[c - 1] + "'";
      if (cells[c].empty()) throw DataError(where + ", " + col + ": missing value");
      if (!detail::parse_double(cells[c], vals[c - 1])) {
        throw DataError(where + ", " + col + ": cannot parse '" + cells[c] + "'");
      }
    }
    t.dates.push_back(cells[0]);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw DataError(source + ": no data rows");
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.columns.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return t;
}

inline Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  return parse_table(in, path);
}

// Converts declared price columns to discrete returns P_t / P_{t-1} - 1.
// When any column is a price the first row is dropped from every column so
// the table stays aligned; return columns pass through unchanged.
inline Table to_returns(const Table& raw, const std::map<std::string, ColumnKind>& kinds,
                        ColumnKind default_kind = ColumnKind::Return) {
  for (const auto& [name, kind] : kinds) raw.column_index(name);
  std::vector<ColumnKind> k;
  bool any_price = false;
  for (const auto& c : raw.columns) {
    const auto it = kinds.find(c);
    k.push_back(it == kinds.end() ? default_kind : it->second);
    any_price = any_price || k.back() == ColumnKind::Price;
  }
  if (!any_price) return raw;
  if (raw.rows() < 2) throw DataError("price conversion needs at least two rows");

  Table out;
  out.columns = raw.columns;
  out.dates.assign(raw.dates.begin() + 1, raw.dates.end());
  out.values.resize(raw.rows() - 1, raw.values.cols());
  for (Eigen::Index c = 0; c < raw.values.cols(); ++c) {
    for (Eigen::Index r = 1; r < raw.rows(); ++r) {
      if (k[static_cast<std::size_t>(c)] == ColumnKind::Return) {
        out.values(r - 1, c) = raw.values(r, c);
        continue;
      }
      const double prev = raw.values(r - 1, c);
      if (!(prev > 0.0) || !(raw.values(r, c) > 0.0)) {
        throw DataError("row " + std::to_string(r + 2) + ", column '" + raw.columns[static_cast<std::size_t>(c)] +
                        "': prices must be positive");
      }
      out.values(r - 1, c) = raw.values(r, c) / prev - 1.0;
    }
  }
  return out;
}

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_table(const Table& t, std::ostream& out) {
  out << "date";
  for (const auto& c : t.columns) out << '\t' << c;
  out << '\n';
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    out << t.dates[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < t.values.cols(); ++c) out << '\t' << format_number(t.values(r, c));
    out << '\n';
  }
}

}  // namespace dol::io
