#pragma once

// Result tables and their serialization.  Experiments hand back a Table; the
// writers emit CSV (RFC-4180 quoting, shortest round-trip doubles) or JSON
// with the resolved configuration recorded alongside the data, so a result
// file always identifies the run that produced it.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "catsim/errors.hpp"

namespace catsim {

// Shortest decimal string that parses back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

// empty cells serialize as nothing (CSV) or null (JSON)
using Cell = std::variant<std::monostate, long long, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void push(std::vector<Cell> row) {
    if (row.size() != columns.size())
      throw InvalidArgument("row width does not match the declared columns");
    rows.push_back(std::move(row));
  }
};

struct Provenance {
  std::string paper_target;
  double tolerance = 0.0;
};

struct RunConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::string format;
  std::map<std::string, std::string> parameters;  // sorted, fully resolved
};

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

inline std::string csv_cell(const Cell& c) {
  if (std::holds_alternative<std::monostate>(c)) return "";
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  return csv_quote(std::get<std::string>(c));
}

inline void write_csv(std::ostream& os, const RunConfig& cfg, const Provenance& prov,
                      const Table& t) {
  os << "# experiment = " << cfg.experiment << "\n";
  os << "# seed = " << cfg.seed << "\n";
  os << "# format = " << cfg.format << "\n";
  for (const auto& [k, v] : cfg.parameters) os << "# " << k << " = " << v << "\n";
  if (!prov.paper_target.empty())
    os << "# target = " << prov.paper_target << " (tolerance "
       << format_double(prov.tolerance) << ")\n";
  for (std::size_t j = 0; j < t.columns.size(); ++j)
    os << (j ? "," : "") << csv_quote(t.columns[j]);
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t j = 0; j < row.size(); ++j)
      os << (j ? "," : "") << csv_cell(row[j]);
    os << "\n";
  }
}

inline void write_json(std::ostream& os, const RunConfig& cfg, const Provenance& prov,
                       const Table& t) {
  nlohmann::ordered_json doc;
  doc["config"]["experiment"] = cfg.experiment;
  doc["config"]["seed"] = cfg.seed;
  doc["config"]["format"] = cfg.format;
  doc["config"]["parameters"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : cfg.parameters) doc["config"]["parameters"][k] = v;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json r = nlohmann::ordered_json::object();
    for (std::size_t j = 0; j < row.size(); ++j) {
      const Cell& c = row[j];
      if (std::holds_alternative<std::monostate>(c))
        r[t.columns[j]] = nullptr;
      else if (const auto* i = std::get_if<long long>(&c))
        r[t.columns[j]] = *i;
      else if (const auto* d = std::get_if<double>(&c))
        r[t.columns[j]] = *d;
      else
        r[t.columns[j]] = std::get<std::string>(c);
    }
    doc["rows"].push_back(std::move(r));
  }
  doc["provenance"]["paper_target"] = prov.paper_target;
  doc["provenance"]["tolerance"] = prov.tolerance;
  os << doc.dump(2) << "\n";
}

// Flat `key = value` configuration text: one pair per line, '#' comments,
// blank lines ignored.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    ++lineno;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const std::size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const std::size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(lineno) +
                            ": expected key = value");
    const std::string key = strip(line.substr(0, eq));
    const std::string val = strip(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw InvalidArgument("config line " + std::to_string(lineno) +
                            ": empty key or value");
    if (!out.emplace(key, val).second)
      throw InvalidArgument("config line " + std::to_string(lineno) +
                            ": duplicate key '" + key + "'");
  }
  return out;
}

// Numeric literal with optional pi arithmetic: "2", "1e-3", "pi", "-pi/2",
// "3pi/8", "0.5*pi".  Angles in configs stay readable without a parser
// dependency.
inline double parse_real(const std::string& s) {
  const auto fail = [&]() -> double {
    throw InvalidArgument("cannot parse number '" + s + "'");
  };
  const auto to_num = [&](const std::string& part) {
    double v = 0.0;
    const char* b = part.data();
    const char* e = b + part.size();
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) fail();
    return v;
  };
  const std::size_t p = s.find("pi");
  if (p == std::string::npos) return to_num(s);
  std::string pre = s.substr(0, p);
  std::string post = s.substr(p + 2);
  double coef = 1.0;
  if (!pre.empty() && pre.back() == '*') pre.pop_back();
  if (pre == "-")
    coef = -1.0;
  else if (pre == "+" || pre.empty())
    coef = 1.0;
  else
    coef = to_num(pre);
  double value = coef * 3.14159265358979323846;
  if (!post.empty()) {
    if (post[0] != '/' || post.size() < 2) fail();
    value /= to_num(post.substr(1));
  }
  return value;
}

}  // namespace catsim
