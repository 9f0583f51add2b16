#pragma once

// JSON circuit documents and CSV assignment files.
//
// Circuit document:
//   {"variables": [{"id": 0, "cardinality": 2}, ...],
//    "units": [{"id": 4, "type": "sum", "children": [1, 2], "weights": ["0.3", "0.7"]},
//              {"id": 1, "type": "indicator", "var": 0, "value": 1}, ...],
//    "root": 4}
// Weights are decimal strings (plain JSON numbers are accepted too).

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pcaai/circuit.hpp"
#include "pcaai/error.hpp"

namespace pcaai {

// Raised when a file cannot be opened or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline double parse_decimal(const std::string& s, std::int64_t unit) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw FormatError("unit " + std::to_string(unit) + ": weight \"" + s + "\" is not a decimal number");
  }
  if (used != s.size()) throw FormatError("unit " + std::to_string(unit) + ": trailing characters in weight \"" + s + "\"");
  return v;
}

template <typename T>
T required(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(where + ": missing key \"" + key + "\"");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(where + ": key \"" + key + "\" has the wrong type");
  }
}

inline UnitKind parse_kind(const std::string& s, std::int64_t unit) {
  if (s == "sum") return UnitKind::Sum;
  if (s == "product") return UnitKind::Product;
  if (s == "indicator") return UnitKind::Indicator;
  throw FormatError("unit " + std::to_string(unit) + ": unknown type \"" + s + "\"");
}

}  // namespace detail

inline Circuit parse_circuit(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("malformed JSON at " + detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0));
  }
  if (!doc.is_object()) throw FormatError("circuit document must be a JSON object");

  std::vector<Variable> variables;
  for (const auto& v : detail::required<nlohmann::json>(doc, "variables", "document")) {
    if (!v.is_object()) throw FormatError("variables: entries must be objects");
    variables.push_back({detail::required<VarId>(v, "id", "variable"), detail::required<int>(v, "cardinality", "variable")});
  }

  std::vector<UnitSpec> units;
  for (const auto& u : detail::required<nlohmann::json>(doc, "units", "document")) {
    if (!u.is_object()) throw FormatError("units: entries must be objects");
    UnitSpec s;
    s.id = detail::required<std::int64_t>(u, "id", "unit");
    const std::string where = "unit " + std::to_string(s.id);
    s.kind = detail::parse_kind(detail::required<std::string>(u, "type", where), s.id);
    if (s.kind == UnitKind::Indicator) {
      s.var = detail::required<VarId>(u, "var", where);
      s.value = detail::required<int>(u, "value", where);
    } else {
      s.children = detail::required<std::vector<std::int64_t>>(u, "children", where);
    }
    if (s.kind == UnitKind::Sum) {
      for (const auto& w : detail::required<nlohmann::json>(u, "weights", where)) {
        if (w.is_string()) {
          s.weights.push_back(detail::parse_decimal(w.get<std::string>(), s.id));
        } else if (w.is_number()) {
          s.weights.push_back(w.get<double>());
        } else {
          throw FormatError(where + ": weights must be decimal strings or numbers");
        }
      }
    } else if (u.contains("weights")) {
      throw CircuitError(std::string(to_string(s.kind)) + " must not carry weights", s.id);
    }
    units.push_back(std::move(s));
  }
  return Circuit(std::move(variables), units, detail::required<std::int64_t>(doc, "root", "document"));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

// Parses a circuit file; format errors are prefixed with the path.
inline Circuit load_circuit(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse_circuit(text);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

// Round-trippable document; weights written with 17 significant digits.
inline nlohmann::json to_json(const Circuit& c) {
  nlohmann::json doc;
  doc["variables"] = nlohmann::json::array();
  for (const auto& v : c.variables()) doc["variables"].push_back({{"id", v.id}, {"cardinality", v.cardinality}});
  doc["units"] = nlohmann::json::array();
  for (const Unit& u : c.units()) {
    nlohmann::json j{{"id", u.id}, {"type", to_string(u.kind)}};
    if (u.kind == UnitKind::Indicator) {
      j["var"] = u.var;
      j["value"] = u.value;
    } else {
      auto& ch = j["children"] = nlohmann::json::array();
      for (UnitIndex i : u.children) ch.push_back(c.unit(i).id);
    }
    if (u.kind == UnitKind::Sum) {
      auto& ws = j["weights"] = nlohmann::json::array();
      for (double w : u.weights) {
        std::ostringstream s;
        s.precision(17);
        s << w;
        ws.push_back(s.str());
      }
    }
    doc["units"].push_back(std::move(j));
  }
  doc["root"] = c.unit(c.root()).id;
  return doc;
}

// One row per instance, one column per variable; -1 marks an unobserved
// variable. '#' lines are comments; a first non-comment row that is not
// numeric is treated as a header.
inline std::vector<Assignment> parse_assignments_csv(std::string_view text, std::size_t num_variables) {
  std::vector<Assignment> rows;
  std::size_t line_no = 0, pos = 0;
  bool first = true;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') {
      if (end == text.size()) break;
      continue;
    }
    Assignment row;
    std::stringstream fields(line);
    std::string field;
    bool numeric = true;
    while (std::getline(fields, field, ',')) {
      try {
        std::size_t used = 0;
        const int v = std::stoi(field, &used);
        if (field.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("trailing");
        row.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      throw FormatError("line " + std::to_string(line_no) + ": non-integer field \"" + field + "\"");
    }
    first = false;
    if (row.size() != num_variables)
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(num_variables) + " fields, got " + std::to_string(row.size()));
    for (int v : row)
      if (v < kUnobserved) throw FormatError("line " + std::to_string(line_no) + ": state " + std::to_string(v) + " is negative");
    rows.push_back(std::move(row));
    if (end == text.size()) break;
  }
  return rows;
}

inline std::vector<Assignment> load_assignments(const std::string& path, std::size_t num_variables) {
  const std::string text = read_file(path);
  try {
    return parse_assignments_csv(text, num_variables);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline std::string assignments_csv(const std::vector<Assignment>& rows, std::size_t num_variables) {
  std::string out;
  for (std::size_t v = 0; v < num_variables; ++v) out += (v ? ",x" : "x") + std::to_string(v);
  out += '\n';
  for (const auto& r : rows) {
    for (std::size_t v = 0; v < r.size(); ++v) out += (v ? "," : "") + std::to_string(r[v]);
    out += '\n';
  }
  return out;
}

}  // namespace pcaai
