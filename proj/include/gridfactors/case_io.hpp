#pragma once

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridfactors/bus_topology.hpp"
#include "gridfactors/errors.hpp"
#include "gridfactors/factors.hpp"
#include "gridfactors/grid.hpp"
#include "gridfactors/single_mod.hpp"

namespace gridfactors {

// ---------------------------------------------------------------------------
// Matpower subset.
// ---------------------------------------------------------------------------

struct MatpowerTable {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;  // source line of each row
  std::size_t start_line = 0;
};

struct MatpowerCase {
  double base_mva = 100.0;
  MatpowerTable bus;
  MatpowerTable gen;
  MatpowerTable branch;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& token, std::size_t line) {
  const char* begin = token.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw ParseError("non-numeric token '" + token + "'", line);
  return v;
}

struct TableReader {
  MatpowerTable* table = nullptr;  // null: skipped field
  std::vector<double> row;
  std::size_t row_line = 0;

  void push_token(const std::string& token, std::size_t line) {
    if (!table) return;
    if (row.empty()) row_line = line;
    row.push_back(parse_number(token, line));
  }

  void end_row() {
    if (!table || row.empty()) return;
    table->rows.push_back(std::move(row));
    table->lines.push_back(row_line);
    row.clear();
  }

  // Feeds matrix content; returns true once the closing bracket is seen.
  bool feed(const std::string& content, std::size_t line, char close) {
    std::string token;
    auto flush = [&] {
      if (!token.empty()) push_token(token, line);
      token.clear();
    };
    for (char ch : content) {
      if (ch == close) {
        flush();
        end_row();
        return true;
      }
      if (ch == ';') {
        flush();
        end_row();
      } else if (ch == ' ' || ch == '\t' || ch == ',' || ch == '\r') {
        flush();
      } else {
        token += ch;
      }
    }
    flush();
    end_row();  // a newline also ends a row
    return false;
  }
};

inline void check_table(const MatpowerTable& t, const std::string& name, std::size_t min_cols,
                        bool allow_empty) {
  if (t.rows.empty() && !allow_empty)
    throw ParseError("table mpc." + name + " is empty", t.start_line);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != t.rows.front().size())
      throw ParseError("row of mpc." + name + " has " + std::to_string(t.rows[r].size()) +
                           " columns, expected " + std::to_string(t.rows.front().size()),
                       t.lines[r]);
    if (t.rows[r].size() < min_cols)
      throw ParseError("row of mpc." + name + " has " + std::to_string(t.rows[r].size()) +
                           " columns, need at least " + std::to_string(min_cols),
                       t.lines[r]);
  }
}

}  // namespace detail

/// Parses the Matpower case subset: mpc.baseMVA and the bus, gen and branch
/// matrices. Other mpc fields are skipped; '%' starts a comment.
inline MatpowerCase parse_matpower(std::istream& in) {
  static const std::regex assign(R"(^\s*mpc\.(\w+)\s*=\s*(.*)$)");
  MatpowerCase mc;
  std::set<std::string> seen;
  std::optional<detail::TableReader> open;
  char close = ']';
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('%'));
    if (open) {
      if (open->feed(line, line_no, close)) open.reset();
      continue;
    }
    std::smatch m;
    if (!std::regex_match(line, m, assign)) continue;
    const std::string name = m[1];
    const std::string rest = detail::trim(m[2]);
    if (!rest.empty() && (rest.front() == '[' || rest.front() == '{')) {
      close = rest.front() == '[' ? ']' : '}';
      detail::TableReader reader;
      MatpowerTable* target = nullptr;
      if (name == "bus") target = &mc.bus;
      if (name == "gen") target = &mc.gen;
      if (name == "branch") target = &mc.branch;
      if (target) {
        if (!seen.insert(name).second) throw ParseError("mpc." + name + " assigned twice", line_no);
        target->start_line = line_no;
      }
      reader.table = target;
      if (!reader.feed(rest.substr(1), line_no, close)) open = std::move(reader);
      continue;
    }
    if (name == "baseMVA") {
      std::string value = rest.substr(0, rest.find(';'));
      mc.base_mva = detail::parse_number(detail::trim(value), line_no);
      if (!(mc.base_mva > 0.0)) throw ParseError("baseMVA must be positive", line_no);
      seen.insert(name);
    }
  }
  if (open) throw ParseError("unterminated matrix", line_no);
  for (const char* required : {"baseMVA", "bus", "gen", "branch"})
    if (!seen.contains(required))
      throw ParseError(std::string("missing required field mpc.") + required, line_no);
  detail::check_table(mc.bus, "bus", 13, false);
  detail::check_table(mc.gen, "gen", 8, true);
  detail::check_table(mc.branch, "branch", 11, false);

  std::set<int> ids;
  for (std::size_t r = 0; r < mc.bus.rows.size(); ++r)
    if (!ids.insert(static_cast<int>(mc.bus.rows[r][0])).second)
      throw ParseError("duplicate bus id", mc.bus.lines[r]);
  for (std::size_t r = 0; r < mc.gen.rows.size(); ++r)
    if (!ids.contains(static_cast<int>(mc.gen.rows[r][0])))
      throw ParseError("generator at unknown bus", mc.gen.lines[r]);
  for (std::size_t r = 0; r < mc.branch.rows.size(); ++r)
    if (!ids.contains(static_cast<int>(mc.branch.rows[r][0])) ||
        !ids.contains(static_cast<int>(mc.branch.rows[r][1])))
      throw ParseError("branch references unknown bus", mc.branch.lines[r]);
  return mc;
}

inline MatpowerCase parse_matpower(const std::string& text) {
  std::istringstream in(text);
  return parse_matpower(in);
}

struct ImportNotes {
  double slack_adjustment = 0.0;  // per-unit added to the slack injection
};

/// DC grid from a Matpower case: p = (sum Pg - Pd) / baseMVA, b = 1/x,
/// branch ids 1.. in file order. A nonzero shift angle makes the branch a
/// PST. The slack (type 3, else the lowest bus id) absorbs any imbalance.
inline Grid to_grid(const MatpowerCase& mc, ImportNotes* notes = nullptr) {
  std::vector<Bus> buses;
  std::map<int, std::size_t> pos;
  for (const auto& row : mc.bus.rows) {
    const int id = static_cast<int>(row[0]);
    pos[id] = buses.size();
    buses.push_back(Bus{id, -row[2] / mc.base_mva, static_cast<int>(row[1]) == 3});
  }
  for (const auto& row : mc.gen.rows)
    if (row[7] > 0.0) buses[pos.at(static_cast<int>(row[0]))].injection += row[1] / mc.base_mva;

  std::size_t slack_count = 0;
  for (const Bus& b : buses) slack_count += b.is_slack ? 1 : 0;
  if (slack_count > 1) throw ConversionError("case has more than one reference bus");
  if (slack_count == 0)
    std::min_element(buses.begin(), buses.end(), [](const Bus& a, const Bus& b) {
      return a.id < b.id;
    })->is_slack = true;

  double sum = 0.0;
  for (const Bus& b : buses) sum += b.injection;
  for (Bus& b : buses)
    if (b.is_slack) b.injection -= sum;
  if (notes) notes->slack_adjustment = -sum;

  std::vector<Branch> branches;
  for (std::size_t r = 0; r < mc.branch.rows.size(); ++r) {
    const auto& row = mc.branch.rows[r];
    const int id = static_cast<int>(r) + 1;
    const double x = row[3];
    if (x == 0.0)
      throw ConversionError("branch " + std::to_string(id) + " (line " +
                            std::to_string(mc.branch.lines[r]) + ") has zero reactance");
    if (x < 0.0)
      throw ConversionError("branch " + std::to_string(id) + " has negative reactance");
    const double shift_deg = row.size() > 9 ? row[9] : 0.0;
    Branch br{id, static_cast<int>(row[0]), static_cast<int>(row[1]), 1.0 / x,
              shift_deg != 0.0 ? BranchKind::pst : BranchKind::line,
              shift_deg * M_PI / 180.0, row[10] > 0.0};
    branches.push_back(br);
  }
  return Grid(std::move(buses), std::move(branches), mc.base_mva);
}

// ---------------------------------------------------------------------------
// Native JSON.
// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what(), line_of_byte(text, e.byte));
  }
}

template <class T>
T field(const nlohmann::json& obj, const char* key, const char* what) {
  if (!obj.is_object() || !obj.contains(key))
    throw ParseError(std::string(what) + " is missing '" + key + "'", 0);
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string(what) + " has an invalid '" + key + "'", 0);
  }
}

template <class T>
T field_or(const nlohmann::json& obj, const char* key, T fallback, const char* what) {
  if (!obj.contains(key)) return fallback;
  return field<T>(obj, key, what);
}

}  // namespace detail

inline nlohmann::json grid_to_json(const Grid& grid) {
  nlohmann::json j;
  j["base_mva"] = grid.base_mva();
  j["buses"] = nlohmann::json::array();
  for (const Bus& b : grid.buses()) {
    nlohmann::json jb{{"id", b.id}, {"injection", b.injection}};
    if (b.is_slack) jb["slack"] = true;
    j["buses"].push_back(jb);
  }
  j["branches"] = nlohmann::json::array();
  for (const Branch& br : grid.branches()) {
    nlohmann::json jb{{"id", br.id},     {"from", br.from_bus},
                      {"to", br.to_bus}, {"b", br.susceptance},
                      {"kind", to_string(br.kind)}};
    if (br.shift_angle != 0.0) jb["shift_angle"] = br.shift_angle;
    if (!br.in_service) jb["in_service"] = false;
    j["branches"].push_back(jb);
  }
  return j;
}

inline std::string write_grid_json(const Grid& grid) { return grid_to_json(grid).dump(2) + "\n"; }

inline Grid grid_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("grid document must be an object", 1);
  std::vector<Bus> buses;
  for (const auto& jb : detail::field<nlohmann::json>(j, "buses", "grid"))
    buses.push_back(Bus{detail::field<int>(jb, "id", "bus"),
                        detail::field<double>(jb, "injection", "bus"),
                        detail::field_or<bool>(jb, "slack", false, "bus")});
  std::vector<Branch> branches;
  for (const auto& jb : detail::field<nlohmann::json>(j, "branches", "grid")) {
    Branch br;
    br.id = detail::field<int>(jb, "id", "branch");
    br.from_bus = detail::field<int>(jb, "from", "branch");
    br.to_bus = detail::field<int>(jb, "to", "branch");
    br.kind = branch_kind_from_string(detail::field_or<std::string>(jb, "kind", "line", "branch"));
    br.susceptance = detail::field_or<double>(jb, "b", 0.0, "branch");
    br.shift_angle = detail::field_or<double>(jb, "shift_angle", 0.0, "branch");
    br.in_service =
        detail::field_or<bool>(jb, "in_service", br.kind != BranchKind::switch_, "branch");
    branches.push_back(br);
  }
  return Grid(std::move(buses), std::move(branches),
              detail::field_or<double>(j, "base_mva", 1.0, "grid"));
}

inline Grid read_grid_json(const std::string& text) {
  return grid_from_json(detail::parse_json(text));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Loads a grid from a .m Matpower case or a native .json document.
inline Grid load_grid(const std::string& path, ImportNotes* notes = nullptr) {
  const std::string text = read_file(path);
  const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  if (json) return read_grid_json(text);
  return to_grid(parse_matpower(text), notes);
}

// ---------------------------------------------------------------------------
// Factor matrices as CSV.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_factors(const FactorMatrix& m, std::ostream& out) {
  const char* prefix = m.col_kind == LabelKind::bus ? "bus" : "branch";
  out << "branch";
  for (int c : m.col_labels) out << ',' << prefix << c;
  out << '\n';
  for (Index r = 0; r < m.values.rows(); ++r) {
    out << m.row_labels[static_cast<std::size_t>(r)];
    for (Index c = 0; c < m.values.cols(); ++c) out << ',' << format_double(m.values(r, c));
    out << '\n';
  }
}

inline std::string write_factors(const FactorMatrix& m) {
  std::ostringstream out;
  write_factors(m, out);
  return out.str();
}

inline FactorMatrix read_factors(std::istream& in) {
  FactorMatrix m;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty factor file", 1);
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(detail::trim(cell));
    return cells;
  };
  const auto header = split(line);
  if (header.empty() || header[0] != "branch") throw ParseError("header must start with 'branch'", 1);
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string& h = header[c];
    std::string digits;
    if (h.rfind("bus", 0) == 0) {
      m.col_kind = LabelKind::bus;
      digits = h.substr(3);
    } else if (h.rfind("branch", 0) == 0) {
      m.col_kind = LabelKind::branch;
      digits = h.substr(6);
    } else {
      throw ParseError("bad column label '" + h + "'", 1);
    }
    m.col_labels.push_back(static_cast<int>(detail::parse_number(digits, 1)));
  }
  m.kind = m.col_kind == LabelKind::bus ? FactorKind::ptdf : FactorKind::psdf;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw ParseError("row has " + std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(header.size()),
                       line_no);
    m.row_labels.push_back(static_cast<int>(detail::parse_number(cells[0], line_no)));
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c)
      row.push_back(detail::parse_number(cells[c], line_no));
    rows.push_back(std::move(row));
  }
  m.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(m.col_labels.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return m;
}

inline FactorMatrix read_factors(const std::string& text) {
  std::istringstream in(text);
  return read_factors(in);
}

// ---------------------------------------------------------------------------
// Modification documents.
// ---------------------------------------------------------------------------

/// What-if input. Applied in the order splits, susceptance changes, switch
/// states.
///   {"splits":   [{"parent": 5, "new_bus": 7, "assignments": {"3": "new", "8": "new"},
///                  "injection_to_new": -0.7}],
///    "deltas":   [{"branch": 2, "db": 1.5}],
///    "outages":  [4],
///    "switches": {"12": "closed", "13": "open"}}
struct ModificationDoc {
  std::vector<SplitSpec> splits;
  std::vector<bool> split_injection_given;
  std::vector<BranchDelta> deltas;
  std::vector<int> outages;
  std::vector<std::pair<int, bool>> switches;
};

namespace detail {

inline int parse_id_key(const std::string& key, const char* what) {
  try {
    std::size_t used = 0;
    const int id = std::stoi(key, &used);
    if (used == key.size()) return id;
  } catch (const std::exception&) {
  }
  throw ParseError(std::string(what) + " key '" + key + "' is not an integer id", 0);
}

}  // namespace detail

inline SplitSpec split_from_json(const nlohmann::json& j, bool* injection_given = nullptr) {
  SplitSpec s;
  s.parent = detail::field<int>(j, "parent", "split");
  if (j.contains("new_bus")) s.new_bus = detail::field<int>(j, "new_bus", "split");
  const auto assignments =
      detail::field_or<nlohmann::json>(j, "assignments", nlohmann::json::object(), "split");
  if (!assignments.is_object()) throw ParseError("split assignments must be an object", 0);
  for (const auto& [key, side] : assignments.items()) {
    const int id = detail::parse_id_key(key, "assignment");
    if (side == "new") s.assignments[id] = BusSide::new_bus;
    else if (side == "parent") s.assignments[id] = BusSide::parent;
    else throw ParseError("assignment of branch " + key + " must be \"parent\" or \"new\"", 0);
  }
  s.injection_to_new = detail::field_or<double>(j, "injection_to_new", 0.0, "split");
  if (injection_given) *injection_given = j.contains("injection_to_new");
  return s;
}

inline ModificationDoc read_modification_json(const std::string& text) {
  const nlohmann::json j = detail::parse_json(text);
  if (!j.is_object()) throw ParseError("modification document must be an object", 1);
  static const std::set<std::string> known{"splits", "deltas", "outages", "switches"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ParseError("unknown modification field '" + key + "'", 0);
  ModificationDoc doc;
  for (const auto& js : detail::field_or<nlohmann::json>(j, "splits", nlohmann::json::array(), "modification")) {
    bool given = false;
    doc.splits.push_back(split_from_json(js, &given));
    doc.split_injection_given.push_back(given);
  }
  for (const auto& jd : detail::field_or<nlohmann::json>(j, "deltas", nlohmann::json::array(), "modification"))
    doc.deltas.push_back({detail::field<int>(jd, "branch", "delta"),
                          detail::field<double>(jd, "db", "delta")});
  doc.outages = detail::field_or<std::vector<int>>(j, "outages", {}, "modification");
  const auto switches =
      detail::field_or<nlohmann::json>(j, "switches", nlohmann::json::object(), "modification");
  if (!switches.is_object()) throw ParseError("switches must be an object", 0);
  for (const auto& [key, state] : switches.items()) {
    const int id = detail::parse_id_key(key, "switch");
    if (state == "closed") doc.switches.emplace_back(id, true);
    else if (state == "open") doc.switches.emplace_back(id, false);
    else throw ParseError("switch " + key + " state must be \"open\" or \"closed\"", 0);
  }
  return doc;
}

}  // namespace gridfactors
