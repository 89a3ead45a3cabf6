// gridfactors: DC flows, distribution factors and what-if updates from the
// command line.
//
// Exit codes: 0 ok, 2 input could not be parsed or is not a valid grid,
// 3 grid is disconnected, 4 modification islands the grid (or closes a
// degenerate switch set), 1 anything else.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "gridfactors/bench.hpp"
#include "gridfactors/gridfactors.hpp"

namespace gf = gridfactors;
using nlohmann::json;

namespace {

enum class Format { table, csv, jsonl };

const std::map<std::string, Format> kFormats{
    {"table", Format::table}, {"csv", Format::csv}, {"jsonl", Format::jsonl}};

std::string num(double v) { return gf::format_double(v); }

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string endpoints(const gf::Branch& br) {
  return "(" + std::to_string(br.from_bus) + "," + std::to_string(br.to_bus) + ")";
}

void print_max(std::ostream& out, const gf::Grid& grid, const Eigen::VectorXd& flows) {
  if (flows.size() == 0) return;
  const std::size_t m = gf::max_loaded(flows);
  const gf::Branch& br = grid.branches()[m];
  const double f = std::abs(flows(static_cast<Eigen::Index>(m)));
  out << "max |f| = " << fixed(f * grid.base_mva(), 3) << " MW (" << fixed(f, 6)
      << " pu) on branch " << br.id << " " << endpoints(br) << "\n";
}

void print_flows(std::ostream& out, const gf::Grid& grid, const Eigen::VectorXd& flows,
                 Format format) {
  const double base = grid.base_mva();
  switch (format) {
    case Format::csv:
      out << "branch,from,to,flow_pu,flow_mw\n";
      for (std::size_t e = 0; e < grid.num_branches(); ++e) {
        const gf::Branch& br = grid.branches()[e];
        const double f = flows(static_cast<Eigen::Index>(e));
        out << br.id << ',' << br.from_bus << ',' << br.to_bus << ',' << num(f) << ','
            << num(f * base) << '\n';
      }
      return;
    case Format::jsonl:
      for (std::size_t e = 0; e < grid.num_branches(); ++e) {
        const gf::Branch& br = grid.branches()[e];
        const double f = flows(static_cast<Eigen::Index>(e));
        out << json{{"branch", br.id}, {"from", br.from_bus},  {"to", br.to_bus},
                    {"kind", gf::to_string(br.kind)},           {"flow_pu", f},
                    {"flow_mw", f * base}}
                   .dump()
            << '\n';
      }
      return;
    case Format::table:
      out << pad("branch", 7) << pad("from", 6) << pad("to", 6) << pad("kind", 8)
          << pad("flow_pu", 14) << pad("flow_mw", 14) << '\n';
      for (std::size_t e = 0; e < grid.num_branches(); ++e) {
        const gf::Branch& br = grid.branches()[e];
        const double f = flows(static_cast<Eigen::Index>(e));
        out << pad(std::to_string(br.id), 7) << pad(std::to_string(br.from_bus), 6)
            << pad(std::to_string(br.to_bus), 6) << pad(gf::to_string(br.kind), 8)
            << pad(fixed(f), 14) << pad(fixed(f * base, 4), 14) << '\n';
      }
      print_max(out, grid, flows);
      return;
  }
}

gf::Grid with_shift_overrides(const gf::Grid& grid, const std::vector<std::string>& shifts) {
  if (shifts.empty()) return grid;
  std::vector<gf::Branch> branches = grid.branches();
  for (const std::string& s : shifts) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw gf::ParseError("--shift expects ID=RADIANS, got " + s, 0);
    const int id = static_cast<int>(gf::detail::parse_number(s.substr(0, eq), 0));
    const double angle = gf::detail::parse_number(s.substr(eq + 1), 0);
    gf::Branch& br = branches[grid.branch_position(id)];
    if (br.kind != gf::BranchKind::pst)
      throw gf::GridError("--shift on branch " + std::to_string(id) + ", which is not a pst");
    br.shift_angle = angle;
  }
  return gf::Grid(grid.buses(), std::move(branches), grid.base_mva());
}

// ---------------------------------------------------------------------------

struct FlowsArgs {
  std::string case_path;
  std::string format = "table";
  std::vector<std::string> shifts;
};

int cmd_flows(const FlowsArgs& a) {
  const gf::Grid grid = with_shift_overrides(gf::load_grid(a.case_path), a.shifts);
  const gf::NetworkState st = gf::evaluate(grid);
  print_flows(std::cout, grid, st.flows, kFormats.at(a.format));
  return 0;
}

struct FactorsArgs {
  std::string case_path;
  std::string kind = "ptdf";
  std::string out;
};

int cmd_factors(const FactorsArgs& a) {
  const gf::Grid grid = gf::load_grid(a.case_path);
  const gf::GroundedSystem sys = gf::build_grounded_system(grid);
  const gf::FactorMatrix m = a.kind == "ptdf" ? gf::ptdf_matrix(sys) : gf::psdf_matrix(sys);
  if (a.out.empty()) {
    gf::write_factors(m, std::cout);
  } else {
    std::ofstream file(a.out);
    if (!file) throw gf::InputError("cannot write " + a.out);
    gf::write_factors(m, file);
  }
  return 0;
}

struct WhatIfArgs {
  std::string case_path;
  std::string mods_path;
  std::string format = "table";
  std::string route = "coupler";
  bool enumerate = false;
};

void print_comparison(std::ostream& out, const gf::NetworkState& pre, const gf::NetworkState& post,
                      Format format) {
  const gf::Grid& g = post.grid;
  if (format == Format::table)
    out << pad("branch", 7) << pad("from", 6) << pad("to", 6) << pad("pre_pu", 14)
        << pad("post_pu", 14) << pad("delta_pu", 14) << '\n';
  if (format == Format::csv) out << "branch,from,to,pre_pu,post_pu,delta_pu\n";
  for (std::size_t e = 0; e < g.num_branches(); ++e) {
    const gf::Branch& br = g.branches()[e];
    const double before = pre.grid.has_branch(br.id)
                              ? pre.flows(static_cast<Eigen::Index>(pre.grid.branch_position(br.id)))
                              : 0.0;
    const double after = post.flows(static_cast<Eigen::Index>(e));
    switch (format) {
      case Format::table:
        out << pad(std::to_string(br.id), 7) << pad(std::to_string(br.from_bus), 6)
            << pad(std::to_string(br.to_bus), 6) << pad(fixed(before), 14) << pad(fixed(after), 14)
            << pad(fixed(after - before), 14) << '\n';
        break;
      case Format::csv:
        out << br.id << ',' << br.from_bus << ',' << br.to_bus << ',' << num(before) << ','
            << num(after) << ',' << num(after - before) << '\n';
        break;
      case Format::jsonl:
        out << json{{"branch", br.id}, {"from", br.from_bus}, {"to", br.to_bus},
                    {"pre_pu", before}, {"post_pu", after},   {"delta_pu", after - before}}
                   .dump()
            << '\n';
        break;
    }
  }
}

int cmd_whatif(const WhatIfArgs& a) {
  const gf::Grid grid = gf::load_grid(a.case_path);
  const gf::ModificationDoc doc = gf::read_modification_json(gf::read_file(a.mods_path));
  const gf::SplitRoute route = a.route == "idle" ? gf::SplitRoute::idle_bus : gf::SplitRoute::coupler;
  const Format format = kFormats.at(a.format);

  if (a.enumerate) {
    const auto rows = gf::enumerate_switches(grid, doc, route);
    if (format == Format::table)
      std::cout << pad("setting", 8) << "  " << "closed" << pad("max_pu", 14) << pad("branch", 8)
                << '\n';
    if (format == Format::csv) std::cout << "setting,closed,max_pu,branch\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::string bits;
      for (bool c : rows[k].closed) bits += c ? '1' : '0';
      double f = 0.0;
      int id = 0;
      if (rows[k].state) {
        const auto m = gf::max_loaded(rows[k].state->flows);
        f = std::abs(rows[k].state->flows(static_cast<Eigen::Index>(m)));
        id = rows[k].state->grid.branches()[m].id;
      }
      switch (format) {
        case Format::table:
          std::cout << pad(std::to_string(k), 8) << "  " << bits
                    << (rows[k].state ? pad(fixed(f), 14) + pad(std::to_string(id), 8)
                                      : "  degenerate: " + rows[k].error)
                    << '\n';
          break;
        case Format::csv:
          std::cout << k << ',' << bits << ',' << (rows[k].state ? num(f) : "") << ','
                    << (rows[k].state ? std::to_string(id) : "") << '\n';
          break;
        case Format::jsonl: {
          json j{{"setting", k}, {"closed", rows[k].closed}};
          if (rows[k].state) {
            j["max_pu"] = f;
            j["branch"] = id;
          } else {
            j["error"] = rows[k].error;
          }
          std::cout << j.dump() << '\n';
        }
      }
    }
    return 0;
  }

  const gf::NetworkState pre = gf::evaluate(grid);
  const gf::WhatIf w = gf::run_whatif(grid, doc, route);
  for (const auto& c : w.criteria)
    std::cerr << "islanding check (" << c.step << "): criterion " << num(c.value) << ", connected\n";
  print_comparison(std::cout, pre, w.state, format);
  if (format == Format::table) print_max(std::cout, w.state.grid, w.state.flows);
  return 0;
}

struct N1Args {
  std::string case_path;
  std::string after;
  std::string format = "table";
  std::string sort = "severity";
};

int cmd_n1(const N1Args& a) {
  const gf::Grid grid = gf::load_grid(a.case_path);
  const gf::NetworkState st = a.after.empty()
                                  ? gf::evaluate(grid)
                                  : gf::run_whatif(grid, gf::read_modification_json(gf::read_file(a.after))).state;
  std::vector<gf::OutageReport> rows = gf::n1_sweep(st);
  if (a.sort == "severity") gf::sort_by_severity(rows);
  const Format format = kFormats.at(a.format);
  const double base = st.grid.base_mva();
  if (format == Format::table)
    std::cout << pad("outage", 7) << pad("ends", 9) << pad("status", 9) << pad("criterion", 14)
              << pad("max_pu", 12) << pad("max_mw", 12) << pad("on", 6) << '\n';
  if (format == Format::csv) std::cout << "outage,from,to,islands,criterion,max_pu,max_mw,on_branch\n";
  for (const auto& r : rows) {
    const gf::Branch& br = st.grid.branch(r.branch);
    switch (format) {
      case Format::table:
        std::cout << pad(std::to_string(r.branch), 7) << pad(endpoints(br), 9)
                  << pad(r.islands ? "islands" : "ok", 9) << pad(fixed(r.criterion, 8), 14)
                  << (r.islands ? std::string()
                                : pad(fixed(r.max_abs_flow), 12) + pad(fixed(r.max_abs_flow * base, 3), 12) +
                                      pad(std::to_string(r.max_branch), 6))
                  << '\n';
        break;
      case Format::csv:
        std::cout << r.branch << ',' << br.from_bus << ',' << br.to_bus << ','
                  << (r.islands ? "true" : "false") << ',' << num(r.criterion) << ','
                  << (r.islands ? "" : num(r.max_abs_flow)) << ','
                  << (r.islands ? "" : num(r.max_abs_flow * base)) << ','
                  << (r.islands ? "" : std::to_string(r.max_branch)) << '\n';
        break;
      case Format::jsonl: {
        json j{{"branch", r.branch}, {"islands", r.islands}, {"criterion", r.criterion}};
        if (!r.islands) {
          j["max_pu"] = r.max_abs_flow;
          j["max_branch"] = r.max_branch;
        }
        std::cout << j.dump() << '\n';
      }
    }
  }
  return 0;
}

int cmd_islanding(const std::string& case_path) {
  const gf::Grid grid = gf::load_grid(case_path);
  const gf::NetworkState st = gf::evaluate(grid);
  const gf::GroundedSystem sys = gf::state_system(st);
  for (std::size_t e = 0; e < grid.num_branches(); ++e) {
    if (!(grid.effective_susceptance(e) > 0.0)) continue;
    const int id = grid.branches()[e].id;
    const gf::IslandingVerdict v = gf::outage_islands(sys, id);
    std::cout << json{{"branch", id}, {"criterion", v.criterion}, {"islands", v.islands}}.dump()
              << '\n';
  }
  return 0;
}

int cmd_bench(const gf::BenchConfig& cfg, const std::string& format) {
  const gf::BenchResult r = gf::run_update_benchmark(cfg);
  if (format == "jsonl") {
    std::cout << json{{"buses", cfg.buses},          {"mods", cfg.mods},
                      {"reps", cfg.reps},            {"seed", cfg.seed},
                      {"update_median_s", r.update_median_s},
                      {"rebuild_median_s", r.rebuild_median_s},
                      {"speedup", r.speedup},        {"max_rel_diff", r.max_rel_diff},
                      {"equal", r.equal}}
                     .dump()
              << '\n';
  } else {
    std::cout << "buses " << cfg.buses << ", modifications " << cfg.mods << ", repetitions "
              << cfg.reps << ", seed " << cfg.seed << '\n'
              << "equality gate: relative Frobenius difference " << num(r.max_rel_diff)
              << (r.equal ? " (pass)" : " (FAIL)") << '\n';
    if (r.equal)
      std::cout << "update  median " << fixed(r.update_median_s * 1e3, 4) << " ms\n"
                << "rebuild median " << fixed(r.rebuild_median_s * 1e3, 4) << " ms\n"
                << "speedup " << fixed(r.speedup, 2) << "x\n";
  }
  return r.equal ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DC power flow distribution factors and low-rank topology updates"};
  app.require_subcommand(1);
  const auto format_check = CLI::IsMember({"table", "csv", "jsonl"});

  FlowsArgs flows;
  auto* c_flows = app.add_subcommand("flows", "Per-branch DC flows and the most loaded branch");
  c_flows->add_option("case", flows.case_path, "Matpower .m or native .json grid")->required();
  c_flows->add_option("--format", flows.format, "table, csv or jsonl")->check(format_check);
  c_flows->add_option("--shift", flows.shifts, "Phase shift override ID=RADIANS (repeatable)");

  FactorsArgs factors;
  auto* c_factors = app.add_subcommand("factors", "Export a factor matrix as CSV");
  c_factors->add_option("case", factors.case_path)->required();
  c_factors->add_option("--kind", factors.kind, "ptdf or psdf")->check(CLI::IsMember({"ptdf", "psdf"}));
  c_factors->add_option("--out", factors.out, "Output file (stdout if omitted)");

  WhatIfArgs whatif;
  auto* c_whatif = app.add_subcommand("whatif", "Apply a modification document");
  c_whatif->add_option("case", whatif.case_path)->required();
  c_whatif->add_option("mods", whatif.mods_path, "Modification JSON")->required();
  c_whatif->add_option("--format", whatif.format)->check(format_check);
  c_whatif->add_option("--split-route", whatif.route, "coupler or idle")
      ->check(CLI::IsMember({"coupler", "idle"}));
  c_whatif->add_flag("--enumerate", whatif.enumerate, "All 2^M settings of the listed switches");

  N1Args n1;
  auto* c_n1 = app.add_subcommand("n1", "Single-outage screening");
  c_n1->add_option("case", n1.case_path)->required();
  c_n1->add_option("--after", n1.after, "Modification JSON applied first");
  c_n1->add_option("--format", n1.format)->check(format_check);
  c_n1->add_option("--sort", n1.sort, "severity or id")->check(CLI::IsMember({"severity", "id"}));

  std::string island_case;
  auto* c_island = app.add_subcommand("islanding", "Outage islanding criteria as JSON lines");
  c_island->add_option("case", island_case)->required();

  gf::BenchConfig bench;
  std::string bench_format = "table";
  auto* c_bench = app.add_subcommand("bench", "Woodbury update versus full re-inversion");
  c_bench->add_option("--buses", bench.buses)->check(CLI::PositiveNumber);
  c_bench->add_option("--mods", bench.mods)->check(CLI::NonNegativeNumber);
  c_bench->add_option("--reps", bench.reps)->check(CLI::Range(20, 100000));
  c_bench->add_option("--seed", bench.seed);
  c_bench->add_option("--format", bench_format)->check(CLI::IsMember({"table", "jsonl"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*c_flows) return cmd_flows(flows);
    if (*c_factors) return cmd_factors(factors);
    if (*c_whatif) return cmd_whatif(whatif);
    if (*c_n1) return cmd_n1(n1);
    if (*c_island) return cmd_islanding(island_case);
    if (*c_bench) return cmd_bench(bench, bench_format);
  } catch (const gf::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const gf::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const gf::ConversionError& e) {
    std::cerr << "conversion error: " << e.what() << '\n';
    return 2;
  } catch (const gf::GridError& e) {
    std::cerr << "invalid grid: " << e.what() << '\n';
    return 2;
  } catch (const gf::DisconnectedError& e) {
    std::cerr << "disconnected: " << e.what() << '\n';
    return 3;
  } catch (const gf::IslandingError& e) {
    std::cerr << "islanding: " << e.what() << " (criterion " << num(e.criterion()) << ")\n";
    return 4;
  } catch (const gf::DegenerateSwitchError& e) {
    std::cerr << "degenerate switch setting: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
