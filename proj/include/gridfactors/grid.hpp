#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "gridfactors/errors.hpp"

namespace gridfactors {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Bus {
  int id = 0;
  double injection = 0.0;  // per-unit, generation minus load
  bool is_slack = false;

  friend bool operator==(const Bus&, const Bus&) = default;
};

enum class BranchKind { line, switch_, pst };

inline const char* to_string(BranchKind kind) {
  switch (kind) {
    case BranchKind::line: return "line";
    case BranchKind::switch_: return "switch";
    case BranchKind::pst: return "pst";
  }
  return "line";
}

inline BranchKind branch_kind_from_string(const std::string& s) {
  if (s == "line") return BranchKind::line;
  if (s == "switch") return BranchKind::switch_;
  if (s == "pst") return BranchKind::pst;
  throw GridError("unknown branch kind '" + s + "'");
}

struct Branch {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double susceptance = 0.0;  // per-unit; ignored for switches
  BranchKind kind = BranchKind::line;
  double shift_angle = 0.0;  // radians, pst only
  // For lines and PSTs: in service. For switches: closed.
  bool in_service = true;

  bool is_switch() const noexcept { return kind == BranchKind::switch_; }

  friend bool operator==(const Branch&, const Branch&) = default;
};

/// Immutable bus/branch model. Bus and branch order is the order given at
/// construction and is never re-sorted: factor signs depend on it.
class Grid {
 public:
  Grid() = default;

  Grid(std::vector<Bus> buses, std::vector<Branch> branches, double base_mva = 1.0)
      : buses_(std::move(buses)), branches_(std::move(branches)), base_mva_(base_mva) {
    validate();
  }

  const std::vector<Bus>& buses() const noexcept { return buses_; }
  const std::vector<Branch>& branches() const noexcept { return branches_; }
  std::size_t num_buses() const noexcept { return buses_.size(); }
  std::size_t num_branches() const noexcept { return branches_.size(); }
  double base_mva() const noexcept { return base_mva_; }

  const Bus& slack() const { return buses_[slack_pos_]; }
  std::size_t slack_position() const noexcept { return slack_pos_; }

  bool has_bus(int id) const { return bus_pos_.contains(id); }
  bool has_branch(int id) const { return branch_pos_.contains(id); }

  std::size_t bus_position(int id) const {
    auto it = bus_pos_.find(id);
    if (it == bus_pos_.end()) throw GridError("unknown bus " + std::to_string(id));
    return it->second;
  }

  std::size_t branch_position(int id) const {
    auto it = branch_pos_.find(id);
    if (it == branch_pos_.end()) throw GridError("unknown branch " + std::to_string(id));
    return it->second;
  }

  const Bus& bus(int id) const { return buses_[bus_position(id)]; }
  const Branch& branch(int id) const { return branches_[branch_position(id)]; }

  /// Injection vector in bus order.
  VectorXd injections() const {
    VectorXd p(static_cast<Index>(buses_.size()));
    for (std::size_t i = 0; i < buses_.size(); ++i) p(static_cast<Index>(i)) = buses_[i].injection;
    return p;
  }

  int max_bus_id() const {
    int m = buses_.front().id;
    for (const auto& b : buses_) m = std::max(m, b.id);
    return m;
  }

  /// Susceptance the branch contributes to the grounded Laplacian. Switches
  /// are always 0 here: the reference configuration has them open.
  double effective_susceptance(std::size_t pos) const {
    const Branch& br = branches_[pos];
    if (br.is_switch() || !br.in_service) return 0.0;
    return br.susceptance;
  }

  /// Edge counts toward connectivity (in-service line/pst or closed switch).
  bool conducts(std::size_t pos) const {
    const Branch& br = branches_[pos];
    if (!br.in_service) return false;
    return br.is_switch() || br.susceptance > 0.0;
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.buses_ == b.buses_ && a.branches_ == b.branches_ && a.base_mva_ == b.base_mva_;
  }

 private:
  void validate() {
    if (buses_.empty()) throw GridError("grid has no buses");
    if (!(base_mva_ > 0.0)) throw GridError("base MVA must be positive");
    bus_pos_.clear();
    branch_pos_.clear();
    std::size_t slack_count = 0;
    for (std::size_t i = 0; i < buses_.size(); ++i) {
      if (!bus_pos_.emplace(buses_[i].id, i).second)
        throw GridError("duplicate bus id " + std::to_string(buses_[i].id));
      if (buses_[i].is_slack) {
        ++slack_count;
        slack_pos_ = i;
      }
    }
    if (slack_count != 1)
      throw GridError("grid needs exactly one slack bus, found " + std::to_string(slack_count));

    for (std::size_t i = 0; i < branches_.size(); ++i) {
      const Branch& br = branches_[i];
      const std::string name = "branch " + std::to_string(br.id);
      if (!branch_pos_.emplace(br.id, i).second) throw GridError("duplicate " + name);
      if (!bus_pos_.contains(br.from_bus) || !bus_pos_.contains(br.to_bus))
        throw GridError(name + " has a dangling endpoint (" + std::to_string(br.from_bus) + " -> " +
                        std::to_string(br.to_bus) + ")");
      if (br.from_bus == br.to_bus) throw GridError(name + " is a self loop");
      if (!br.is_switch()) {
        if (br.susceptance < 0.0 || !std::isfinite(br.susceptance))
          throw GridError(name + " has invalid susceptance");
        if (br.in_service && br.susceptance == 0.0)
          throw GridError(name + " is in service with zero susceptance");
      }
      if (br.kind != BranchKind::pst && br.shift_angle != 0.0)
        throw GridError(name + " carries a phase shift but is not a pst");
    }

    double sum = 0.0;
    double abs_sum = 0.0;
    for (const auto& b : buses_) {
      sum += b.injection;
      abs_sum += std::abs(b.injection);
    }
    if (std::abs(sum) > balance_tolerance(abs_sum))
      throw GridError("grid is not balanced: sum of injections = " + std::to_string(sum));
  }

 public:
  static double balance_tolerance(double abs_sum) { return 1e-6 * std::max(1.0, abs_sum); }

 private:
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  double base_mva_ = 1.0;
  std::size_t slack_pos_ = 0;
  std::unordered_map<int, std::size_t> bus_pos_;
  std::unordered_map<int, std::size_t> branch_pos_;
};

/// Node-edge incidence matrix over all branches, in grid order.
struct IncidenceMatrix {
  MatrixXd full;     // N_n x N_e
  MatrixXd reduced;  // slack row removed
};

inline IncidenceMatrix build_incidence(const Grid& grid) {
  const auto nb = static_cast<Index>(grid.num_buses());
  const auto ne = static_cast<Index>(grid.num_branches());
  IncidenceMatrix out;
  out.full = MatrixXd::Zero(nb, ne);
  for (Index e = 0; e < ne; ++e) {
    const Branch& br = grid.branches()[static_cast<std::size_t>(e)];
    out.full(static_cast<Index>(grid.bus_position(br.from_bus)), e) = 1.0;
    out.full(static_cast<Index>(grid.bus_position(br.to_bus)), e) = -1.0;
  }
  const auto slack = static_cast<Index>(grid.slack_position());
  out.reduced.resize(nb - 1, ne);
  out.reduced.topRows(slack) = out.full.topRows(slack);
  out.reduced.bottomRows(nb - 1 - slack) = out.full.bottomRows(nb - 1 - slack);
  return out;
}

}  // namespace gridfactors
