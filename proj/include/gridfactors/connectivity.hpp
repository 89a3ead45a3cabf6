#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "gridfactors/grid.hpp"

namespace gridfactors {

/// Which edges join buses during traversal.
enum class EdgeSet {
  physical,   // in-service lines/psts and closed switches
  reference,  // in-service lines/psts only (all switches open)
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned> rank_;
};

}  // namespace detail

/// Partition of bus ids into connected components. Components are ordered by
/// their first bus in grid order; ids inside a component keep grid order.
inline std::vector<std::vector<int>> traversal_connectivity(const Grid& grid,
                                                            EdgeSet edges = EdgeSet::physical) {
  detail::DisjointSets sets(grid.num_buses());
  for (std::size_t e = 0; e < grid.num_branches(); ++e) {
    const bool joins = edges == EdgeSet::physical ? grid.conducts(e)
                                                  : grid.effective_susceptance(e) > 0.0;
    if (!joins) continue;
    const Branch& br = grid.branches()[e];
    sets.unite(grid.bus_position(br.from_bus), grid.bus_position(br.to_bus));
  }
  std::vector<std::vector<int>> components;
  std::vector<std::ptrdiff_t> slot(grid.num_buses(), -1);
  for (std::size_t i = 0; i < grid.num_buses(); ++i) {
    const std::size_t root = sets.find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<std::ptrdiff_t>(components.size());
      components.emplace_back();
    }
    components[static_cast<std::size_t>(slot[root])].push_back(grid.buses()[i].id);
  }
  return components;
}

inline bool is_connected(const Grid& grid, EdgeSet edges = EdgeSet::physical) {
  return traversal_connectivity(grid, edges).size() == 1;
}

/// Branches whose removal disconnects the reference grid (all switches open).
/// Brute force over in-service branches; fine at desk scale.
inline std::vector<int> bridge_branches(const Grid& grid) {
  std::vector<int> bridges;
  const std::size_t base = traversal_connectivity(grid, EdgeSet::reference).size();
  for (std::size_t skip = 0; skip < grid.num_branches(); ++skip) {
    if (grid.effective_susceptance(skip) <= 0.0) continue;
    detail::DisjointSets sets(grid.num_buses());
    std::size_t count = grid.num_buses();
    for (std::size_t e = 0; e < grid.num_branches(); ++e) {
      if (e == skip || grid.effective_susceptance(e) <= 0.0) continue;
      const Branch& br = grid.branches()[e];
      if (sets.unite(grid.bus_position(br.from_bus), grid.bus_position(br.to_bus))) --count;
    }
    if (count > base) bridges.push_back(grid.branches()[skip].id);
  }
  return bridges;
}

}  // namespace gridfactors
