#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridfactors {

/// Grid data that violates a structural invariant (dangling endpoint,
/// duplicate id, missing slack, ...).
class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input file missing or unreadable.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parsed case that cannot be turned into a DC grid (e.g. x = 0 on a line).
class ConversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The grounded Laplacian is singular because the grid falls apart.
/// Carries the bus partition found by traversal.
class DisconnectedError : public std::runtime_error {
 public:
  DisconnectedError(const std::string& what, std::vector<std::vector<int>> components)
      : std::runtime_error(what), components_(std::move(components)) {}

  const std::vector<std::vector<int>>& components() const noexcept { return components_; }

 private:
  std::vector<std::vector<int>> components_;
};

/// A modification would disconnect the grid. `criterion` is the scalar (or
/// smallest pivot ratio) that fell below tolerance.
class IslandingError : public std::runtime_error {
 public:
  IslandingError(const std::string& what, double criterion)
      : std::runtime_error(what), criterion_(criterion) {}

  double criterion() const noexcept { return criterion_; }

 private:
  double criterion_;
};

/// Switch whose terminals are already at equal potential in the reference,
/// or a set of closed switches forming a redundant loop.
class DegenerateSwitchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace gridfactors
