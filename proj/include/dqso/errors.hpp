#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dqso {

// Base class for every domain error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  DimensionMismatch(std::size_t expected, std::size_t actual)
      : Error("dimension mismatch: expected " + std::to_string(expected) +
              ", got " + std::to_string(actual)) {}
};

// The diagonal distribution a_ii of index `index` (0-based) is not a vertex.
struct NoUnitDiagonal : Error {
  explicit NoUnitDiagonal(std::size_t index)
      : Error("no output receives x_" + std::to_string(index + 1) +
              "^2 with coefficient 1"),
        index(index) {}
  std::size_t index;
};

struct AmbiguousDiagonal : Error {
  explicit AmbiguousDiagonal(std::size_t index)
      : Error("more than one output receives x_" + std::to_string(index + 1) +
              "^2 with coefficient 1"),
        index(index) {}
  std::size_t index;
};

// Classification refused: the operator is not in canonical dissipative form.
struct NotCanonical : Error {
  using Error::Error;
};

struct NoConvergence : Error {
  using Error::Error;
};

struct BudgetExhausted : Error {
  BudgetExhausted(std::size_t attempts, std::size_t rejections)
      : Error("no candidate survived: " + std::to_string(rejections) +
              " rejected out of " + std::to_string(attempts) + " attempts"),
        attempts(attempts),
        rejections(rejections) {}
  std::size_t attempts;
  std::size_t rejections;
};

struct ParseError : Error {
  using Error::Error;
};

}  // namespace dqso
