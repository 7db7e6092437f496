#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace stlagc {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Formula text rejected; `position` is a 0-based byte offset into the input.
class ParseError : public Error {
 public:
  enum class Kind { syntax, semantic };

  ParseError(Kind kind, std::size_t position, const std::string& what)
      : Error(what + " (at offset " + std::to_string(position) + ")"),
        kind_(kind),
        position_(position) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t position() const noexcept { return position_; }

 private:
  Kind kind_;
  std::size_t position_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Funnel parameters cannot be chosen inside the admissible intervals.
class DesignError : public Error {
 public:
  using Error::Error;
};

// Iterative method gave up.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Simulated state left the finite range; `step` is the first bad step.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t step, const std::string& what) : Error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

// Scenario document does not match the schema; `pointer` is a JSON pointer.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string pointer, const std::string& what)
      : Error(pointer + ": " + what), pointer_(std::move(pointer)) {}

  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

}  // namespace stlagc
