#pragma once

#include <stdexcept>
#include <string>

namespace nesta {

/// Argument outside the mathematical domain of an operation (e.g. a zero-input compressor).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A bit matrix column holds more bits than the network reserved for it.
class CapacityError : public std::length_error {
 public:
  CapacityError(std::size_t column, std::size_t height, std::size_t capacity)
      : std::length_error("column " + std::to_string(column) + " holds " + std::to_string(height) +
                          " bits but capacity is " + std::to_string(capacity)),
        column_(column) {}

  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

/// Operation not allowed in the current engine state (e.g. consuming after finalize).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Accumulated value left the accumulator range, or an operand does not fit its width.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Tensor or layer dimensions that do not agree with each other.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operand widths violate the accumulator sizing inequality.
class SizingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed network or parameter document. `where` names the field path or line.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

}  // namespace nesta
