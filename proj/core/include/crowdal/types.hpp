#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace crowdal {

using WorkerIndex = std::size_t;
using TaskIndex = std::size_t;

/// Binary annotation alphabet. Only -1 and +1 exist; there is no "unlabeled" value.
enum class Label : std::int8_t { Negative = -1, Positive = 1 };

constexpr int to_int(Label label) { return static_cast<int>(label); }

constexpr Label negate(Label label) {
  return label == Label::Positive ? Label::Negative : Label::Positive;
}

/// Violated precondition or mismatched dimensions.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input file. Carries the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Converts -1 / +1 to a Label; anything else throws DomainError.
Label label_from_int(int value);

}  // namespace crowdal
