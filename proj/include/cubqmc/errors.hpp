#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cubqmc {

/// Malformed direction-number, lattice-vector, CSV or key-value input.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A request exceeds what a generator or table can supply (dimension, index range).
class CapacityError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid user-level configuration (tolerances, cone parameters, CLI values).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The integrand produced a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(std::uint64_t index, std::size_t output)
      : std::runtime_error("non-finite integrand value at point " + std::to_string(index) +
                           ", output " + std::to_string(output)),
        index_(index),
        output_(output) {}
  std::uint64_t index() const noexcept { return index_; }
  std::size_t output() const noexcept { return output_; }

 private:
  std::uint64_t index_;
  std::size_t output_;
};

/// Error bound requested at a level below l_star + r.
class LevelTooLowError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cubqmc
