#pragma once

#include <stdexcept>
#include <string>

namespace cbc {

// Precondition or domain violation (bad parameters, wrong region).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine failed to reach its tolerance. Carries the best value
// obtained so far.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, double partial = 0.0)
      : std::runtime_error(what), partial_(partial) {}
  double partial() const noexcept { return partial_; }

 private:
  double partial_;
};

// A structural invariant of a computed object was breached; indicates a bug.
class InvariantBreach : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cbc
