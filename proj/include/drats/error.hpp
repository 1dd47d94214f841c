#pragma once

#include <stdexcept>
#include <string>

namespace drats {

// Raised when an argument violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when a computation produces a non-finite value mid-run.
class NumericFault : public std::runtime_error {
 public:
  explicit NumericFault(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a quantity is mathematically undefined for the given input
// (e.g. a cosine similarity against a zero vector).
class Undefined : public std::domain_error {
 public:
  explicit Undefined(const std::string& what) : std::domain_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

}  // namespace drats
