#pragma once

#include <stdexcept>
#include <string>

namespace rbm {

// Violated precondition (bad argument, unsatisfiable request). Maps to CLI exit code 1.
class precondition_error : public std::runtime_error {
 public:
  explicit precondition_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure at runtime (overflow, non-convergence, lost bracket). CLI exit code 2.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rbm
