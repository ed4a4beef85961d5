#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "rbm/errors.hpp"

namespace rbm {

struct PowerIterationResult {
  std::vector<double> distribution;
  long iterations = 0;
};

// Raised when the iteration limit is hit; carries the last iterate so callers
// can inspect how far the chain got.
class power_iteration_limit : public numerical_error {
 public:
  power_iteration_limit(std::string what, std::vector<double> last)
      : numerical_error(std::move(what)), last_iterate(std::move(last)) {}
  std::vector<double> last_iterate;
};

// Left power iteration v <- vM until the L1 distance between consecutive
// iterates drops below n_states * eps. `Matrix` needs size() and
// apply_left(in, out) computing (vM)_j = sum_i v_i M_ij.
template <class Matrix>
PowerIterationResult power_iterate(const Matrix& m, std::vector<double> v0, double eps,
                                   long max_iter) {
  const std::size_t n = m.size();
  if (v0.size() != n) throw precondition_error("power_iterate: v0 size does not match matrix");
  double mass = 0.0;
  for (double p : v0) {
    if (p < 0.0) throw precondition_error("power_iterate: v0 has a negative entry");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-9) throw precondition_error("power_iterate: v0 does not sum to 1");

  const double threshold = static_cast<double>(n) * eps;
  std::vector<double> next(n, 0.0);
  for (long it = 1; it <= max_iter; ++it) {
    m.apply_left(v0, next);
    double l1 = 0.0, total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      l1 += std::abs(next[j] - v0[j]);
      total += next[j];
    }
    for (double& p : next) p /= total;  // shed roundoff drift
    v0.swap(next);
    if (l1 < threshold) return {std::move(v0), it};
  }
  throw power_iteration_limit("power_iterate: no convergence within " + std::to_string(max_iter) +
                                  " iterations",
                              std::move(v0));
}

}  // namespace rbm
