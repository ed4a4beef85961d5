#pragma once

#include <cmath>
#include <string>

#include "rbm/errors.hpp"

namespace rbm {

struct RootBracket {
  double lo;
  double hi;
  double tol = 1e-10;
};

// Bisection with optional secant acceleration. The secant candidate is used
// only when it falls strictly inside the current bracket, so convergence is
// guaranteed either way and both variants land within tol of the root.
// Throws if [lo,hi] carries no sign change or max_iter is exhausted.
template <class F>
double find_root(F&& f, RootBracket b, bool accelerate = true, int max_iter = 200) {
  if (!(b.lo < b.hi)) throw precondition_error("find_root: bracket must satisfy lo < hi");
  if (!(b.tol > 0.0)) throw precondition_error("find_root: tol must be positive");
  double flo = f(b.lo);
  double fhi = f(b.hi);
  if (flo == 0.0) return b.lo;
  if (fhi == 0.0) return b.hi;
  if (flo * fhi > 0.0) {
    throw precondition_error("find_root: no sign change over [" + std::to_string(b.lo) + ", " +
                             std::to_string(b.hi) + "]");
  }
  for (int it = 0; it < max_iter; ++it) {
    double mid = 0.5 * (b.lo + b.hi);
    if (accelerate && fhi != flo) {
      // Only take the secant point when it stays in the middle half of the
      // bracket; every step then shrinks the bracket by at least 25%.
      const double sec = b.hi - fhi * (b.hi - b.lo) / (fhi - flo);
      const double margin = 0.25 * (b.hi - b.lo);
      if (sec > b.lo + margin && sec < b.hi - margin) mid = sec;
    }
    const double fmid = f(mid);
    if (fmid == 0.0) return mid;
    if (flo * fmid < 0.0) {
      b.hi = mid;
      fhi = fmid;
    } else {
      b.lo = mid;
      flo = fmid;
    }
    if (b.hi - b.lo < b.tol) return 0.5 * (b.lo + b.hi);
  }
  throw numerical_error("find_root: max iterations reached, last bracket [" + std::to_string(b.lo) +
                        ", " + std::to_string(b.hi) + "]");
}

}  // namespace rbm
