#pragma once

// Independent reference computations used by the tests: deliberately simple
// algorithms (Simpson sums, dense linear solves, exhaustive enumeration) that
// share no code with the library paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace oracle {

// Composite Simpson rule with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Bisection to a fixed x-tolerance; assumes a sign change.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  if (flo * f(hi) > 0.0) throw std::runtime_error("oracle::bisect: no sign change");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (flo * fm < 0.0) {
      hi = mid;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

// sqrt(pi) * erf(R) = integral of exp(-x^2) over [-R, R].
inline double gaussian_integral(double r) { return std::sqrt(std::numbers::pi) * std::erf(r); }

// For L_W = 1 the critical-diffusion condition reduces to pure quartic
// moments: sigma_c = (2 Gamma(3/4) / Gamma(1/4))^2.
inline double sigma_c_closed_form_lw1() {
  const double g34 = std::tgamma(0.75);
  const double g14 = std::tgamma(0.25);
  return (2.0 * g34 / g14) * (2.0 * g34 / g14);
}

// Root in sigma of the raw half-line integral
//   int_0^R (x^2 - 1/(2 L_W)) exp((1 - L_W) x^2 - sigma x^4) dx = 0
// by Simpson quadrature and bisection.
inline double sigma_c_raw_integral(double l_w) {
  auto integral = [l_w](double sigma) {
    // pick R so the quartic term has decayed by ~200 nats past the quadratic
    const double c2 = 1.0 - l_w;
    const double r2 = (c2 + std::sqrt(c2 * c2 + 4.0 * sigma * 200.0)) / (2.0 * sigma);
    const double r = std::max(6.0, std::sqrt(r2));
    return simpson(
        [l_w, sigma](double x) {
          return (x * x - 0.5 / l_w) * std::exp((1.0 - l_w) * x * x - sigma * x * x * x * x);
        },
        0.0, r, 200000);
  };
  return bisect(integral, 1e-3, 10.0, 1e-11);
}

// Invariant distribution of a row-stochastic matrix by dense Gaussian
// elimination on the stationarity equations (nu M = nu, sum nu = 1).
inline std::vector<double> invariant_by_linear_solve(
    const std::function<double(std::size_t, std::size_t)>& entry, std::size_t n) {
  // system A nu = b: rows 0..n-2 from M^T - I, last row sum-to-one.
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  for (std::size_t r = 0; r + 1 < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) a[r][c] = entry(c, r) - (r == c ? 1.0 : 0.0);
  }
  for (std::size_t c = 0; c < n; ++c) a[n - 1][c] = 1.0;
  b[n - 1] = 1.0;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    if (a[col][col] == 0.0) throw std::runtime_error("oracle: singular stationarity system");
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  std::vector<double> nu(n, 0.0);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri][c] * nu[c];
    nu[ri] = s / a[ri][ri];
  }
  return nu;
}

// Exhaustive enumeration of the random-batch acceptance probability: average
// over every size-p cluster containing a chosen spin of the given sign, in a
// pool with n_minus negative spins out of n.
struct CwBruteRates {
  double right;
  double left;
};

inline CwBruteRates cw_rates_by_enumeration(int n, int p, int n_minus, double beta) {
  const int n_plus = n - n_minus;
  // companions[c] = +1/-1 values of the other n-1 spins given the chosen sign
  auto average_acceptance = [&](int chosen_sign) {
    std::vector<int> others;
    for (int j = 0; j < n_minus - (chosen_sign < 0 ? 1 : 0); ++j) others.push_back(-1);
    for (int j = 0; j < n_plus - (chosen_sign > 0 ? 1 : 0); ++j) others.push_back(1);
    double total = 0.0;
    long count = 0;
    std::vector<int> pick(p - 1);
    std::function<void(int, int)> rec = [&](int start, int depth) {
      if (depth == p - 1) {
        int cluster_sum = 0;
        for (int idx : pick) cluster_sum += others[idx];
        const double dh = 2.0 * chosen_sign * cluster_sum / static_cast<double>(p);
        total += std::exp(-beta * std::max(dh, 0.0));
        ++count;
        return;
      }
      for (int idx = start; idx <= static_cast<int>(others.size()) - (p - 1 - depth); ++idx) {
        pick[depth] = idx;
        rec(idx + 1, depth + 1);
      }
    };
    rec(0, 0);
    return total / count;
  };

  CwBruteRates out{0.0, 0.0};
  if (n_minus > 0) out.right = (static_cast<double>(n_minus) / n) * average_acceptance(-1);
  if (n_plus > 0) out.left = (static_cast<double>(n_plus) / n) * average_acceptance(+1);
  return out;
}

// g_4(beta) in closed form, for the beta_{c,4} grid/bisection oracle.
inline double g4_closed_form(double beta) {
  return 0.25 * (2.0 - 6.0 * std::exp(-beta / 2.0) - 4.0 * std::exp(-1.5 * beta));
}

}  // namespace oracle
