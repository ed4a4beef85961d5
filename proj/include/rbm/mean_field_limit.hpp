#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rbm/errors.hpp"
#include "rbm/monte_carlo.hpp"
#include "rbm/rng.hpp"
#include "rbm/root_finding.hpp"

// N -> infinity magnetization ODEs of the Curie-Weiss chain, classical and
// with random batches: drifts, equilibria, and the critical inverse
// temperature beta_{c,p}.

namespace rbm::mfl {

namespace detail {

inline double pos(double x) { return x > 0.0 ? x : 0.0; }

inline double log_choose(std::int64_t n, std::int64_t k) {
  if (k == 0 || k == n) return 0.0;
  return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
         std::lgamma(static_cast<double>(n - k + 1));
}

// S_1^{p,beta}(m): binomial sum over the number of negative companions in an
// infinite spin pool, log-space with max shift. S_2(m) = S_1(-m), and using
// the same code path for both keeps that symmetry exact in floating point.
inline double s1_sum(int p, double beta, double m) {
  const double q_minus = (1.0 - m) / 2.0;
  const double q_plus = (1.0 + m) / 2.0;
  const double log_qm = std::log(q_minus);
  const double log_qp = std::log(q_plus);
  std::vector<double> terms;
  terms.reserve(p);
  for (int k = 0; k <= p - 1; ++k) {
    if (k > 0 && q_minus == 0.0) break;
    if (k < p - 1 && q_plus == 0.0) continue;
    double lt = log_choose(p - 1, k) - 2.0 * beta * pos(static_cast<double>(2 * k + 1 - p) / p);
    if (k > 0) lt += k * log_qm;
    if (k < p - 1) lt += (p - 1 - k) * log_qp;
    terms.push_back(lt);
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (double t : terms) mx = std::max(mx, t);
  if (terms.empty()) return 0.0;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return std::exp(mx) * s;
}

}  // namespace detail

// f(beta, m) = 2 e^{-beta|m|} (sinh(beta m) - m cosh(beta m))
inline double drift_classic(double beta, double m) {
  const double bm = beta * m;
  return 2.0 * std::exp(-std::abs(bm)) * (std::sinh(bm) - m * std::cosh(bm));
}

struct SSums {
  double s1;
  double s2;
};

inline SSums s_sums(int p, double beta, double m) {
  if (p < 2) throw precondition_error("s_sums: need p >= 2");
  if (!(m >= -1.0 && m <= 1.0)) throw precondition_error("s_sums: m must lie in [-1,1]");
  return {detail::s1_sum(p, beta, m), detail::s1_sum(p, beta, -m)};
}

// f_p(beta, m) = (S1 - S2) - m (S1 + S2); odd in m, and exactly 0 at m = 0.
inline double drift_rb(int p, double beta, double m) {
  const SSums s = s_sums(p, beta, m);
  return (s.s1 - s.s2) - m * (s.s1 + s.s2);
}

// d/dm f_p(beta, 0) as the closed binomial sum; strictly increasing in beta.
inline double dm_drift_rb_at_zero(int p, double beta) {
  if (p < 2) throw precondition_error("dm_drift_rb_at_zero: need p >= 2");
  const double log_half = -(p - 1) * std::numbers::ln2;
  double sum = 0.0;
  for (int k = 0; k <= p - 1; ++k) {
    const double pmf = std::exp(detail::log_choose(p - 1, k) + log_half);
    const double arg = detail::pos(static_cast<double>(2 * k + 1 - p) / p);
    sum += (p - 2 - 2 * k) * pmf * std::exp(-2.0 * beta * arg);
  }
  return 2.0 * sum;
}

// Same quantity written as an expectation over Y_p = 2 X_p / p - (p-1)/p with
// X_p ~ Binomial(p-1, 1/2); this is the Monte-Carlo target g_p(beta).
inline double g_p_exact(int p, double beta) { return dm_drift_rb_at_zero(p, beta); }

inline McEstimate g_p_monte_carlo(int p, double beta, std::uint64_t samples,
                                  const RngStream& stream, unsigned threads = 0) {
  if (p < 2) throw precondition_error("g_p_monte_carlo: need p >= 2");
  if (samples < 1) throw precondition_error("g_p_monte_carlo: need at least one sample");
  return mc_estimate(
      stream, samples,
      [p, beta](RngStream& s) {
        const auto x = static_cast<double>(s.binomial(p - 1, 0.5));
        const double y = (2.0 * x - (p - 1)) / p;
        return 2.0 * (-p * y - 1.0) * std::exp(-2.0 * beta * detail::pos(y));
      },
      threads);
}

inline double critical_beta_asymptotic(int p) {
  if (p < 2) throw precondition_error("critical_beta_asymptotic: need p >= 2");
  return 1.0 + std::sqrt(2.0 / (p * std::numbers::pi));
}

// Unique root of beta -> d/dm f_p(beta, 0) on [0.5, 10]. For p in {2,3} the
// derivative stays negative for every beta: no phase transition.
inline double critical_beta(int p, double tol = 1e-10) {
  if (p < 2) throw precondition_error("critical_beta: need p >= 2");
  if (p < 4)
    throw precondition_error("critical_beta: no phase transition for p = " + std::to_string(p));
  auto g = [p](double beta) { return dm_drift_rb_at_zero(p, beta); };
  return find_root(g, RootBracket{0.5, 10.0, tol});
}

// Drift of the limit ODE; batch size absent means the classical drift.
struct LimitDrift {
  double beta;
  std::optional<int> batch_size;

  double operator()(double m) const {
    return batch_size ? drift_rb(*batch_size, beta, m) : drift_classic(beta, m);
  }
};

struct OdePoint {
  double t;
  double m;
};

struct OdeResult {
  std::vector<OdePoint> points;
  bool clamped = false;  // trajectory left [-1,1] by more than 1e-9 and was clamped
};

// Classical RK4 on dm/dt = f(m).
inline OdeResult ode_integrate(const LimitDrift& drift, double m0, double dt, double t_end) {
  if (!(m0 >= -1.0 && m0 <= 1.0)) throw precondition_error("ode_integrate: m0 must lie in [-1,1]");
  if (!(dt > 0.0)) throw precondition_error("ode_integrate: dt must be positive");
  OdeResult result;
  double t = 0.0, m = m0;
  result.points.push_back({t, m});
  while (t < t_end - 1e-15) {
    const double h = std::min(dt, t_end - t);
    const double k1 = drift(m);
    const double k2 = drift(m + 0.5 * h * k1);
    const double k3 = drift(m + 0.5 * h * k2);
    const double k4 = drift(m + h * k3);
    m += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (m > 1.0 + 1e-9 || m < -1.0 - 1e-9) result.clamped = true;
    m = std::clamp(m, -1.0, 1.0);
    t += h;
    result.points.push_back({t, m});
  }
  return result;
}

struct Equilibrium {
  double m;
  double derivative;  // d/dm f at the equilibrium
  bool stable;
};

struct EquilibriumReport {
  std::vector<Equilibrium> equilibria;
  double derivative_at_zero;
  bool multiplicity_warning = false;  // two roots closer than 10 grid spacings
};

// Sign-change scan of the drift over [-1,1] (2e4 intervals) with bisection
// refinement; stability read off a central finite difference.
inline EquilibriumReport equilibria(const LimitDrift& drift, int grid_points = 20001) {
  const double spacing = 2.0 / (grid_points - 1);
  auto fd = [&](double m) {
    const double h = 1e-6;
    const double a = std::max(-1.0, m - h);
    const double b = std::min(1.0, m + h);
    return (drift(b) - drift(a)) / (b - a);
  };

  std::vector<double> roots;
  double prev_m = -1.0;
  double prev_f = drift(prev_m);
  if (prev_f == 0.0) roots.push_back(prev_m);
  for (int i = 1; i < grid_points; ++i) {
    const double m = -1.0 + i * spacing;
    const double f = drift(m);
    if (f == 0.0) {
      roots.push_back(m);
    } else if (prev_f != 0.0 && prev_f * f < 0.0) {
      roots.push_back(find_root(drift, RootBracket{prev_m, m, 1e-13}, false));
    }
    prev_m = m;
    prev_f = f;
  }

  EquilibriumReport report;
  report.derivative_at_zero = fd(0.0);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (i > 0 && roots[i] - roots[i - 1] < 10.0 * spacing) report.multiplicity_warning = true;
    const double d = fd(roots[i]);
    report.equilibria.push_back({roots[i], d, d < 0.0});
  }
  return report;
}

}  // namespace rbm::mfl
