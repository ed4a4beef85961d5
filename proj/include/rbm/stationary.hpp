#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rbm/errors.hpp"
#include "rbm/quadrature.hpp"
#include "rbm/rng.hpp"
#include "rbm/root_finding.hpp"

// Stationary distributions of the double-well McKean-Vlasov dynamics
// (U(x) = x^4/4 - x^2/2, W(x) = L_W x^2/2) and of its effective random-batch
// counterpart: the mean/variance fixed-point maps f1/f2, branch solving,
// the critical diffusion sigma_c, and the shifted effective critical value.

namespace rbm::stationary {

enum class Branch { zero, plus, minus };
enum class ModelTag { nonlinear, effective };

inline const char* branch_name(Branch b) {
  switch (b) {
    case Branch::zero: return "zero";
    case Branch::plus: return "plus";
    default: return "minus";
  }
}

struct StationarySolution {
  double sigma;
  double kappa1;
  double kappa2;
  Branch branch;
  ModelTag model;
  double residual;  // fixed-point residual of the solution's own system
};

// Requests within `near_critical_floor` of sigma_c are refused: the plus
// branch scales like sqrt(sigma_c - sigma) there and the root is
// ill-conditioned.
class near_critical_error : public precondition_error {
 public:
  explicit near_critical_error(const std::string& what) : precondition_error(what) {}
};

inline double double_well(double x) { return x * x * x * x / 4.0 - x * x / 2.0; }

// Unnormalized stationary density exp(-(U(x) + L_W/2 (x-kappa)^2)/sigma).
inline double density_g(double x, double sigma, double kappa, double l_w) {
  if (!(sigma > 0.0)) throw precondition_error("density_g: sigma must be positive");
  const double d = x - kappa;
  return std::exp(-(double_well(x) + 0.5 * l_w * d * d) / sigma);
}

// Truncation radius for the density integrals: the quartic tail makes the
// discarded mass < 1e-14 everywhere in the regime studied.
inline double density_radius(double sigma, double kappa) {
  return std::max(6.0, 4.0 * std::sqrt(1.0 + sigma) + std::abs(kappa) + 2.0);
}

namespace detail {

// log of density_g, used so moments can be max-shifted before exponentiation.
inline double log_density_g(double x, double sigma, double kappa, double l_w) {
  const double d = x - kappa;
  return -(double_well(x) + 0.5 * l_w * d * d) / sigma;
}

struct Moments {
  double mean;          // f1
  double centered_var;  // f2, centered at kappa
};

inline Moments g_moments(double sigma, double kappa, double l_w, const Quadrature& q) {
  const auto xs = q.nodes();
  const auto ws = q.weights();
  const std::size_t n = xs.size();
  std::vector<double> logs(n);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    logs[i] = log_density_g(xs[i], sigma, kappa, l_w);
    mx = std::max(mx, logs[i]);
  }
  if (!std::isfinite(mx)) throw numerical_error("g_moments: density vanished on the whole domain");
  double den = 0.0, num1 = 0.0, num2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = ws[i] * std::exp(logs[i] - mx);
    const double d = xs[i] - kappa;
    den += w;
    num1 += w * xs[i];
    num2 += w * d * d;
  }
  if (!(den > 1e-300)) throw numerical_error("g_moments: vanishing normalization");
  return {num1 / den, num2 / den};
}

}  // namespace detail

struct SolverOptions {
  int points_per_panel = 32;
  int panels = 64;
  double sigma_floor_fraction = 0.05;  // sigma_0 = fraction * sigma_c
  double near_critical_floor = 1e-5;
  double kappa_max = 2.0;  // plus-branch bracket ceiling (wells at +-1)
  double root_tol = 1e-12;
  double c0_margin_limit = 0.5;  // delta L^2 C_lip / (2(p-1)) must stay below this
};

// All stationary analysis for one interaction strength L_W. sigma_c is
// computed once at construction; the Lipschitz bound used by the effective
// smallness check is estimated lazily and cached.
class StationaryModel {
 public:
  explicit StationaryModel(double l_w, SolverOptions opt = {}) : l_w_(l_w), opt_(opt) {
    if (!(l_w > 0.0)) throw precondition_error("StationaryModel: L_W must be positive");
    sigma_c_ = compute_critical_sigma();
  }

  double l_w() const { return l_w_; }
  const SolverOptions& options() const { return opt_; }
  double critical_sigma() const { return sigma_c_; }
  double sigma_floor() const { return opt_.sigma_floor_fraction * sigma_c_; }

  double f1(double sigma, double kappa) const { return moments(sigma, kappa).mean; }
  double f2(double sigma, double kappa) const { return moments(sigma, kappa).centered_var; }

  StationarySolution solve_branch(double sigma, Branch branch) const {
    if (!(sigma > 0.0)) throw precondition_error("solve_branch: sigma must be positive");
    if (branch == Branch::zero) {
      const double k2 = f2(sigma, 0.0);
      return {sigma, 0.0, k2, branch, ModelTag::nonlinear, std::abs(f1(sigma, 0.0))};
    }
    if (sigma >= sigma_c_)
      throw precondition_error("solve_branch: supercritical sigma, only the zero branch exists");
    if (sigma_c_ - sigma < opt_.near_critical_floor)
      throw near_critical_error("solve_branch: sigma within " +
                                std::to_string(opt_.near_critical_floor) +
                                " of sigma_c, root is ill-conditioned");
    const double kappa1 = positive_fixed_point(sigma);
    const double kappa2 = f2(sigma, kappa1);
    const double res = std::abs(f1(sigma, kappa1) - kappa1);
    if (branch == Branch::minus)
      return {sigma, -kappa1, kappa2, branch, ModelTag::nonlinear, res};
    return {sigma, kappa1, kappa2, branch, ModelTag::nonlinear, res};
  }

  // g_eff,*(sigma) = sigma - delta L_W^2 kappa2(mu_{sigma,*}) / (2(p-1)).
  double g_eff(double sigma, Branch branch, double delta, int p) const {
    validate_delta_p(delta, p);
    const StationarySolution s = solve_branch(sigma, branch);
    return sigma - delta * l_w_ * l_w_ * s.kappa2 / (2.0 * (p - 1));
  }

  double effective_critical_sigma(double delta, int p) const {
    validate_delta_p(delta, p);
    return sigma_c_ * (1.0 - delta * l_w_ / (2.0 * (p - 1)));
  }

  // Stationary solutions of the effective dynamics at diffusion sigma_prime:
  // one symmetric solution always (above the supported floor), plus the
  // +-pair below the shifted critical value. Each branch is found by
  // monotone bisection of g_eff.
  std::vector<StationarySolution> solve_effective(double sigma_prime, double delta, int p) const {
    validate_delta_p(delta, p);
    const double margin = c0_margin(delta, p);
    if (margin >= opt_.c0_margin_limit)
      throw precondition_error("solve_effective: delta/(p-1) too large, smallness margin " +
                               std::to_string(margin));
    const double s0 = sigma_floor();
    if (sigma_prime < g_eff(s0, Branch::zero, delta, p))
      throw precondition_error("solve_effective: sigma' below the supported range");

    std::vector<StationarySolution> out;
    out.push_back(effective_from_nl(invert_g_eff_zero(sigma_prime, delta, p), Branch::zero,
                                    sigma_prime, delta, p));

    const double top = sigma_c_ - opt_.near_critical_floor;
    if (sigma_prime >= g_eff(s0, Branch::plus, delta, p) &&
        sigma_prime < g_eff(top, Branch::plus, delta, p)) {
      const double sigma_nl = invert_g_eff_plus(sigma_prime, delta, p);
      out.push_back(effective_from_nl(sigma_nl, Branch::plus, sigma_prime, delta, p));
      out.push_back(effective_from_nl(sigma_nl, Branch::minus, sigma_prime, delta, p));
    }
    return out;
  }

  // Numerical bound on |d kappa2 / d sigma| over [sigma_0, sigma_c], the
  // constant entering the smallness condition on delta/(p-1).
  double lipschitz_estimate() const {
    std::lock_guard<std::mutex> lock(lip_mutex_);
    if (!lip_) lip_ = estimate_lipschitz();
    return *lip_;
  }

  double c0_margin(double delta, int p) const {
    validate_delta_p(delta, p);
    return delta * l_w_ * l_w_ * lipschitz_estimate() / (2.0 * (p - 1));
  }

 private:
  static void validate_delta_p(double delta, int p) {
    // delta = 0 is legal and collapses the effective model onto the nonlinear one
    if (!(delta >= 0.0)) throw precondition_error("effective dynamics: delta must be >= 0");
    if (p < 2) throw precondition_error("effective dynamics: p must be >= 2");
  }

  detail::Moments moments(double sigma, double kappa) const {
    const Quadrature q(density_radius(sigma, kappa), opt_.points_per_panel, opt_.panels);
    return detail::g_moments(sigma, kappa, l_w_, q);
  }

  double compute_critical_sigma() const {
    auto h = [this](double sigma) { return f2(sigma, 0.0) - sigma / l_w_; };
    double lo = 1e-3, hi = 10.0;
    double fhi = h(hi);
    while (fhi > 0.0) {
      hi *= 2.0;
      if (hi > 1e6) throw numerical_error("critical_sigma: no sign change up to sigma = 1e6");
      fhi = h(hi);
    }
    return find_root(h, RootBracket{lo, hi, opt_.root_tol});
  }

  // Positive root of xi(kappa) = f1(sigma, kappa) - kappa. xi vanishes at 0,
  // rises (sigma subcritical), peaks once and then decreases through the
  // root, so a golden-section pass brackets the maximizer and bisection on
  // its right finds the fixed point.
  double positive_fixed_point(double sigma) const {
    auto xi = [&](double k) { return f1(sigma, k) - k; };
    const double k_lo = 1e-8;
    const double k_hi = opt_.kappa_max;
    if (!(xi(k_hi) < 0.0))
      throw numerical_error("solve_branch: xi(kappa_max) >= 0, bracket ceiling too small");

    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = k_lo, b = k_hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = xi(c), fd = xi(d);
    while (b - a > 1e-6) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = xi(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = xi(d);
      }
    }
    const double k_peak = 0.5 * (a + b);
    if (!(xi(k_peak) > 0.0))
      throw numerical_error("solve_branch: no positive fixed point found at sigma = " +
                            std::to_string(sigma));
    return find_root(xi, RootBracket{k_peak, k_hi, opt_.root_tol});
  }

  double invert_g_eff_zero(double sigma_prime, double delta, int p) const {
    auto h = [&](double s) { return g_eff(s, Branch::zero, delta, p) - sigma_prime; };
    double lo = sigma_floor();
    double hi = std::max(sigma_prime + 1.0, sigma_c_);
    while (h(hi) < 0.0) {
      hi *= 2.0;
      if (hi > 1e6) throw numerical_error("solve_effective: cannot bracket the zero branch");
    }
    return find_root(h, RootBracket{lo, hi, opt_.root_tol});
  }

  double invert_g_eff_plus(double sigma_prime, double delta, int p) const {
    auto h = [&](double s) { return g_eff(s, Branch::plus, delta, p) - sigma_prime; };
    return find_root(h, RootBracket{sigma_floor(), sigma_c_ - opt_.near_critical_floor,
                                    opt_.root_tol});
  }

  StationarySolution effective_from_nl(double sigma_nl, Branch branch, double sigma_prime,
                                       double delta, int p) const {
    StationarySolution s = solve_branch(sigma_nl, branch);
    s.model = ModelTag::effective;
    s.sigma = sigma_prime;
    // residual of the effective fixed-point system: map back to the
    // nonlinear coefficient implied by kappa2 and re-evaluate f1/f2 there.
    const double mapped = sigma_prime + delta * l_w_ * l_w_ * s.kappa2 / (2.0 * (p - 1));
    const double r1 = std::abs(f1(mapped, s.kappa1) - s.kappa1);
    const double r2 = std::abs(f2(mapped, s.kappa1) - s.kappa2);
    s.residual = std::max(r1, r2);
    return s;
  }

  double estimate_lipschitz() const {
    const int n = 20;
    const double s0 = sigma_floor();
    const double top = sigma_c_ - 2.0 * opt_.near_critical_floor;
    double worst = 0.0;
    auto scan = [&](Branch b, double hi) {
      double prev_sigma = s0;
      double prev_k2 = solve_branch(prev_sigma, b).kappa2;
      for (int i = 1; i <= n; ++i) {
        const double sigma = s0 + (hi - s0) * i / n;
        const double k2 = solve_branch(sigma, b).kappa2;
        worst = std::max(worst, std::abs(k2 - prev_k2) / (sigma - prev_sigma));
        prev_sigma = sigma;
        prev_k2 = k2;
      }
    };
    scan(Branch::zero, 2.0 * sigma_c_);
    scan(Branch::plus, top);
    return worst;
  }

  double l_w_;
  SolverOptions opt_;
  double sigma_c_;
  mutable std::mutex lip_mutex_;
  mutable std::optional<double> lip_;
};

// Free-function form of the shifted critical diffusion.
inline double effective_critical_sigma(double sigma_c, double delta, int p, double l_w) {
  if (!(delta >= 0.0)) throw precondition_error("effective_critical_sigma: delta must be >= 0");
  if (p < 2) throw precondition_error("effective_critical_sigma: p must be >= 2");
  return sigma_c * (1.0 - delta * l_w / (2.0 * (p - 1)));
}

// Kurtosis of the density exp(-beta (x^2-1)^2) under the standard Gaussian:
// A(beta) = E[e^-bV] E[X^4 e^-bV] / E[X^2 e^-bV]^2, V = (X^2-1)^2.
inline double kurtosis_A(double beta_param) {
  if (!(beta_param >= 0.0)) throw precondition_error("kurtosis_A: beta must be >= 0");
  const Quadrature q(12.0, 32, 64);
  const auto xs = q.nodes();
  const auto ws = q.weights();
  double n0 = 0.0, n2 = 0.0, n4 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    const double v = (x * x - 1.0) * (x * x - 1.0);
    const double w = ws[i] * std::exp(-0.5 * x * x - beta_param * v);
    n0 += w;
    n2 += w * x * x;
    n4 += w * x * x * x * x;
  }
  return n0 * n4 / (n2 * n2);
}

struct F1Result {
  double value;       // F1(sigma) = d/dkappa f1(sigma, 0) = L_W E[Y^2]
  double derivative;  // F1'(sigma) = (L_W/4)(E[Y^2] E[Y^4] - E[Y^6]) < 0
};

// Moments of the rescaled density exp(-sigma y^4/4 + (1-L_W) y^2/2).
inline F1Result F1_and_derivative(double sigma, double l_w) {
  if (!(sigma > 0.0)) throw precondition_error("F1_and_derivative: sigma must be positive");
  const double a4 = sigma / 4.0;
  const double c2 = (1.0 - l_w) / 2.0;
  const double r2 = (c2 + std::sqrt(c2 * c2 + 4.0 * a4 * 200.0)) / (2.0 * a4);
  const Quadrature q(std::max(6.0, std::sqrt(r2)), 32, 64);
  const auto xs = q.nodes();
  const auto ws = q.weights();
  double n0 = 0.0, n2 = 0.0, n4 = 0.0, n6 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double y2 = xs[i] * xs[i];
    const double w = ws[i] * std::exp(-a4 * y2 * y2 + c2 * y2);
    n0 += w;
    n2 += w * y2;
    n4 += w * y2 * y2;
    n6 += w * y2 * y2 * y2;
  }
  const double e2 = n2 / n0, e4 = n4 / n0, e6 = n6 / n0;
  return {l_w * e2, l_w / 4.0 * (e2 * e4 - e6)};
}

struct SqrtScalingResult {
  std::vector<double> offsets;
  std::vector<double> ratios;     // kappa1(sigma_c - d) / sqrt(d)
  double last3_max_over_min = 0;  // flatness of the final three ratios
};

// kappa1 of the plus branch scales like sqrt(sigma_c - sigma) near the
// critical diffusion; the ratio sequence should flatten as offsets shrink.
inline SqrtScalingResult sqrt_scaling_probe(const StationaryModel& model,
                                            const std::vector<double>& offsets) {
  SqrtScalingResult out;
  out.offsets = offsets;
  for (double d : offsets) {
    if (!(d >= 1e-5))
      throw precondition_error("sqrt_scaling_probe: offsets must stay >= 1e-5");
    const auto s = model.solve_branch(model.critical_sigma() - d, Branch::plus);
    out.ratios.push_back(s.kappa1 / std::sqrt(d));
  }
  if (out.ratios.size() >= 3) {
    double lo = out.ratios.back(), hi = out.ratios.back();
    for (std::size_t i = out.ratios.size() - 3; i < out.ratios.size(); ++i) {
      lo = std::min(lo, out.ratios[i]);
      hi = std::max(hi, out.ratios[i]);
    }
    out.last3_max_over_min = hi / lo;
  }
  return out;
}

struct MomentCheck {
  double estimate;
  double std_error;
  double target;
};

struct CltReport {
  MomentCheck first;   // E|Z_p|   -> sqrt(2/pi)
  MomentCheck second;  // E|Z_p|^2  = 1 exactly; estimated as a sanity check
  MomentCheck third;   // E|Z_p|^3 -> 2 sqrt(2/pi)
  MomentCheck fourth;  // E|Z_p|^4  = 3 + (E X^4 - 3)/p = 3 - 2/p for +-1 steps
};

// Moments of Z_p = p^{-1/2} sum of p standardized +-1 variables, against the
// Gaussian limits (second moment is an exact identity at every p).
inline CltReport moment_clt_check(int p, std::uint64_t samples, const RngStream& stream) {
  if (p < 2) throw precondition_error("moment_clt_check: need p >= 2");
  if (samples < 2) throw precondition_error("moment_clt_check: need at least two samples");
  RngStream s = stream.substream(0);
  double sum[4] = {0, 0, 0, 0}, sq[4] = {0, 0, 0, 0};
  for (std::uint64_t i = 0; i < samples; ++i) {
    const auto b = static_cast<double>(s.binomial(p, 0.5));
    const double z = std::abs((2.0 * b - p) / std::sqrt(static_cast<double>(p)));
    double v = z;
    for (int k = 0; k < 4; ++k) {
      sum[k] += v;
      sq[k] += v * v;
      v *= z;
    }
  }
  const double n = static_cast<double>(samples);
  auto check = [&](int k, double target) {
    const double mean = sum[k] / n;
    const double var = std::max(0.0, (sq[k] - n * mean * mean) / (n - 1.0));
    return MomentCheck{mean, std::sqrt(var / n), target};
  };
  const double g1 = std::sqrt(2.0 / std::numbers::pi);
  return {check(0, g1), check(1, 1.0), check(2, 2.0 * g1), check(3, 3.0 - 2.0 / p)};
}

}  // namespace rbm::stationary
