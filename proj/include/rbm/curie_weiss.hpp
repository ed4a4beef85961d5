#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "rbm/errors.hpp"
#include "rbm/power_iteration.hpp"
#include "rbm/rng.hpp"

// The Curie-Weiss magnetization chain, classical and with random batches:
// exact one-step transition probabilities, the tridiagonal transition matrix
// over the magnetization grid, and spin-level Metropolis simulation.

namespace rbm::cw {

struct CwParams {
  int n_spins;
  double beta;
  std::optional<int> batch_size;  // absent => classical model

  void validate() const {
    if (n_spins < 2) throw precondition_error("CwParams: need at least 2 spins");
    if (!(beta > 0.0)) throw precondition_error("CwParams: beta must be positive");
    if (batch_size && (*batch_size < 2 || *batch_size > n_spins))
      throw precondition_error("CwParams: batch size must lie in [2, N]");
  }
};

// States m_i = -1 + 2i/N for i = 0..N; i counts the +1 spins.
struct MagnetizationGrid {
  int n_spins;

  int state_count() const { return n_spins + 1; }
  double magnetization(int i) const {
    return static_cast<double>(2 * i - n_spins) / n_spins;
  }
  int index_of(double m) const {
    const double pos = (m + 1.0) * n_spins / 2.0;
    const int i = static_cast<int>(std::lround(pos));
    if (i < 0 || i > n_spins || std::abs(pos - i) > 1e-9 * n_spins)
      throw precondition_error("magnetization " + std::to_string(m) + " is not on the grid");
    return i;
  }
};

struct Rates {
  double right;  // m -> m + 2/N
  double left;   // m -> m - 2/N
};

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log C(n, k); impossible arguments give -inf so the term drops out.
inline double log_choose(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < 0 || k > n) return kNegInf;
  if (k == 0 || k == n) return 0.0;
  return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
         std::lgamma(static_cast<double>(n - k + 1));
}

inline double pos(double x) { return x > 0.0 ? x : 0.0; }

// exp-sum of log terms with max shift.
inline double sum_exp(const std::vector<double>& log_terms) {
  double mx = kNegInf;
  for (double t : log_terms) mx = std::max(mx, t);
  if (mx == kNegInf) return 0.0;
  double s = 0.0;
  for (double t : log_terms) s += std::exp(t - mx);
  return std::exp(mx) * s;
}

}  // namespace detail

// Transition probabilities of the classical magnetization chain at grid
// state i: a uniformly chosen spin flips with Metropolis acceptance
// exp(-beta (dH)+), and dH depends only on m.
inline Rates classical_rates_at(int i, const CwParams& params) {
  params.validate();
  if (params.batch_size) throw precondition_error("classical_rates: batch size must be absent");
  const int n = params.n_spins;
  if (i < 0 || i > n) throw precondition_error("classical_rates: state off grid");
  const double right_arg = detail::pos(static_cast<double>(n - 2 * i - 1) / n);
  const double left_arg = detail::pos(static_cast<double>(2 * i - n - 1) / n);
  return {static_cast<double>(n - i) / n * std::exp(-2.0 * params.beta * right_arg),
          static_cast<double>(i) / n * std::exp(-2.0 * params.beta * left_arg)};
}

// Same with random batches of size p: the flip is accepted against a uniform
// cluster of p spins containing the chosen one, which turns each rate into a
// hypergeometric-weighted sum over the number of negative companions.
// Evaluated with log binomial coefficients and max-shift exponentiation.
inline Rates rb_rates_at(int i, const CwParams& params) {
  params.validate();
  if (!params.batch_size) throw precondition_error("rb_rates: batch size required");
  const int n = params.n_spins;
  const int p = *params.batch_size;
  if (i < 0 || i > n) throw precondition_error("rb_rates: state off grid");
  const std::int64_t n_plus = i;
  const std::int64_t n_minus = n - i;
  const double log_total = detail::log_choose(n - 1, p - 1);

  std::vector<double> terms;
  terms.reserve(p);
  for (int k = 0; k <= p - 1; ++k) {
    const double lc = detail::log_choose(n_minus - 1, k) + detail::log_choose(n_plus, p - 1 - k);
    if (lc == detail::kNegInf) continue;
    const double arg = detail::pos(static_cast<double>(2 * k + 1 - p) / p);
    terms.push_back(lc - log_total - 2.0 * params.beta * arg);
  }
  const double right = static_cast<double>(n_minus) / n * detail::sum_exp(terms);

  terms.clear();
  for (int k = 0; k <= p - 1; ++k) {
    const double lc = detail::log_choose(n_minus, k) + detail::log_choose(n_plus - 1, p - 1 - k);
    if (lc == detail::kNegInf) continue;
    const double arg = detail::pos(static_cast<double>(p - 1 - 2 * k) / p);
    terms.push_back(lc - log_total - 2.0 * params.beta * arg);
  }
  const double left = static_cast<double>(n_plus) / n * detail::sum_exp(terms);
  return {right, left};
}

inline Rates rates_at(int i, const CwParams& params) {
  return params.batch_size ? rb_rates_at(i, params) : classical_rates_at(i, params);
}

// Convenience overloads taking the magnetization value itself.
inline Rates classical_rates(double m, const CwParams& params) {
  return classical_rates_at(MagnetizationGrid{params.n_spins}.index_of(m), params);
}
inline Rates rb_rates(double m, const CwParams& params) {
  return rb_rates_at(MagnetizationGrid{params.n_spins}.index_of(m), params);
}

// Row-stochastic tridiagonal matrix over the magnetization grid. Only the
// three diagonals are stored; off-band entries are exactly zero.
class TransitionMatrix {
 public:
  TransitionMatrix(std::vector<double> up, std::vector<double> down, std::vector<double> stay)
      : up_(std::move(up)), down_(std::move(down)), stay_(std::move(stay)) {
    if (up_.size() != stay_.size() || down_.size() != stay_.size())
      throw precondition_error("TransitionMatrix: diagonal lengths differ");
  }

  std::size_t size() const { return stay_.size(); }

  double at(std::size_t i, std::size_t j) const {
    if (j == i) return stay_[i];
    if (j == i + 1 && j < size()) return up_[i];
    if (i == j + 1) return down_[i];
    return 0.0;
  }

  double up(std::size_t i) const { return up_[i]; }
  double down(std::size_t i) const { return down_[i]; }
  double stay(std::size_t i) const { return stay_[i]; }

  double row_sum(std::size_t i) const {
    double s = stay_[i];
    if (i + 1 < size()) s += up_[i];
    if (i > 0) s += down_[i];
    return s;
  }

  // (vM)_j = v_{j-1} up_{j-1} + v_j stay_j + v_{j+1} down_{j+1}
  void apply_left(const std::vector<double>& v, std::vector<double>& out) const {
    const std::size_t n = size();
    out.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double s = v[j] * stay_[j];
      if (j > 0) s += v[j - 1] * up_[j - 1];
      if (j + 1 < n) s += v[j + 1] * down_[j + 1];
      out[j] = s;
    }
  }

 private:
  std::vector<double> up_;
  std::vector<double> down_;
  std::vector<double> stay_;
};

inline TransitionMatrix build_matrix(const CwParams& params) {
  params.validate();
  const int n = params.n_spins;
  std::vector<double> up(n + 1), down(n + 1), stay(n + 1);
  for (int i = 0; i <= n; ++i) {
    const Rates r = rates_at(i, params);
    if (!(r.right >= 0.0 && r.right <= 1.0) || !(r.left >= 0.0 && r.left <= 1.0))
      throw numerical_error("build_matrix: rate outside [0,1] at state " + std::to_string(i));
    up[i] = (i < n) ? r.right : 0.0;
    down[i] = (i > 0) ? r.left : 0.0;
    stay[i] = 1.0 - up[i] - down[i];
    if (stay[i] < -1e-12) throw numerical_error("build_matrix: rates exceed 1 at state " + std::to_string(i));
    stay[i] = std::max(stay[i], 0.0);
  }
  return TransitionMatrix(std::move(up), std::move(down), std::move(stay));
}

// Row-stochasticity gate in front of the generic power iteration.
inline PowerIterationResult invariant_distribution(const TransitionMatrix& m,
                                                   std::vector<double> v0, double eps,
                                                   long max_iter) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (std::abs(m.row_sum(i) - 1.0) > 1e-10)
      throw precondition_error("invariant_distribution: row " + std::to_string(i) +
                               " is not stochastic");
  }
  return power_iterate(m, std::move(v0), eps, max_iter);
}

// Gibbs measure of the classical chain on the grid, nu(m) ∝ C(N, i) exp(beta N m^2 / 2).
inline std::vector<double> gibbs_measure(const CwParams& params) {
  params.validate();
  const int n = params.n_spins;
  const MagnetizationGrid grid{n};
  std::vector<double> log_w(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double m = grid.magnetization(i);
    log_w[i] = detail::log_choose(n, i) + params.beta * n * m * m / 2.0;
  }
  const double mx = *std::max_element(log_w.begin(), log_w.end());
  double z = 0.0;
  for (int i = 0; i <= n; ++i) {
    log_w[i] = std::exp(log_w[i] - mx);
    z += log_w[i];
  }
  for (double& w : log_w) w /= z;
  return log_w;
}

// +-1 spins with the +1 count tracked so the magnetization is exact.
class SpinConfiguration {
 public:
  SpinConfiguration(int n_spins, int n_plus) : spins_(n_spins), n_plus_(n_plus) {
    if (n_plus < 0 || n_plus > n_spins) throw precondition_error("SpinConfiguration: bad +1 count");
    for (int j = 0; j < n_spins; ++j) spins_[j] = (j < n_plus) ? 1 : -1;
  }

  int size() const { return static_cast<int>(spins_.size()); }
  int spin(int j) const { return spins_[j]; }
  int plus_count() const { return n_plus_; }
  int spin_sum() const { return 2 * n_plus_ - size(); }
  double magnetization() const { return static_cast<double>(spin_sum()) / size(); }

  void flip(int j) {
    if (spins_[j] > 0) {
      spins_[j] = -1;
      --n_plus_;
    } else {
      spins_[j] = 1;
      ++n_plus_;
    }
  }

 private:
  std::vector<std::int8_t> spins_;
  int n_plus_;
};

inline double hamiltonian(const SpinConfiguration& cfg) {
  const double m = cfg.magnetization();
  return -0.5 * cfg.size() * m * m;
}

namespace detail {

// One spin-level Metropolis step; returns -1/0/+1 for the magnetization move.
// Separate sub-streams drive spin choice, cluster sampling and the acceptance
// uniform, so the classical and p = N chains share acceptance decisions under
// a shared seed.
struct ChainStepper {
  const CwParams& params;
  RngStream spin_stream;
  RngStream cluster_stream;
  RngStream accept_stream;
  std::vector<int> pool;

  ChainStepper(const CwParams& p, const RngStream& base)
      : params(p),
        spin_stream(base.substream(0)),
        cluster_stream(base.substream(1)),
        accept_stream(base.substream(2)),
        pool(static_cast<std::size_t>(p.n_spins)) {}

  int step(SpinConfiguration& cfg) {
    const int n = params.n_spins;
    const int idx = static_cast<int>(spin_stream.uniform_index(n));
    const int s = cfg.spin(idx);
    double delta_h;
    if (!params.batch_size) {
      delta_h = 2.0 * s * (cfg.spin_sum() - s) / static_cast<double>(n);
    } else {
      const int p = *params.batch_size;
      std::iota(pool.begin(), pool.end(), 0);
      std::swap(pool[idx], pool[n - 1]);
      int cluster_sum = 0;
      for (int k = 0; k < p - 1; ++k) {
        const int pick = k + static_cast<int>(cluster_stream.uniform_index(n - 1 - k));
        std::swap(pool[k], pool[pick]);
        cluster_sum += cfg.spin(pool[k]);
      }
      delta_h = 2.0 * s * cluster_sum / static_cast<double>(p);
    }
    const double accept = std::exp(-params.beta * std::max(delta_h, 0.0));
    if (accept_stream.uniform01() < accept) {
      cfg.flip(idx);
      return -s;
    }
    return 0;
  }
};

}  // namespace detail

// Spin-level simulation; records the magnetization after every step
// (entry 0 is the initial state).
inline std::vector<double> simulate_chain(const CwParams& params, double m0, long steps,
                                          const RngStream& stream) {
  params.validate();
  const MagnetizationGrid grid{params.n_spins};
  SpinConfiguration cfg(params.n_spins, grid.index_of(m0));
  detail::ChainStepper stepper(params, stream);
  std::vector<double> trajectory;
  trajectory.reserve(steps + 1);
  trajectory.push_back(cfg.magnetization());
  for (long t = 0; t < steps; ++t) {
    stepper.step(cfg);
    trajectory.push_back(cfg.magnetization());
  }
  return trajectory;
}

// Empirical one-step frequencies per grid state over `trials` independent
// experiments each starting from a fresh configuration with that
// magnetization (spins are exchangeable, so the assignment is irrelevant).
inline std::vector<Rates> empirical_rates(const CwParams& params, long trials,
                                          const RngStream& stream) {
  params.validate();
  if (trials < 1) throw precondition_error("empirical_rates: need at least one trial");
  const int n = params.n_spins;
  std::vector<Rates> out(n + 1);
  for (int i = 0; i <= n; ++i) {
    detail::ChainStepper stepper(params, stream.substream(i));
    long rights = 0, lefts = 0;
    for (long t = 0; t < trials; ++t) {
      SpinConfiguration cfg(n, i);
      const int move = stepper.step(cfg);
      rights += move > 0;
      lefts += move < 0;
    }
    out[i] = {static_cast<double>(rights) / trials, static_cast<double>(lefts) / trials};
  }
  return out;
}

// Trajectory-style aggregation in the alternative protocol: several chains
// run from uniform starts and per-state move fractions are pooled across all
// visits. States never visited report zero rates and zero visits.
struct TrajectoryRates {
  std::vector<Rates> rates;
  std::vector<long> visits;
};

inline TrajectoryRates empirical_rates_trajectory(const CwParams& params, int n_processes,
                                                  long steps, const RngStream& stream) {
  params.validate();
  const int n = params.n_spins;
  std::vector<long> rights(n + 1, 0), lefts(n + 1, 0), visits(n + 1, 0);
  for (int proc = 0; proc < n_processes; ++proc) {
    RngStream sub = stream.substream(proc);
    const int i0 = static_cast<int>(sub.uniform_index(n + 1));
    SpinConfiguration cfg(n, i0);
    detail::ChainStepper stepper(params, sub.substream(0));
    for (long t = 0; t < steps; ++t) {
      const int from = cfg.plus_count();
      const int move = stepper.step(cfg);
      ++visits[from];
      rights[from] += move > 0;
      lefts[from] += move < 0;
    }
  }
  TrajectoryRates out;
  out.rates.resize(n + 1, {0.0, 0.0});
  out.visits = visits;
  for (int i = 0; i <= n; ++i) {
    if (visits[i] > 0)
      out.rates[i] = {static_cast<double>(rights[i]) / visits[i],
                      static_cast<double>(lefts[i]) / visits[i]};
  }
  return out;
}

}  // namespace rbm::cw
