#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rbm/errors.hpp"
#include "rbm/rng.hpp"

// Time-discretized interacting-particle simulators for the double-well model
// (and any 1d pair potential): full pairwise Euler-Maruyama, the random-batch
// scheme, the mean-field random-batch sampler, and the effective dynamics
// whose diffusion carries the batch-noise correction.

namespace rbm::ps {

struct PotentialPair {
  std::function<double(double)> grad_u;
  std::function<double(double)> grad_w;
  std::function<double(double)> grad_w_squared;  // (grad W)^2, used by the generic Sigma path
  bool quadratic_w = false;
  double l_w = 0.0;

  // U(x) = x^4/4 - x^2/2, W(x) = L_W x^2/2, with the O(N) quadratic-W paths enabled.
  static PotentialPair double_well(double l_w) {
    PotentialPair p;
    p.grad_u = [](double x) { return x * x * x - x; };
    p.grad_w = [l_w](double x) { return l_w * x; };
    p.grad_w_squared = [l_w](double x) { return l_w * l_w * x * x; };
    p.quadratic_w = true;
    p.l_w = l_w;
    return p;
  }

  // Same potentials but without the quadratic-W flag, forcing the generic
  // O(N^2) paths (used to cross-check the fast paths and for timing).
  static PotentialPair double_well_generic(double l_w) {
    PotentialPair p = double_well(l_w);
    p.quadratic_w = false;
    return p;
  }
};

struct SimConfig {
  int n_particles;
  double delta;       // time step of the discrete schemes; model parameter of (Eff)
  int batch_size;     // p
  double sigma;       // diffusion coefficient; 0 is allowed for deterministic tests
  PotentialPair potentials;
  double dt_inner = 0.0;  // integrator step of the effective dynamics; 0 => delta/10

  double effective_dt() const { return dt_inner > 0.0 ? dt_inner : delta / 10.0; }

  void validate(bool needs_batch) const {
    if (n_particles < 1) throw precondition_error("SimConfig: need at least one particle");
    // delta = 0 is allowed for the effective dynamics (no batch correction)
    if (!(delta >= 0.0)) throw precondition_error("SimConfig: delta must be >= 0");
    if (!(sigma >= 0.0)) throw precondition_error("SimConfig: sigma must be >= 0");
    if (needs_batch && batch_size < 2)
      throw precondition_error("SimConfig: batch size must be >= 2");
  }
};

// Particle positions with cached mean and population variance.
class ParticleEnsemble {
 public:
  explicit ParticleEnsemble(std::vector<double> positions) : positions_(std::move(positions)) {
    if (positions_.empty()) throw precondition_error("ParticleEnsemble: empty");
    refresh_stats();
  }

  std::span<const double> positions() const { return positions_; }
  std::vector<double>& mutable_positions() { return positions_; }
  int size() const { return static_cast<int>(positions_.size()); }
  double mean() const { return mean_; }
  double variance() const { return variance_; }

  void refresh_stats() {
    const auto n = static_cast<double>(positions_.size());
    double s = 0.0;
    for (double x : positions_) s += x;
    mean_ = s / n;
    double v = 0.0;
    for (double x : positions_) v += (x - mean_) * (x - mean_);
    variance_ = v / n;
  }

 private:
  std::vector<double> positions_;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

// Uniform random partition of {0..N-1} into N/p consecutive blocks of the
// shuffled order.
struct BatchPartition {
  std::vector<int> order;
  int block_size;

  int block_count() const { return static_cast<int>(order.size()) / block_size; }
  std::span<const int> block(int b) const {
    return std::span<const int>(order).subspan(static_cast<std::size_t>(b) * block_size,
                                               block_size);
  }
};

inline BatchPartition sample_partition(int n, int p, RngStream& stream) {
  if (p < 1 || n < 1 || n % p != 0)
    throw precondition_error("sample_partition: batch size must divide the particle count");
  BatchPartition part;
  part.block_size = p;
  part.order.resize(n);
  std::iota(part.order.begin(), part.order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(stream.uniform_index(i + 1));
    std::swap(part.order[i], part.order[j]);
  }
  return part;
}

// ---- interaction forces -------------------------------------------------

// (1/(N-1)) sum_{j != i} grad W(x_i - x_j), plain pairwise loop.
inline std::vector<double> full_forces_naive(std::span<const double> x,
                                             const PotentialPair& pot) {
  const int n = static_cast<int>(x.size());
  std::vector<double> f(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i) s += pot.grad_w(x[i] - x[j]);
    }
    f[i] = s / (n - 1);
  }
  return f;
}

// Quadratic-W identity: sum reduces to L_W (x_i - mean of the others).
inline std::vector<double> full_forces(const ParticleEnsemble& ens, const PotentialPair& pot) {
  const auto x = ens.positions();
  const int n = ens.size();
  if (!pot.quadratic_w || n < 2) return full_forces_naive(x, pot);
  const double total = ens.mean() * n;
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) f[i] = pot.l_w * (x[i] - (total - x[i]) / (n - 1));
  return f;
}

// (1/(p-1)) sum over the particle's block, excluding itself.
inline std::vector<double> batch_forces(std::span<const double> x, const BatchPartition& part,
                                        const PotentialPair& pot) {
  const int n = static_cast<int>(x.size());
  const int p = part.block_size;
  std::vector<double> f(n, 0.0);
  for (int b = 0; b < part.block_count(); ++b) {
    const auto blk = part.block(b);
    for (int a = 0; a < p; ++a) {
      const int i = blk[a];
      double s = 0.0;
      for (int c = 0; c < p; ++c) {
        if (c != a) s += pot.grad_w(x[i] - x[blk[c]]);
      }
      f[i] = s / (p - 1);
    }
  }
  return f;
}

namespace detail {

inline void apply_update(ParticleEnsemble& ens, const std::vector<double>& interaction,
                         const SimConfig& cfg, RngStream& stream) {
  auto& x = ens.mutable_positions();
  const double noise_scale = std::sqrt(2.0 * cfg.sigma * cfg.delta);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] += -cfg.delta * cfg.potentials.grad_u(x[i]) - cfg.delta * interaction[i] +
            noise_scale * stream.gaussian();
    if (!std::isfinite(x[i]))
      throw numerical_error("particle position diverged; delta = " + std::to_string(cfg.delta) +
                            " is too large for this potential");
  }
  ens.refresh_stats();
}

}  // namespace detail

// One Euler-Maruyama step of (the discretization of) the full pairwise system.
inline void step_full(ParticleEnsemble& ens, const SimConfig& cfg, RngStream& stream) {
  cfg.validate(false);
  detail::apply_update(ens, full_forces(ens, cfg.potentials), cfg, stream);
}

// One step of the random-batch scheme: fresh uniform partition, interactions
// within blocks only. O(N p) work per step.
inline void step_rb(ParticleEnsemble& ens, const SimConfig& cfg, RngStream& stream) {
  cfg.validate(true);
  const BatchPartition part = sample_partition(ens.size(), cfg.batch_size, stream);
  detail::apply_update(ens, batch_forces(ens.positions(), part, cfg.potentials), cfg, stream);
}

// Mean-field random-batch step: each particle meets p-1 companions drawn
// i.i.d. (with replacement) from the current ensemble, the empirical-law
// stand-in for the law of the process. Self-draws are allowed; the bias is
// O(1/N).
inline void step_mean_field_rb(ParticleEnsemble& ens, const SimConfig& cfg, RngStream& stream) {
  cfg.validate(true);
  const int n = ens.size();
  const int p = cfg.batch_size;
  if (n < p) throw precondition_error("step_mean_field_rb: need N >= p");
  std::vector<double> snapshot(ens.positions().begin(), ens.positions().end());
  std::vector<double> f(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k < p - 1; ++k) {
      const int j = static_cast<int>(stream.uniform_index(n));
      s += cfg.potentials.grad_w(snapshot[i] - snapshot[j]);
    }
    f[i] = s / (p - 1);
  }
  detail::apply_update(ens, f, cfg, stream);
}

// Batch-noise variance Sigma(x_i, rho) against the empirical law; collapses
// to the x-independent L_W^2 Var(rho) when W is quadratic.
inline std::vector<double> effective_sigma_correction(const ParticleEnsemble& ens,
                                                      const PotentialPair& pot) {
  const int n = ens.size();
  if (pot.quadratic_w)
    return std::vector<double>(n, pot.l_w * pot.l_w * ens.variance());
  const auto x = ens.positions();
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    double m1 = 0.0, m2 = 0.0;
    for (int j = 0; j < n; ++j) {
      m1 += pot.grad_w(x[i] - x[j]);
      m2 += pot.grad_w_squared(x[i] - x[j]);
    }
    out[i] = m2 / n - (m1 / n) * (m1 / n);
  }
  return out;
}

// One inner step of the effective dynamics: Euler-Maruyama with step
// dt_inner on the SDE whose diffusion is (2 sigma + delta/(p-1) Sigma)^{1/2}.
// delta enters only through the coefficient, not the integrator step.
inline void step_effective(ParticleEnsemble& ens, const SimConfig& cfg, RngStream& stream) {
  cfg.validate(true);
  const int n = ens.size();
  const auto sigma_corr = effective_sigma_correction(ens, cfg.potentials);
  const double dt = cfg.effective_dt();
  if (!(dt > 0.0))
    throw precondition_error("step_effective: set dt_inner when delta is 0");
  const double mean = ens.mean();
  const auto x_old = ens.positions();
  std::vector<double> conv(n);
  if (cfg.potentials.quadratic_w) {
    for (int i = 0; i < n; ++i) conv[i] = cfg.potentials.l_w * (x_old[i] - mean);
  } else {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += cfg.potentials.grad_w(x_old[i] - x_old[j]);
      conv[i] = s / n;
    }
  }
  auto& x = ens.mutable_positions();
  for (int i = 0; i < n; ++i) {
    double corr = sigma_corr[i];
    if (corr < -1e-12)
      throw numerical_error("step_effective: negative batch-noise variance " +
                            std::to_string(corr));
    corr = std::max(corr, 0.0);
    const double diffusion = 2.0 * cfg.sigma + cfg.delta / (cfg.batch_size - 1) * corr;
    x[i] += dt * (-cfg.potentials.grad_u(x[i]) - conv[i]) +
            std::sqrt(diffusion * dt) * stream.gaussian();
    if (!std::isfinite(x[i]))
      throw numerical_error("particle position diverged; dt_inner = " + std::to_string(dt) +
                            " is too large for this potential");
  }
  ens.refresh_stats();
}

// ---- driver ---------------------------------------------------------------

enum class Scheme { full, rb, mean_field_rb, effective };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::full: return "full";
    case Scheme::rb: return "rb";
    case Scheme::mean_field_rb: return "mean_field_rb";
    default: return "effective";
  }
}

struct InitSpec {
  enum class Kind { point, gaussian, two_point } kind = Kind::point;
  double a = 0.0;  // point value / gaussian mean / two-point magnitude
  double b = 1.0;  // gaussian standard deviation
};

inline ParticleEnsemble make_ensemble(int n, const InitSpec& init, RngStream& stream) {
  std::vector<double> x(n);
  switch (init.kind) {
    case InitSpec::Kind::point:
      for (double& v : x) v = init.a;
      break;
    case InitSpec::Kind::gaussian:
      for (double& v : x) v = init.a + init.b * stream.gaussian();
      break;
    case InitSpec::Kind::two_point:
      for (double& v : x) v = (stream.uniform01() < 0.5) ? -init.a : init.a;
      break;
  }
  return ParticleEnsemble(std::move(x));
}

struct TrajectoryPoint {
  long step;
  double time;
  double mean;
  double variance;
  double diffusion;  // 2 sigma, plus the batch-noise correction for (Eff)
};

inline std::vector<TrajectoryPoint> run(Scheme scheme, const SimConfig& cfg, long steps,
                                        const InitSpec& init, const RngStream& stream,
                                        long record_every = 1) {
  cfg.validate(scheme != Scheme::full);
  if (record_every < 1) throw precondition_error("run: record_every must be >= 1");
  RngStream init_stream = stream.substream(0);
  RngStream step_stream = stream.substream(1);
  ParticleEnsemble ens = make_ensemble(cfg.n_particles, init, init_stream);
  const double dt = (scheme == Scheme::effective) ? cfg.effective_dt() : cfg.delta;

  auto diffusion_now = [&]() {
    if (scheme != Scheme::effective) return 2.0 * cfg.sigma;
    const auto corr = effective_sigma_correction(ens, cfg.potentials);
    double avg = 0.0;
    for (double c : corr) avg += c;
    avg /= static_cast<double>(corr.size());
    return 2.0 * cfg.sigma + cfg.delta / (cfg.batch_size - 1) * avg;
  };

  std::vector<TrajectoryPoint> out;
  out.push_back({0, 0.0, ens.mean(), ens.variance(), diffusion_now()});
  for (long t = 1; t <= steps; ++t) {
    switch (scheme) {
      case Scheme::full: step_full(ens, cfg, step_stream); break;
      case Scheme::rb: step_rb(ens, cfg, step_stream); break;
      case Scheme::mean_field_rb: step_mean_field_rb(ens, cfg, step_stream); break;
      case Scheme::effective: step_effective(ens, cfg, step_stream); break;
    }
    if (t % record_every == 0 || t == steps)
      out.push_back({t, t * dt, ens.mean(), ens.variance(), diffusion_now()});
  }
  return out;
}

}  // namespace rbm::ps
