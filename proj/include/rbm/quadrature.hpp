#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rbm/errors.hpp"

namespace rbm {

// Nodes and weights of the n-point Gauss-Legendre rule on [-1,1],
// Newton iteration on the Legendre recurrence.
inline void gauss_legendre_rule(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw precondition_error("gauss_legendre_rule: need n >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 1; i <= m; ++i) {
    double z = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    nodes[i - 1] = -z;
    nodes[n - i] = z;
    weights[i - 1] = 2.0 / ((1.0 - z * z) * pp * pp);
    weights[n - i] = weights[i - 1];
  }
}

// Composite Gauss-Legendre rule on [-R, R]: `panels` equal panels with
// `points_per_panel` nodes each. All node positions and weights are
// precomputed at construction, so integration is a plain weighted sum.
class Quadrature {
 public:
  explicit Quadrature(double half_width, int points_per_panel = 32, int panels = 64)
      : half_width_(half_width), points_per_panel_(points_per_panel), panels_(panels) {
    if (!(half_width > 0.0)) throw precondition_error("Quadrature: half_width must be positive");
    if (points_per_panel < 16) throw precondition_error("Quadrature: need at least 16 points per panel");
    if (panels < 1) throw precondition_error("Quadrature: need at least one panel");
    std::vector<double> base_x, base_w;
    gauss_legendre_rule(points_per_panel, base_x, base_w);
    const double panel_width = 2.0 * half_width / panels;
    nodes_.reserve(static_cast<std::size_t>(points_per_panel) * panels);
    weights_.reserve(nodes_.capacity());
    for (int p = 0; p < panels; ++p) {
      const double a = -half_width + p * panel_width;
      const double mid = a + 0.5 * panel_width;
      for (int k = 0; k < points_per_panel; ++k) {
        nodes_.push_back(mid + 0.5 * panel_width * base_x[k]);
        weights_.push_back(0.5 * panel_width * base_w[k]);
      }
    }
  }

  double half_width() const { return half_width_; }
  int points_per_panel() const { return points_per_panel_; }
  int panels() const { return panels_; }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }

  template <class F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const double v = f(nodes_[i]);
      if (!std::isfinite(v)) {
        throw numerical_error("integrate: integrand not finite at node x = " + std::to_string(nodes_[i]));
      }
      acc += weights_[i] * v;
    }
    return acc;
  }

 private:
  double half_width_;
  int points_per_panel_;
  int panels_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

}  // namespace rbm
