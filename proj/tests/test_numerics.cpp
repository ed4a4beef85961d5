#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rbm/curie_weiss.hpp"
#include "rbm/power_iteration.hpp"
#include "rbm/quadrature.hpp"
#include "rbm/rng.hpp"
#include "rbm/root_finding.hpp"
#include "rbm/stationary.hpp"

using rbm::Quadrature;
using rbm::RngStream;
using rbm::RootBracket;

TEST_CASE("quadrature integrates constants exactly") {
  const Quadrature q(10.0);
  REQUIRE(q.integrate([](double) { return 1.0; }) == Approx(20.0).epsilon(1e-13));
  const Quadrature q2(3.5, 16, 8);
  REQUIRE(q2.integrate([](double) { return 1.0; }) == Approx(7.0).epsilon(1e-13));
}

TEST_CASE("quadrature kills odd integrands") {
  const Quadrature q(7.0);
  const double v = q.integrate([](double x) { return x * std::exp(-x * x); });
  REQUIRE(std::abs(v) < 1e-12);
}

TEST_CASE("quadrature matches the erf closed form for a gaussian") {
  const Quadrature q(10.0);
  const double v = q.integrate([](double x) { return std::exp(-x * x); });
  REQUIRE(v == Approx(oracle::gaussian_integral(10.0)).margin(1e-10));
}

TEST_CASE("quadrature rejects bad configuration and non-finite integrands") {
  REQUIRE_THROWS_AS(Quadrature(-1.0), rbm::precondition_error);
  REQUIRE_THROWS_AS(Quadrature(1.0, 8, 4), rbm::precondition_error);
  const Quadrature q(2.0);
  REQUIRE_THROWS_WITH(q.integrate([](double x) { return 1.0 / (x - x); }),
                      Catch::Contains("node"));
}

TEST_CASE("quadrature converged: doubling nodes barely moves the f1 integrand") {
  for (double sigma : {0.1, 1.0, 5.0}) {
    for (double kappa : {-2.0, 0.5, 2.0}) {
      for (double l_w : {0.5, 1.0, 4.0}) {
        const double r = rbm::stationary::density_radius(sigma, kappa);
        auto f = [=](double x) { return x * rbm::stationary::density_g(x, sigma, kappa, l_w); };
        const double coarse = Quadrature(r, 32, 64).integrate(f);
        const double fine = Quadrature(r, 64, 64).integrate(f);
        REQUIRE(std::abs(fine - coarse) < 1e-9);
      }
    }
  }
}

TEST_CASE("find_root on simple functions") {
  REQUIRE(rbm::find_root([](double x) { return x - 1.0; }, {0.0, 2.0, 1e-12}) ==
          Approx(1.0).margin(1e-11));
  REQUIRE(rbm::find_root([](double x) { return x * x - 2.0; }, {0.0, 2.0, 1e-12}) ==
          Approx(std::sqrt(2.0)).margin(1e-10));
}

TEST_CASE("find_root result does not depend on secant acceleration") {
  auto f = [](double x) { return std::cos(x) - x * x * x; };
  const double a = rbm::find_root(f, {0.0, 2.0, 1e-12}, true);
  const double b = rbm::find_root(f, {0.0, 2.0, 1e-12}, false);
  REQUIRE(a == Approx(b).margin(1e-11));
}

TEST_CASE("find_root error paths") {
  REQUIRE_THROWS_AS(rbm::find_root([](double x) { return x * x + 1.0; }, {0.0, 1.0, 1e-12}),
                    rbm::precondition_error);
  REQUIRE_THROWS_AS(rbm::find_root([](double) { return 0.0; }, {1.0, 0.5, 1e-12}),
                    rbm::precondition_error);
  REQUIRE_THROWS_WITH(
      rbm::find_root([](double x) { return x - 0.3; }, {0.0, 1.0, 1e-300}, false, 5),
      Catch::Contains("bracket"));
}

TEST_CASE("rng streams are deterministic and splittable") {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
  RngStream c = RngStream(42).substream(7);
  RngStream d = RngStream(42).substream(8);
  bool all_equal = true;
  for (int i = 0; i < 16; ++i) all_equal = all_equal && (c.next_u64() == d.next_u64());
  REQUIRE_FALSE(all_equal);
}

TEST_CASE("gaussian draws have the right mean at CLT scale") {
  RngStream s(1);
  double sum = 0.0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) sum += s.gaussian();
  REQUIRE(std::abs(sum / n) < 0.005);
}

TEST_CASE("binomial sampler edge cases and mean") {
  RngStream s(2);
  REQUIRE(s.binomial(0, 0.5) == 0);
  REQUIRE(s.binomial(10, 0.0) == 0);
  REQUIRE(s.binomial(10, 1.0) == 10);
  REQUIRE_THROWS_AS(s.binomial(10, 1.5), rbm::precondition_error);
  REQUIRE_THROWS_AS(s.binomial(-1, 0.5), rbm::precondition_error);

  double sum = 0.0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(s.binomial(9, 0.5));
  REQUIRE(sum / n == Approx(4.5).margin(0.01));

  // non-half q goes through the inversion path for large n
  double sum2 = 0.0;
  for (int i = 0; i < 100'000; ++i) sum2 += static_cast<double>(s.binomial(100, 0.3));
  REQUIRE(sum2 / 100'000 == Approx(30.0).margin(0.25));
}

TEST_CASE("uniform_index stays in range and covers values") {
  RngStream s(3);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) ++seen[s.uniform_index(7)];
  for (int count : seen) REQUIRE(count > 0);
  REQUIRE_THROWS_AS(s.uniform_index(0), rbm::precondition_error);
}

namespace {

rbm::cw::TransitionMatrix two_state_swap() {
  return rbm::cw::TransitionMatrix({1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0});
}

}  // namespace

TEST_CASE("power iteration fixes the identity immediately") {
  rbm::cw::TransitionMatrix eye({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0});
  std::vector<double> v0{0.2, 0.5, 0.3};
  const auto res = rbm::power_iterate(eye, v0, 1e-9, 100);
  REQUIRE(res.iterations == 1);
  for (std::size_t i = 0; i < v0.size(); ++i) REQUIRE(res.distribution[i] == Approx(v0[i]));
}

TEST_CASE("power iteration reports the period-2 swap chain") {
  try {
    rbm::power_iterate(two_state_swap(), {1.0, 0.0}, 1e-9, 50);
    FAIL("expected non-convergence");
  } catch (const rbm::power_iteration_limit& e) {
    REQUIRE(e.last_iterate.size() == 2);
    REQUIRE(e.last_iterate[0] + e.last_iterate[1] == Approx(1.0));
  }
}

TEST_CASE("power iteration matches a dense linear solve on a CW matrix") {
  const rbm::cw::CwParams params{60, 1.5, 10};
  const auto m = rbm::cw::build_matrix(params);
  std::vector<double> v0(m.size(), 1.0 / m.size());
  const auto res = rbm::cw::invariant_distribution(m, v0, 1e-12, 2'000'000);

  const auto ref = oracle::invariant_by_linear_solve(
      [&m](std::size_t i, std::size_t j) { return m.at(i, j); }, m.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    REQUIRE(res.distribution[i] == Approx(ref[i]).margin(1e-8));
    sum += res.distribution[i];
  }
  REQUIRE(sum == Approx(1.0).margin(1e-12));

  // returned vector is a fixed point in L1
  std::vector<double> next;
  m.apply_left(res.distribution, next);
  double l1 = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) l1 += std::abs(next[i] - res.distribution[i]);
  REQUIRE(l1 < m.size() * 1e-12);
}

TEST_CASE("power iteration rejects bad inputs") {
  rbm::cw::TransitionMatrix bad({0.5, 0.0}, {0.0, 0.3}, {0.4, 0.4});
  REQUIRE_THROWS_AS(rbm::cw::invariant_distribution(bad, {0.5, 0.5}, 1e-9, 10),
                    rbm::precondition_error);
  REQUIRE_THROWS_AS(rbm::power_iterate(two_state_swap(), {0.9, 0.3}, 1e-9, 10),
                    rbm::precondition_error);
}
