#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "rbm/errors.hpp"

namespace rbm {

namespace detail {

// splitmix64 finalizer; full-period 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based random stream: output i is a hash of (key, i), so streams are
// stateless apart from the counter and sub-streams can be split off
// reproducibly at any point. Identical seed => identical sequence.
// Not thread-safe; derive one sub-stream per worker instead of sharing.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(derive_key(seed, stream)), counter_(0) {}

  // Independent stream addressed by (this stream, index).
  RngStream substream(std::uint64_t index) const {
    RngStream s(0);
    s.key_ = detail::mix64(key_ ^ detail::mix64(0x9E3779B97F4A7C15ull + index));
    s.counter_ = 0;
    return s;
  }

  std::uint64_t next_u64() {
    counter_ += 0x9E3779B97F4A7C15ull;
    return detail::mix64(key_ + counter_);
  }

  // Uniform on the open interval (0,1); never returns 0 or 1.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform over {0, ..., n-1}, unbiased (rejection sampling).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw precondition_error("uniform_index: n must be positive");
    if ((n & (n - 1)) == 0) return next_u64() & (n - 1);
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % n;
  }

  // Standard normal via Box-Muller; second value of each pair is cached.
  double gaussian() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  // Binomial(n, q). q = 1/2 uses popcounts of raw words; small n sums
  // Bernoulli draws; large n walks the inverse CDF from the floor of n*q.
  std::int64_t binomial(std::int64_t n, double q) {
    if (n < 0) throw precondition_error("binomial: n must be >= 0");
    if (!(q >= 0.0 && q <= 1.0)) throw precondition_error("binomial: q must lie in [0,1]");
    if (n == 0 || q == 0.0) return 0;
    if (q == 1.0) return n;
    if (q == 0.5) {
      std::int64_t c = 0, left = n;
      while (left >= 64) {
        c += std::popcount(next_u64());
        left -= 64;
      }
      if (left > 0) c += std::popcount(next_u64() & ((std::uint64_t{1} << left) - 1));
      return c;
    }
    if (n <= 64) {
      std::int64_t c = 0;
      for (std::int64_t i = 0; i < n; ++i) c += (uniform01() < q) ? 1 : 0;
      return c;
    }
    return binomial_inversion(n, q);
  }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return detail::mix64(detail::mix64(seed) ^ detail::mix64(stream ^ 0xD1B54A32D192ED03ull));
  }

  // Inverse-CDF scan with the pmf recurrence; pmf(0) taken in log space to
  // dodge underflow. O(n q) expected, which is fine at the sizes used here.
  std::int64_t binomial_inversion(std::int64_t n, double q) {
    const double u = uniform01();
    double p = std::exp(n * std::log1p(-q));
    double cdf = p;
    std::int64_t k = 0;
    const double ratio = q / (1.0 - q);
    while (cdf < u && k < n) {
      ++k;
      p *= ratio * static_cast<double>(n - k + 1) / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }

  std::uint64_t key_;
  std::uint64_t counter_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace rbm
