#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "rbm/rng.hpp"

namespace rbm {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
};

// Monte-Carlo mean with standard error. Samples are split into fixed-size
// chunks, chunk c drawing from base.substream(c); partial sums are combined
// in chunk order, so the estimate does not depend on the number of threads.
template <class F>
McEstimate mc_estimate(const RngStream& base, std::uint64_t samples, F&& f, unsigned threads = 0) {
  constexpr std::uint64_t kChunk = 1u << 16;
  if (samples == 0) return {0.0, 0.0, 0};
  const std::uint64_t n_chunks = (samples + kChunk - 1) / kChunk;
  std::vector<double> sums(n_chunks, 0.0), sqs(n_chunks, 0.0);

  auto run_chunk = [&](std::uint64_t c) {
    RngStream stream = base.substream(c);
    const std::uint64_t begin = c * kChunk;
    const std::uint64_t end = std::min(begin + kChunk, samples);
    double s = 0.0, s2 = 0.0;
    for (std::uint64_t i = begin; i < end; ++i) {
      const double v = f(stream);
      s += v;
      s2 += v * v;
    }
    sums[c] = s;
    sqs[c] = s2;
  };

  if (threads == 0) threads = std::thread::hardware_concurrency();
  if (threads <= 1 || n_chunks <= 1) {
    for (std::uint64_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    const unsigned n_workers = static_cast<unsigned>(std::min<std::uint64_t>(threads, n_chunks));
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t c = w; c < n_chunks; c += n_workers) run_chunk(c);
      });
    }
    for (auto& t : pool) t.join();
  }

  double sum = 0.0, sq = 0.0;
  for (std::uint64_t c = 0; c < n_chunks; ++c) {
    sum += sums[c];
    sq += sqs[c];
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  double var = (sq - n * mean * mean) / (n - 1.0);
  if (!(var > 0.0) || samples < 2) var = 0.0;
  return {mean, std::sqrt(var / n), samples};
}

}  // namespace rbm
