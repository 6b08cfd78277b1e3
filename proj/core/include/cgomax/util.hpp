// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cgomax {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};

inline double sq(double x) { return x * x; }

// FNV-1a, used for content hashes of grids, configs and cache blobs.
inline uint64_t fnv1a(const void* data, size_t n, uint64_t seed = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t hash_doubles(const std::vector<double>& v, uint64_t seed = 0xcbf29ce484222325ull) {
  return v.empty() ? seed : fnv1a(v.data(), v.size() * sizeof(double), seed);
}

inline uint64_t hash_combine(uint64_t a, uint64_t b) {
  return fnv1a(&b, sizeof(b), a);
}

// C^inf bump on (-1,1), identically zero outside.
inline double bump(double s) {
  double t = 1.0 - s * s;
  return t > 0.0 ? std::exp(1.0 - 1.0 / t) : 0.0;
}

// Polynomial smoothstep of order 7: 0 for s<=0, 1 for s>=1, C^3 joins.
inline double smoothstep7(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  double s2 = s * s;
  return s2 * s2 * (35.0 - 84.0 * s + 70.0 * s2 - 20.0 * s2 * s);
}

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope: bad input");
  double n = double(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

using Rng = std::mt19937_64;

inline double urand(Rng& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

// Maps [0, n) over up to `jobs` threads. jobs<=1 runs inline.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  jobs = std::min(jobs, n);
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace cgomax
