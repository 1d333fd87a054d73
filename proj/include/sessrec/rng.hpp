#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sessrec {

// Deterministic random source. Normal and uniform draws are implemented on
// top of raw mt19937_64 output so sequences do not depend on the standard
// library's distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Derive an independent seed for a substream (per-session, per-restart).
  static uint64_t derive(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int64_t uniform_int(int64_t n) {
    return static_cast<int64_t>(uniform() * static_cast<double>(n));
  }

  // Uniform integer in [lo, hi] inclusive.
  int64_t uniform_range(int64_t lo, int64_t hi) {
    return lo + uniform_int(hi - lo + 1);
  }

  // Box-Muller; one fresh draw per call.
  double normal(double mean, double stddev) {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + stddev * z;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      int64_t j = uniform_int(i + 1);
      std::swap(v[i], v[static_cast<size_t>(j)]);
    }
  }

  // Draw k distinct elements from pool without replacement (partial
  // Fisher-Yates on a copy); order of draws is part of the result.
  std::vector<int64_t> sample_without_replacement(
      const std::vector<int64_t>& pool, int64_t k) {
    std::vector<int64_t> copy = pool;
    std::vector<int64_t> out;
    out.reserve(static_cast<size_t>(k));
    int64_t n = static_cast<int64_t>(copy.size());
    for (int64_t i = 0; i < k; ++i) {
      int64_t j = i + uniform_int(n - i);
      std::swap(copy[static_cast<size_t>(i)], copy[static_cast<size_t>(j)]);
      out.push_back(copy[static_cast<size_t>(i)]);
    }
    return out;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace sessrec
