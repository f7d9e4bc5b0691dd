#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace gzero {

// Deterministic random stream. All sampling in the project goes through this
// wrapper instead of <random> distributions, whose output is
// implementation-defined; mt19937_64 itself is pinned by the standard, so
// seeded runs are byte-identical across compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
  }

  // Sample from softmax(logits / temperature) by inverse CDF.
  std::size_t categorical_logits(std::span<const double> logits, double temperature = 1.0);

  // Derive an independent child stream; same (seed, stream) -> same child.
  Rng fork(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

// Log-softmax of logits / temperature, numerically stable.
std::vector<double> log_softmax(std::span<const double> logits, double temperature = 1.0);

// FNV-1a over bytes; used for stable string hashing and parameter digests.
std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t basis = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(std::string_view s);

}  // namespace gzero
