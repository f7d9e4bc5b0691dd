#include "gzero/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string_view>

namespace gzero {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::size_t Rng::categorical_logits(std::span<const double> logits, double temperature) {
  if (logits.empty()) throw std::invalid_argument("categorical_logits: empty logits");
  std::vector<double> lp = log_softmax(logits, temperature);
  double u = uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    acc += std::exp(lp[i]);
    if (u < acc) return i;
  }
  return lp.size() - 1;
}

Rng Rng::fork(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x51ed2701)));
}

std::vector<double> log_softmax(std::span<const double> logits, double temperature) {
  if (temperature <= 0.0) throw std::invalid_argument("log_softmax: temperature must be > 0");
  if (logits.empty()) throw std::invalid_argument("log_softmax: empty logits");
  std::vector<double> out(logits.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) mx = std::max(mx, v / temperature);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = logits[i] / temperature - mx;
    sum += std::exp(out[i]);
  }
  double lse = std::log(sum);
  for (double& v : out) v -= lse;
  return out;
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t basis) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = basis;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

}  // namespace gzero
