#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gzero/rng.hpp"

using gzero::Rng;
using gzero::fnv1a64;
using gzero::log_softmax;

TEST_CASE("seeded streams are reproducible and distinct") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff_from_c = false;
  for (int i = 0; i < 64; ++i) {
    const auto x = a.next_u64();
    all_equal = all_equal && (x == b.next_u64());
    any_diff_from_c = any_diff_from_c || (x != c.next_u64());
  }
  CHECK(all_equal);
  CHECK(any_diff_from_c);
}

TEST_CASE("uniform01 stays in [0,1)") {
  Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("fork produces an independent but deterministic stream") {
  Rng a(5), b(5);
  Rng fa = a.fork(3), fb = b.fork(3);
  CHECK(fa.next_u64() == fb.next_u64());
  Rng other = a.fork(4);
  CHECK(fa.next_u64() != other.next_u64());
}

TEST_CASE("log_softmax normalizes and respects temperature") {
  std::vector<double> logits = {1.0, 2.0, 3.0};
  auto ls = log_softmax(logits);
  double total = 0.0;
  for (double v : ls) total += std::exp(v);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  // uniform logits at any temperature -> uniform distribution
  std::vector<double> flat = {4.0, 4.0, 4.0, 4.0};
  for (double v : log_softmax(flat, 0.7)) CHECK(v == doctest::Approx(-std::log(4.0)));
  // temperature scaling sharpens: higher logit gains mass as tau drops
  auto cold = log_softmax(logits, 0.25);
  CHECK(cold[2] > ls[2]);
  CHECK_THROWS_AS((void)log_softmax(logits, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)log_softmax(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("categorical sampling tracks the softmax distribution") {
  std::vector<double> logits = {0.0, std::log(3.0)};  // p = [0.25, 0.75]
  Rng r(123);
  int ones = 0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) ones += r.categorical_logits(logits);
  const double freq = static_cast<double>(ones) / n;
  CHECK(freq == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("categorical with near-deterministic logits picks the peak") {
  std::vector<double> logits = {-100.0, 0.0, -100.0};
  Rng r(9);
  for (int i = 0; i < 100; ++i) CHECK(r.categorical_logits(logits) == 1);
}

TEST_CASE("normal deviates have roughly standard moments") {
  Rng r(2024);
  double sum = 0.0, sq = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.05));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("fnv1a64 matches published reference digests") {
  // Reference values for the 64-bit FNV-1a test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}
