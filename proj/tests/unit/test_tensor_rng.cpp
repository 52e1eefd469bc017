#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "prista/rng.hpp"
#include "prista/tensor.hpp"

using namespace prista;

TEST_SUITE("tensor") {
  TEST_CASE("shape and data length agree") {
    Tensor t({2, 3, 4});
    CHECK(t.size() == 24);
    CHECK(t.rank() == 3);
    CHECK_THROWS_AS(Tensor({2, 0}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1.0, 2.0, 3.0}), std::invalid_argument);
  }

  TEST_CASE("fill, indexing, reshape") {
    Tensor t = Tensor::full({2, 2}, 0.5);
    CHECK(t.at(1, 1) == 0.5);
    t.at(0, 1) = 2.0;
    CHECK(t[1] == 2.0);
    Tensor r = t.reshaped({4});
    CHECK(r[1] == 2.0);
    CHECK_THROWS_AS(t.reshaped({3}), std::invalid_argument);
  }

  TEST_CASE("f32 tag keeps values float-representable") {
    Tensor t = Tensor::from_data({2}, {0.1, 1.0 / 3.0}, DType::f32);
    for (std::int64_t i = 0; i < t.size(); ++i) {
      CHECK(t[i] == static_cast<double>(static_cast<float>(t[i])));
    }
    Tensor wide = t.astype(DType::f64);
    CHECK(wide[0] == t[0]);
  }

  TEST_CASE("finiteness check") {
    Tensor t = Tensor::zeros({3});
    CHECK(t.all_finite());
    t[1] = std::nan("");
    CHECK_FALSE(t.all_finite());
  }
}

TEST_SUITE("rng") {
  TEST_CASE("same seed and call sequence reproduces bit-identically") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42), d(42);
    for (int i = 0; i < 100; ++i) {
      CHECK(c.uniform() == d.uniform());
      CHECK(c.normal() == d.normal());
    }
  }

  TEST_CASE("known stream values stay frozen") {
    // Frozen outputs of the documented splitmix64-counter scheme; a change
    // here silently breaks every stored seed.
    Rng r(1);
    CHECK(r.next_u64() == Rng::mix(1 + 0x9E3779B97F4A7C15ULL));
    Rng r2(0xDEADBEEFULL);
    const std::uint64_t first = r2.next_u64();
    Rng r3(0xDEADBEEFULL);
    CHECK(first == r3.next_u64());
  }

  TEST_CASE("uniform range and rough moments") {
    Rng r(7);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = r.uniform();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      sum += u;
      sum2 += u * u;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean - 0.5) < 0.005);
    CHECK(std::abs(var - 1.0 / 12.0) < 0.005);
  }

  TEST_CASE("normal has unit variance") {
    Rng r(11);
    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double z = r.normal();
      sum += z;
      sum2 += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sum2 / n - 1.0) < 0.02);
  }

  TEST_CASE("derive gives distinct substreams") {
    const std::uint64_t s = 99;
    CHECK(Rng::derive(s, "a") != Rng::derive(s, "b"));
    CHECK(Rng::derive(s, 0) != Rng::derive(s, 1));
    CHECK(Rng::derive(s, "a") == Rng::derive(s, "a"));
  }
}
