#include <cmath>

#include "doctest.h"
#include "prista/fft.hpp"
#include "prista/rng.hpp"
#include "support/naive_dft.hpp"

using namespace prista;

TEST_SUITE("fft") {
  TEST_CASE("delta image transforms to the flat unitary spectrum") {
    Tensor re = Tensor::zeros({4, 4}), im = Tensor::zeros({4, 4});
    re.at(0, 0) = 1.0;
    fft2_unitary(re, im, false);
    for (std::int64_t i = 0; i < 16; ++i) {
      CHECK(re[i] == doctest::Approx(0.25).epsilon(1e-14));
      CHECK(std::abs(im[i]) < 1e-14);
    }
  }

  TEST_CASE("constant image concentrates at DC") {
    const double c = 0.37;
    Tensor re = Tensor::full({32, 32}, c), im = Tensor::zeros({32, 32});
    fft2_unitary(re, im, false);
    CHECK(re.at(0, 0) == doctest::Approx(c * 32.0).epsilon(1e-13));
    re.at(0, 0) = 0.0;
    CHECK(re.max_abs() < 1e-12);
    CHECK(im.max_abs() < 1e-12);
  }

  TEST_CASE("round trip and Parseval on random 8x8") {
    Rng rng(5);
    Tensor re = test::random_tensor({8, 8}, rng);
    Tensor im = test::random_tensor({8, 8}, rng);
    const Tensor re0 = re, im0 = im;
    const double norm0 = std::sqrt(re.norm2() * re.norm2() + im.norm2() * im.norm2());
    fft2_unitary(re, im, false);
    const double norm1 = std::sqrt(re.norm2() * re.norm2() + im.norm2() * im.norm2());
    CHECK(std::abs(norm1 - norm0) < 1e-12);
    fft2_unitary(re, im, true);
    for (std::int64_t i = 0; i < re.size(); ++i) {
      CHECK(std::abs(re[i] - re0[i]) < 1e-12);
      CHECK(std::abs(im[i] - im0[i]) < 1e-12);
    }
  }

  TEST_CASE("matches the independent O(N^2) DFT") {
    Rng rng(17);
    Tensor re = test::random_tensor({8, 8}, rng);
    Tensor im = test::random_tensor({8, 8}, rng);
    Tensor nre, nim;
    test::naive_dft2(re, im, nre, nim, false);
    Tensor fre = re, fim = im;
    fft2_unitary(fre, fim, false);
    for (std::int64_t i = 0; i < re.size(); ++i) {
      CHECK(std::abs(fre[i] - nre[i]) < 1e-12);
      CHECK(std::abs(fim[i] - nim[i]) < 1e-12);
    }
  }

  TEST_CASE("batch dims transform independently") {
    Rng rng(23);
    Tensor re = test::random_tensor({3, 8, 8}, rng);
    Tensor im = test::random_tensor({3, 8, 8}, rng);
    Tensor bre = re, bim = im;
    fft2_unitary(bre, bim, false);
    for (std::int64_t j = 0; j < 3; ++j) {
      Tensor sre({8, 8}), sim({8, 8});
      for (std::int64_t i = 0; i < 64; ++i) {
        sre[i] = re[j * 64 + i];
        sim[i] = im[j * 64 + i];
      }
      fft2_unitary(sre, sim, false);
      for (std::int64_t i = 0; i < 64; ++i) {
        CHECK(bre[j * 64 + i] == sre[i]);
        CHECK(bim[j * 64 + i] == sim[i]);
      }
    }
  }

  TEST_CASE("rejects non-power-of-two extents") {
    Tensor re = Tensor::zeros({6, 6}), im = Tensor::zeros({6, 6});
    CHECK_THROWS_AS(fft2_unitary(re, im, false), std::invalid_argument);
  }
}
