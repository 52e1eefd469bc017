#include <cmath>

#include "doctest.h"
#include "prista/ops.hpp"
#include "prista/rng.hpp"
#include "support/gradcheck.hpp"
#include "support/naive_dft.hpp"

using namespace prista;
using test::gradcheck;
using test::random_tensor;

namespace {

// Random values bounded away from relu/abs kinks for finite differences.
Tensor random_nonkink(Shape shape, Rng& rng) {
  Tensor t = random_tensor(std::move(shape), rng);
  for (std::int64_t i = 0; i < t.size(); ++i) {
    if (std::abs(t[i]) < 5e-3) t[i] = t[i] < 0 ? t[i] - 5e-3 : t[i] + 5e-3;
  }
  return t;
}

}  // namespace

TEST_SUITE("tape") {
  TEST_CASE("sum root gives all-ones gradient") {
    Tape tape;
    Rng rng(3);
    Var x = tape.leaf(random_tensor({3, 4}, rng));
    Var root = sum(x);
    tape.backward(root);
    const Tensor& g = tape.grad(x);
    for (std::int64_t i = 0; i < g.size(); ++i) CHECK(g[i] == 1.0);
  }

  TEST_CASE("log of a scalar has gradient 1/s") {
    Tape tape;
    Var s = tape.leaf(Tensor::scalar(2.5));
    Var root = log(s);
    tape.backward(root);
    CHECK(tape.grad(s)[0] == doctest::Approx(1.0 / 2.5).epsilon(1e-15));
  }

  TEST_CASE("non-scalar and detached roots are rejected") {
    Tape tape;
    Var x = tape.leaf(Tensor::ones({2, 2}));
    CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);
    Var c = tape.constant(Tensor::scalar(1.0));
    CHECK_THROWS_AS(tape.backward(c), std::invalid_argument);
  }

  TEST_CASE("vars from different tapes never combine") {
    Tape a, b;
    Var x = a.leaf(Tensor::scalar(1.0));
    Var y = b.leaf(Tensor::scalar(2.0));
    CHECK_THROWS_AS(add(x, y), std::invalid_argument);
  }

  TEST_CASE("constant-only subgraphs record no nodes") {
    Tape tape;
    Var c1 = tape.constant(Tensor::ones({4}));
    Var c2 = tape.constant(Tensor::ones({4}));
    add(c1, c2);
    CHECK(tape.node_count() == 0);
  }

  TEST_CASE("backward does not mutate forward values") {
    Tape tape;
    Rng rng(9);
    Var x = tape.leaf(random_tensor({5}, rng));
    Tensor before = x.value();
    Var root = sum(mul(x, x));
    tape.backward(root);
    for (std::int64_t i = 0; i < before.size(); ++i) CHECK(x.value()[i] == before[i]);
  }

  TEST_CASE("gradient reaches a leaf used twice with both contributions") {
    Tape tape;
    Var x = tape.leaf(Tensor::scalar(3.0));
    Var root = sum(mul(x, x));  // d/dx x^2 = 2x
    tape.backward(root);
    CHECK(tape.grad(x)[0] == doctest::Approx(6.0).epsilon(1e-15));
  }
}

TEST_SUITE("autodiff-elementwise") {
  TEST_CASE("relu and sigmoid pointwise values") {
    Tape tape;
    Var x = tape.leaf(Tensor::from_data({3}, {-1.0, 0.0, 2.0}));
    Var r = relu(x);
    CHECK(r.value()[0] == 0.0);
    CHECK(r.value()[1] == 0.0);
    CHECK(r.value()[2] == 2.0);
    Var s = sigmoid(tape.leaf(Tensor::scalar(0.0)));
    CHECK(s.value()[0] == 0.5);
  }

  TEST_CASE("binary ops match finite differences") {
    Rng rng(21);
    const Tensor a = random_nonkink({2, 3}, rng);
    Tensor b = random_nonkink({2, 3}, rng);
    for (std::int64_t i = 0; i < b.size(); ++i) b[i] += b[i] < 0 ? -0.5 : 0.5;  // keep /b tame

    auto check = [&](const char* name, auto op) {
      auto r = gradcheck(
          [&](Tape& t, const std::vector<Var>& v) { return sum(op(v[0], v[1])); }, {a, b});
      INFO(name, ": ", r.worst);
      CHECK(r.max_rel_err < 1e-6);
    };
    check("add", [](const Var& x, const Var& y) { return add(x, y); });
    check("sub", [](const Var& x, const Var& y) { return sub(x, y); });
    check("mul", [](const Var& x, const Var& y) { return mul(x, y); });
    check("div", [](const Var& x, const Var& y) { return div(x, y); });
  }

  TEST_CASE("unary ops match finite differences") {
    Rng rng(22);
    const Tensor x = random_nonkink({3, 3}, rng);
    Tensor pos = random_tensor({3, 3}, rng, 0.5, 2.0);

    auto check_on = [&](const char* name, const Tensor& in, auto op, double tol = 1e-6) {
      auto r = gradcheck([&](Tape& t, const std::vector<Var>& v) { return sum(op(v[0])); }, {in});
      INFO(name, ": ", r.worst);
      CHECK(r.max_rel_err < tol);
    };
    check_on("neg", x, [](const Var& v) { return neg(v); });
    check_on("relu", x, [](const Var& v) { return relu(v); });
    check_on("sigmoid", x, [](const Var& v) { return sigmoid(v); });
    check_on("abs", x, [](const Var& v) { return abs(v); });
    check_on("log", pos, [](const Var& v) { return log(v); });
    check_on("sqrt", pos, [](const Var& v) { return sqrt(v); });
    check_on("mean", x, [](const Var& v) { return mean(v); });
  }

  TEST_CASE("maximum_scalar gates gradient at the threshold") {
    Rng rng(24);
    Tensor x = random_tensor({4, 4}, rng, -1.0, 1.0);
    for (std::int64_t i = 0; i < x.size(); ++i) {
      if (std::abs(x[i] - 0.2) < 5e-3) x[i] += 0.01;
    }
    auto r = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) { return sum(maximum_scalar(v[0], 0.2)); }, {x});
    CHECK(r.max_rel_err < 1e-6);
  }

  TEST_CASE("complex magnitude matches finite differences away from zero") {
    Rng rng(25);
    Tensor re = random_nonkink({3, 3}, rng);
    Tensor im = random_nonkink({3, 3}, rng);
    auto r = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) { return sum(complex_magnitude(v[0], v[1])); },
        {re, im});
    CHECK(r.max_rel_err < 1e-6);
  }

  TEST_CASE("mul_scalar differentiates through both factor paths") {
    Rng rng(26);
    auto r = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) { return sum(mul_scalar(v[0], v[1])); },
        {random_tensor({3, 4}, rng), Tensor::scalar(0.7)});
    CHECK(r.max_rel_err < 1e-6);
  }
}

TEST_SUITE("autodiff-softthreshold") {
  TEST_CASE("definition values") {
    Tape tape;
    Var v = tape.leaf(Tensor::from_data({2}, {0.5, -0.5}));
    Var th = tape.leaf(Tensor::scalar(0.2));
    Var out = soft_threshold(v, th);
    CHECK(out.value()[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(out.value()[1] == doctest::Approx(-0.3).epsilon(1e-15));
  }

  TEST_CASE("zero threshold is the identity") {
    Tape tape;
    Rng rng(31);
    Tensor x = random_tensor({4, 4}, rng);
    Var out = soft_threshold(tape.leaf(x), tape.leaf(Tensor::scalar(0.0)));
    for (std::int64_t i = 0; i < x.size(); ++i) CHECK(out.value()[i] == x[i]);
  }

  TEST_CASE("negative theta is reported") {
    Tape tape;
    Var v = tape.leaf(Tensor::ones({2}));
    Var th = tape.leaf(Tensor::scalar(-0.1));
    CHECK_THROWS_AS(soft_threshold(v, th), std::runtime_error);
  }

  TEST_CASE("prox optimality: output minimizes 0.5 (x-r)^2 + theta |x|") {
    // Grid-search oracle over x in [-2, 2] step 1e-4.
    const double r = 0.7, theta = 0.2;
    double best_x = -2.0, best_f = 1e300;
    for (double x = -2.0; x <= 2.0; x += 1e-4) {
      const double f = 0.5 * (x - r) * (x - r) + theta * std::abs(x);
      if (f < best_f) {
        best_f = f;
        best_x = x;
      }
    }
    Tape tape;
    Var out = soft_threshold(tape.leaf(Tensor::scalar(r)), tape.leaf(Tensor::scalar(theta)));
    CHECK(std::abs(out.value()[0] - best_x) < 1e-4);
  }

  TEST_CASE("gradients w.r.t. value and threshold match finite differences") {
    Rng rng(32);
    Tensor v = random_tensor({5, 5}, rng);
    const double theta = 0.3;
    for (std::int64_t i = 0; i < v.size(); ++i) {
      if (std::abs(std::abs(v[i]) - theta) < 5e-3) v[i] += 0.01;  // stay off the kink
    }
    auto r = gradcheck(
        [&](Tape& t, const std::vector<Var>& vars) {
          return sum(soft_threshold(vars[0], vars[1]));
        },
        {v, Tensor::scalar(theta)});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }
}

TEST_SUITE("autodiff-fftops") {
  TEST_CASE("fft2c / ifft2c round trip on the tape") {
    Tape tape;
    Rng rng(41);
    Tensor re0 = random_tensor({8, 8}, rng);
    Tensor im0 = random_tensor({8, 8}, rng);
    auto [fr, fi] = fft2c(tape.leaf(re0), tape.leaf(im0));
    auto [br, bi] = ifft2c(fr, fi);
    for (std::int64_t i = 0; i < re0.size(); ++i) {
      CHECK(std::abs(br.value()[i] - re0[i]) < 1e-12);
      CHECK(std::abs(bi.value()[i] - im0[i]) < 1e-12);
    }
  }

  TEST_CASE("fft gradient matches finite differences") {
    Rng rng(42);
    Tensor re = random_tensor({4, 4}, rng);
    Tensor im = random_tensor({4, 4}, rng);
    Tensor w = random_tensor({4, 4}, rng);  // weights make the scalar generic
    auto r = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) {
          auto [fr, fi] = fft2c(v[0], v[1]);
          Var wc = t.constant(w);
          return add(sum(mul(fr, wc)), sum(mul(fi, fi)));
        },
        {re, im});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }

  TEST_CASE("ifft gradient matches finite differences when one output is dropped") {
    Rng rng(43);
    Tensor re = random_tensor({4, 4}, rng);
    Tensor im = random_tensor({4, 4}, rng);
    auto r = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) {
          auto [br, bi] = ifft2c(v[0], v[1]);
          (void)bi;
          return sum(mul(br, br));
        },
        {re, im});
    CHECK(r.max_rel_err < 1e-6);
  }
}
