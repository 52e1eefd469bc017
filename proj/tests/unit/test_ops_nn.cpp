#include <cmath>

#include "doctest.h"
#include "prista/ops.hpp"
#include "prista/rng.hpp"
#include "support/gradcheck.hpp"
#include "support/naive_dft.hpp"

using namespace prista;
using test::gradcheck;
using test::random_tensor;

TEST_SUITE("conv2d") {
  TEST_CASE("1x1 identity kernel passes the input through") {
    Tape tape;
    Rng rng(51);
    Tensor in = random_tensor({1, 5, 5}, rng);
    Var out = conv2d(tape.leaf(in), tape.leaf(Tensor::ones({1, 1, 1, 1})),
                     tape.leaf(Tensor::zeros({1})));
    for (std::int64_t i = 0; i < in.size(); ++i) CHECK(out.value()[i] == in[i]);
  }

  TEST_CASE("all-zero kernel and bias annihilate any input") {
    Tape tape;
    Rng rng(52);
    Var out = conv2d(tape.leaf(random_tensor({2, 6, 6}, rng)),
                     tape.leaf(Tensor::zeros({3, 2, 3, 3})), tape.leaf(Tensor::zeros({3})));
    CHECK(out.value().max_abs() == 0.0);
  }

  TEST_CASE("same padding keeps spatial extents") {
    Tape tape;
    Rng rng(53);
    Var out = conv2d(tape.leaf(random_tensor({2, 8, 4}, rng)),
                     tape.leaf(random_tensor({5, 2, 3, 3}, rng)),
                     tape.leaf(random_tensor({5}, rng)));
    CHECK(out.value().shape() == Shape{5, 8, 4});
  }

  TEST_CASE("hand-computed 3x3 window sum") {
    // all-ones kernel on all-ones input counts the in-bounds neighbors
    Tape tape;
    Var out = conv2d(tape.leaf(Tensor::ones({1, 3, 3})), tape.leaf(Tensor::ones({1, 1, 3, 3})),
                     tape.leaf(Tensor::zeros({1})));
    CHECK(out.value().at(0, 1, 1) == 9.0);
    CHECK(out.value().at(0, 0, 0) == 4.0);
    CHECK(out.value().at(0, 0, 1) == 6.0);
  }

  TEST_CASE("gradients match finite differences (1x5x5 input, 2x1x3x3 kernel)") {
    Rng rng(54);
    Tensor in = random_tensor({1, 5, 5}, rng);
    Tensor k = random_tensor({2, 1, 3, 3}, rng);
    Tensor b = random_tensor({2}, rng);
    auto r = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) { return sum(conv2d(v[0], v[1], v[2])); },
        {in, k, b});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }

  TEST_CASE("rejects even kernels and mismatched channels") {
    Tape tape;
    Var in = tape.leaf(Tensor::ones({2, 4, 4}));
    CHECK_THROWS_AS(conv2d(in, tape.leaf(Tensor::ones({1, 2, 2, 2})), tape.leaf(Tensor::zeros({1}))),
                    std::invalid_argument);
    CHECK_THROWS_AS(conv2d(in, tape.leaf(Tensor::ones({1, 3, 3, 3})), tape.leaf(Tensor::zeros({1}))),
                    std::invalid_argument);
  }
}

TEST_SUITE("nn-primitives") {
  TEST_CASE("dense matches finite differences") {
    Rng rng(61);
    auto r = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) { return sum(dense(v[0], v[1], v[2])); },
        {random_tensor({4}, rng), random_tensor({3, 4}, rng), random_tensor({3}, rng)});
    CHECK(r.max_rel_err < 1e-6);
  }

  TEST_CASE("pools: values and routed gradients") {
    Tape tape;
    Tensor in = Tensor::from_data({2, 2, 2}, {1.0, 4.0, 2.0, 3.0, -1.0, -2.0, -3.0, -4.0});
    Var v = tape.leaf(in);
    Var mx = global_max_pool(v);
    CHECK(mx.value()[0] == 4.0);
    CHECK(mx.value()[1] == -1.0);
    Var av = global_avg_pool(v);
    CHECK(av.value()[0] == doctest::Approx(2.5));
    CHECK(av.value()[1] == doctest::Approx(-2.5));
    Var root = sum(add(mx, av));
    tape.backward(root);
    const Tensor& g = tape.grad(v);
    CHECK(g[1] == doctest::Approx(1.0 + 0.25));  // argmax of channel 0 plus avg share
    CHECK(g[0] == doctest::Approx(0.25));
    CHECK(g[4] == doctest::Approx(1.0 + 0.25));  // argmax of channel 1
  }

  TEST_CASE("max pool ties route to the lowest index") {
    Tape tape;
    Var v = tape.leaf(Tensor::full({1, 2, 2}, 3.0));
    Var mx = global_max_pool(v);
    tape.backward(sum(mx));
    const Tensor& g = tape.grad(v);
    CHECK(g[0] == 1.0);
    CHECK(g[1] == 0.0);
  }

  TEST_CASE("channel mean/max values") {
    Tape tape;
    Tensor in = Tensor::from_data({2, 1, 2}, {1.0, 5.0, 3.0, 1.0});
    Var v = tape.leaf(in);
    CHECK(channel_mean(v).value()[0] == doctest::Approx(2.0));
    CHECK(channel_mean(v).value()[1] == doctest::Approx(3.0));
    CHECK(channel_max(v).value()[0] == 3.0);
    CHECK(channel_max(v).value()[1] == 5.0);
  }

  TEST_CASE("gradcheck: channel/spatial broadcast and layout ops") {
    Rng rng(62);
    const Tensor f = random_tensor({3, 4, 4}, rng);

    auto r1 = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) { return sum(mul_channels(v[0], v[1])); },
        {f, random_tensor({3}, rng)});
    CHECK(r1.max_rel_err < 1e-6);

    auto r2 = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) { return sum(mul_spatial(v[0], v[1])); },
        {f, random_tensor({1, 4, 4}, rng)});
    CHECK(r2.max_rel_err < 1e-6);

    auto r3 = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) {
          Var c = concat_channels(v[0], v[1]);
          Var s = slice_channels(c, 1, 4);
          return sum(mul(s, s));
        },
        {f, random_tensor({2, 4, 4}, rng)});
    CHECK(r3.max_rel_err < 1e-6);

    auto r4 = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) {
          Var rep = repeat_channels(v[0], 3);
          return sum(mul(rep, t.constant(f)));
        },
        {random_tensor({1, 4, 4}, rng)});
    CHECK(r4.max_rel_err < 1e-6);

    auto r5 = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) {
          Var s = sum_channels(v[0]);
          return sum(mul(s, s));
        },
        {f});
    CHECK(r5.max_rel_err < 1e-6);
  }

  TEST_CASE("channel mean/max gradcheck off ties") {
    Rng rng(63);
    Tensor f = random_tensor({3, 3, 3}, rng);
    auto r = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) {
          return add(sum(channel_mean(v[0])), sum(mul(channel_max(v[0]), channel_max(v[0]))));
        },
        {f});
    INFO(r.worst);
    CHECK(r.max_rel_err < 1e-6);
  }

  TEST_CASE("pool gradcheck off ties") {
    Rng rng(64);
    Tensor f = random_tensor({2, 4, 4}, rng);
    auto r = gradcheck(
        [&](Tape& t, const std::vector<Var>& v) {
          Var gm = global_max_pool(v[0]);
          Var ga = global_avg_pool(v[0]);
          return add(sum(mul(gm, gm)), sum(mul(ga, ga)));
        },
        {f});
    CHECK(r.max_rel_err < 1e-6);
  }
}
