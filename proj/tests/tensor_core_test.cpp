// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "moe/network.hpp"
#include "moe/optim.hpp"
#include "test_support.hpp"

using namespace moe;
using namespace moe::testing;

TEST_SUITE("tensor") {
  TEST_CASE("shape and data length agree") {
    Tensor t({2, 3, 4}, 1.5);
    CHECK(t.size() == 24);
    CHECK(t.rank() == 3);
    CHECK(t.all_finite());
    CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
    CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>(3)), ShapeError);
    CHECK_THROWS_AS(t.reshaped({5, 5}), ShapeError);
    CHECK(t.flattened().shape() == Shape{24});
  }

  TEST_CASE("non-finite values are detected") {
    Tensor t({3});
    t[1] = NAN;
    CHECK_FALSE(t.all_finite());
    t[1] = INFINITY;
    CHECK_FALSE(t.all_finite());
  }

  TEST_CASE("argmax keeps the first maximum") {
    std::vector<double> v{1, 3, 3, 2};
    CHECK(argmax(v) == 1);
    CHECK_THROWS_AS(argmax(std::vector<double>{}), ShapeError);
  }
}

TEST_SUITE("conv2d") {
  TEST_CASE("28x28x1 with twenty 5x5 filters gives 24x24x20") {
    std::mt19937_64 gen(1);
    auto out = conv2d(random_tensor({28, 28, 1}, gen), random_conv(5, 1, 20, gen), 1);
    CHECK(out.shape() == Shape{24, 24, 20});
  }

  TEST_CASE("zero weights produce the bias everywhere") {
    LayerParams p{Tensor({3, 3, 2, 2}), Tensor({2}, std::vector<double>{0.25, -4.0}), false};
    std::mt19937_64 gen(2);
    auto out = conv2d(random_tensor({6, 6, 2}, gen), p, 1);
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x) {
        CHECK(out.at(y, x, 0) == 0.25);
        CHECK(out.at(y, x, 1) == -4.0);
      }
  }

  TEST_CASE("6x6x2 input, 3x3 kernel, 2 filters matches the nested-loop oracle") {
    std::mt19937_64 gen(3);
    auto in = random_tensor({6, 6, 2}, gen);
    auto p = random_conv(3, 2, 2, gen);
    CHECK(conv2d(in, p, 1) == oracle_conv(in, p.weights, p.biases, 1));
  }

  TEST_CASE("random geometries and strides match the oracle exactly") {
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t k = 1 + gen() % 3, stride = 1 + gen() % 2, c = 1 + gen() % 3,
                        f = 1 + gen() % 3;
      const std::size_t steps = 1 + gen() % ((8 - k) / stride + 1);
      const std::size_t side = k + (steps - 1) * stride;
      auto in = random_tensor({side, side, c}, gen);
      auto p = random_conv(k, c, f, gen);
      REQUIRE(conv2d(in, p, stride) == oracle_conv(in, p.weights, p.biases, stride));
    }
  }

  TEST_CASE("shape errors name the offending dimensions") {
    std::mt19937_64 gen(5);
    auto p = random_conv(3, 2, 4, gen);
    CHECK_THROWS_WITH_AS(conv2d(Tensor({6, 6, 3}), p, 1),
                         doctest::Contains("3 channels but kernel expects 2"), ShapeError);
    CHECK_THROWS_AS(conv2d(Tensor({6, 6, 2}), p, 2), ShapeError);
    CHECK_THROWS_AS(conv2d(Tensor({2, 2, 2}), p, 1), ShapeError);
    CHECK_THROWS_AS(conv2d(Tensor({36}), p, 1), ShapeError);
    LayerParams bad_bias{p.weights, Tensor({3}), false};
    CHECK_THROWS_AS(conv2d(Tensor({6, 6, 2}), bad_bias, 1), ShapeError);
  }
}

TEST_SUITE("maxpool") {
  TEST_CASE("12x12x20 pooled by 4 gives 3x3x20 and by 12 gives 1x1x20") {
    std::mt19937_64 gen(6);
    auto in = random_tensor({12, 12, 20}, gen);
    CHECK(maxpool(in, 4, 4).output.shape() == Shape{3, 3, 20});
    auto global = maxpool(in, 12, 12).output;
    CHECK(global.shape() == Shape{1, 1, 20});
    CHECK(global == oracle_maxpool(in, 12, 12));
  }

  TEST_CASE("window 1 stride 1 is the identity") {
    std::mt19937_64 gen(7);
    auto in = random_tensor({5, 4, 3}, gen);
    CHECK(maxpool(in, 1, 1).output == in);
  }

  TEST_CASE("random instances match the oracle exactly") {
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 60; ++trial) {
      const std::size_t window = 1 + gen() % 3, stride = 1 + gen() % 3, c = 1 + gen() % 3;
      const std::size_t steps = 1 + gen() % ((8 - window) / stride + 1);
      const std::size_t side = window + (steps - 1) * stride;
      auto in = random_tensor({side, side, c}, gen);
      REQUIRE(maxpool(in, window, stride).output == oracle_maxpool(in, window, stride));
    }
  }

  TEST_CASE("ties route to the first position in scan order") {
    Tensor in({2, 2, 1}, 1.0);
    auto r = maxpool(in, 2, 2);
    CHECK(r.argmax[0] == 0);
  }

  TEST_CASE("non-divisible geometry is rejected") {
    CHECK_THROWS_AS(maxpool(Tensor({12, 12, 1}), 5, 5), ShapeError);
    CHECK_THROWS_AS(maxpool(Tensor({12, 12, 1}), 0, 1), ShapeError);
    CHECK_THROWS_AS(maxpool(Tensor({4, 4, 1}), 5, 1), ShapeError);
  }

  TEST_CASE("backward routes every upstream element to exactly one input") {
    std::mt19937_64 gen(9);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t window = 1 + gen() % 4;
      const std::size_t side = window * (1 + gen() % 3);
      auto in = random_tensor({side, side, 2}, gen);
      auto r = maxpool(in, window, window);
      auto up = random_tensor(r.output.shape(), gen);
      auto d = maxpool_backward(in.shape(), r.argmax, up);
      const auto sum_up = std::accumulate(up.data().begin(), up.data().end(), 0.0);
      const auto sum_d = std::accumulate(d.data().begin(), d.data().end(), 0.0);
      CHECK(sum_d == doctest::Approx(sum_up).epsilon(1e-12));
      std::size_t nonzero = 0;
      for (double v : d.data()) nonzero += v != 0.0;
      CHECK(nonzero == up.size());
    }
  }
}

TEST_SUITE("fully_connected") {
  TEST_CASE("3x3x20 to 62 classes holds 11160 weights") {
    std::mt19937_64 gen(10);
    auto p = random_fc(180, 62, gen);
    CHECK(p.weights.size() == 11160);
    CHECK(fully_connected(random_tensor({3, 3, 20}, gen), p).shape() == Shape{62});
  }

  TEST_CASE("identity weights reproduce the input") {
    LayerParams p{Tensor({4, 4}), Tensor({4}), false};
    for (std::size_t i = 0; i < 4; ++i) p.weights[i * 4 + i] = 1.0;
    Tensor x({4}, std::vector<double>{1, -2, 3.5, 0});
    CHECK(fully_connected(x, p) == x);
  }

  TEST_CASE("random 5 to 3 layer matches the double loop") {
    std::mt19937_64 gen(11);
    auto p = random_fc(5, 3, gen);
    auto x = random_tensor({5}, gen);
    auto expect = oracle_fc(x, p.weights, p.biases);
    auto got = fully_connected(x, p);
    CHECK(max_relative_error(got.data(), expect.data()) < 1e-14);
  }

  TEST_CASE("dimension mismatch is rejected") {
    std::mt19937_64 gen(12);
    auto p = random_fc(5, 3, gen);
    CHECK_THROWS_AS(fully_connected(Tensor({6}), p), ShapeError);
    CHECK_THROWS_AS(fully_connected_backward(Tensor({5}), p, Tensor({4}), true, true), ShapeError);
  }

  TEST_CASE("weight gradient is the outer product of input and upstream") {
    std::mt19937_64 gen(13);
    auto p = random_fc(4, 3, gen);
    auto x = random_tensor({4}, gen);
    auto g = random_tensor({3}, gen);
    auto grads = fully_connected_backward(x, p, g, true, true);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(grads.d_weights[i * 3 + j] == x[i] * g[j]);
    CHECK(grads.d_biases == g);
  }
}

TEST_SUITE("loss") {
  TEST_CASE("uniform logits over 62 classes cost ln 62") {
    auto r = softmax_cross_entropy(Tensor({62}, 0.3), 17);
    CHECK(r.loss == doctest::Approx(std::log(62.0)).epsilon(1e-12));
    CHECK(std::accumulate(r.probabilities.begin(), r.probabilities.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("saturated logits give a near-zero loss") {
    auto r = softmax_cross_entropy(Tensor({2}, std::vector<double>{10, -10}), 0);
    CHECK(r.loss < 1e-4);
  }

  TEST_CASE("large logits stay finite") {
    auto r = softmax_cross_entropy(Tensor({3}, std::vector<double>{1000, -1000, 999}), 1);
    CHECK(std::isfinite(r.loss));
    CHECK(r.d_logits.all_finite());
  }

  TEST_CASE("label and size errors") {
    CHECK_THROWS_AS(softmax_cross_entropy(Tensor({3}), 3), ShapeError);
    CHECK_THROWS_AS(softmax_cross_entropy(Tensor({1}), 0), ShapeError);
  }

  TEST_CASE("loss gradient matches central differences to 1e-6") {
    std::mt19937_64 gen(14);
    for (int trial = 0; trial < 20; ++trial) {
      auto logits = random_tensor({2 + gen() % 9}, gen, -3, 3);
      const std::size_t label = gen() % logits.size();
      auto analytic = softmax_cross_entropy(logits, label).d_logits;
      auto numeric = numeric_gradient(logits, [&] {
        return oracle_cross_entropy(logits.values(), label);
      });
      CHECK(max_relative_error(analytic.data(), numeric) < 1e-6);
    }
  }

  TEST_CASE("relu clamps negatives and passes gradient only where positive") {
    Tensor x({4}, std::vector<double>{-1, 0, 2, -0.5});
    CHECK(relu(x) == Tensor({4}, std::vector<double>{0, 0, 2, 0}));
    auto d = relu_backward(x, Tensor({4}, 1.0));
    CHECK(d == Tensor({4}, std::vector<double>{0, 0, 1, 0}));
  }
}

TEST_SUITE("finite differences") {
  // Scalar objective sum(out * r) so that the upstream gradient is r.
  TEST_CASE("conv2d input, weight and bias gradients") {
    std::mt19937_64 gen(15);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t k = 1 + gen() % 3, stride = 1 + gen() % 2, c = 1 + gen() % 3,
                        f = 1 + gen() % 3;
      const std::size_t side = k + stride * (gen() % 3);
      auto in = random_tensor({side, side, c}, gen);
      auto p = random_conv(k, c, f, gen);
      auto r = random_tensor(conv2d(in, p, stride).shape(), gen);
      auto objective = [&] { return dot(conv2d(in, p, stride).data(), r.data()); };
      auto g = conv2d_backward(in, p, stride, r, true, true);
      CHECK(max_relative_error(g.d_input.data(), numeric_gradient(in, objective)) < 1e-4);
      CHECK(max_relative_error(g.d_weights.data(), numeric_gradient(p.weights, objective)) < 1e-4);
      CHECK(max_relative_error(g.d_biases.data(), numeric_gradient(p.biases, objective)) < 1e-4);
    }
  }

  TEST_CASE("maxpool input gradient") {
    std::mt19937_64 gen(16);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t window = 1 + gen() % 3;
      const std::size_t side = window * (1 + gen() % 3);
      auto in = random_tensor({side, side, 1 + gen() % 2}, gen);
      auto res = maxpool(in, window, window);
      auto r = random_tensor(res.output.shape(), gen);
      auto objective = [&] { return dot(maxpool(in, window, window).output.data(), r.data()); };
      auto d = maxpool_backward(in.shape(), res.argmax, r);
      CHECK(max_relative_error(d.data(), numeric_gradient(in, objective)) < 1e-4);
    }
  }

  TEST_CASE("fully connected gradients") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t nin = 1 + gen() % 8, nout = 1 + gen() % 6;
      auto x = random_tensor({nin}, gen);
      auto p = random_fc(nin, nout, gen);
      auto r = random_tensor({nout}, gen);
      auto objective = [&] { return dot(fully_connected(x, p).data(), r.data()); };
      auto g = fully_connected_backward(x, p, r, true, true);
      CHECK(max_relative_error(g.d_input.data(), numeric_gradient(x, objective)) < 1e-4);
      CHECK(max_relative_error(g.d_weights.data(), numeric_gradient(p.weights, objective)) < 1e-4);
      CHECK(max_relative_error(g.d_biases.data(), numeric_gradient(p.biases, objective)) < 1e-4);
    }
  }

  TEST_CASE("relu gradient away from the kink") {
    std::mt19937_64 gen(18);
    for (int trial = 0; trial < 20; ++trial) {
      auto x = random_tensor({1 + gen() % 10}, gen);
      for (auto& v : x.data())
        if (std::abs(v) < 1e-3) v = 0.5;
      auto r = random_tensor(x.shape(), gen);
      auto objective = [&] { return dot(relu(x).data(), r.data()); };
      CHECK(max_relative_error(relu_backward(x, r).data(), numeric_gradient(x, objective)) < 1e-4);
    }
  }

  TEST_CASE("pool + FC + softmax stack through the network tape") {
    std::mt19937_64 gen(19);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = std::vector<std::size_t>{1, 2, 3, 4, 6}[gen() % 5];
      Network le(build_le(n, 5));
      le.initialize(gen());
      auto x = random_tensor(tap_shape(), gen);
      const std::size_t label = gen() % 5;
      Tape tape;
      auto logits = le.forward(x, tape);
      auto grads = le.backward(tape, softmax_cross_entropy(logits, label).d_logits);
      const auto fc = le.spec().index_of("fc_le");
      auto objective = [&] { return softmax_cross_entropy(le.forward(x), label).loss; };
      auto& p = le.mutable_params(fc);
      CHECK(max_relative_error(grads.at(fc).d_weights.data(), numeric_gradient(p.weights, objective)) <
            1e-4);
      CHECK(max_relative_error(grads.at(fc).d_biases.data(), numeric_gradient(p.biases, objective)) <
            1e-4);
    }
  }

  TEST_CASE("small conv network, every parameter") {
    NetworkSpec spec{"tiny",
                     {6, 6, 2},
                     {LayerSpec::conv("c", 3, 2, 3), LayerSpec::maxpool("p", 2, 2),
                      LayerSpec::fully_connected("f1", 12, 5), LayerSpec::relu("r"),
                      LayerSpec::fully_connected("f2", 5, 3)},
                     3,
                     false};
    std::mt19937_64 gen(20);
    for (int trial = 0; trial < 5; ++trial) {
      Network net(spec);
      net.initialize(gen());
      auto x = random_tensor({6, 6, 2}, gen);
      const std::size_t label = gen() % 3;
      Tape tape;
      auto logits = net.forward(x, tape);
      auto grads = net.backward(tape, softmax_cross_entropy(logits, label).d_logits);
      auto objective = [&] { return softmax_cross_entropy(net.forward(x), label).loss; };
      for (auto layer : net.param_layers()) {
        auto& p = net.mutable_params(layer);
        CHECK(max_relative_error(grads.at(layer).d_weights.data(),
                                 numeric_gradient(p.weights, objective)) < 1e-4);
        CHECK(max_relative_error(grads.at(layer).d_biases.data(),
                                 numeric_gradient(p.biases, objective)) < 1e-4);
      }
    }
  }
}

TEST_SUITE("backward") {
  TEST_CASE("backward without a forward pass is an error") {
    Network le(build_le(3, 4));
    le.initialize(1);
    Tape tape;
    CHECK_THROWS_AS(le.backward(tape, Tensor({4})), StateError);
    Network other(build_le(3, 4));
    other.initialize(2);
    other.forward(Tensor(tap_shape()), tape);
    CHECK_THROWS_AS(le.backward(tape, Tensor({4})), StateError);
  }

  TEST_CASE("frozen layers receive no gradient buffers") {
    Network ge(build_ge(10));
    ge.initialize(3);
    const auto conv1 = ge.spec().index_of("conv1");
    const auto conv2 = ge.spec().index_of("conv2");
    ge.set_frozen(conv1, true);
    ge.set_frozen(conv2, true);
    std::mt19937_64 gen(21);
    Tape tape;
    auto logits = ge.forward(random_tensor({28, 28, 1}, gen, 0, 1), tape);
    auto grads = ge.backward(tape, softmax_cross_entropy(logits, 2).d_logits);
    CHECK_FALSE(grads.contains(conv1));
    CHECK_FALSE(grads.contains(conv2));
    CHECK(grads.contains(ge.spec().index_of("fc1")));
    CHECK(grads.contains(ge.spec().index_of("fc2")));
  }

  TEST_CASE("fully frozen network yields an empty gradient set") {
    Network ge(build_ge(10));
    ge.initialize(4);
    ge.freeze_all();
    Tape tape;
    auto logits = ge.forward(Tensor({28, 28, 1}, 0.5), tape);
    CHECK(ge.backward(tape, logits).size() == 0);
  }
}

TEST_SUITE("sgd") {
  TEST_CASE("unit step on g = w with no momentum zeroes the weights") {
    std::mt19937_64 gen(22);
    auto p = random_fc(3, 2, gen);
    LayerGrad g{p.weights, p.biases};
    Velocity v;
    sgd_step(p, g, v, 1.0, 0.0);
    for (double w : p.weights.data()) CHECK(w == 0.0);
    for (double b : p.biases.data()) CHECK(b == 0.0);
  }

  TEST_CASE("two plain steps equal one step on the summed gradient") {
    std::mt19937_64 gen(23);
    auto a = random_fc(3, 2, gen);
    auto b = a;
    LayerGrad g1{random_tensor({3, 2}, gen), random_tensor({2}, gen)};
    LayerGrad g2{random_tensor({3, 2}, gen), random_tensor({2}, gen)};
    Velocity va, vb;
    sgd_step(a, g1, va, 0.1, 0.0);
    sgd_step(a, g2, va, 0.1, 0.0);
    LayerGrad sum{g1.d_weights, g1.d_biases};
    for (std::size_t i = 0; i < sum.d_weights.size(); ++i) sum.d_weights[i] += g2.d_weights[i];
    for (std::size_t i = 0; i < sum.d_biases.size(); ++i) sum.d_biases[i] += g2.d_biases[i];
    sgd_step(b, sum, vb, 0.1, 0.0);
    CHECK(max_relative_error(a.weights.data(), b.weights.data()) < 1e-12);
    CHECK(max_relative_error(a.biases.data(), b.biases.data()) < 1e-12);
  }

  TEST_CASE("momentum follows v = mu v - eta g, w = w + v") {
    LayerParams p{Tensor({1, 1}, 1.0), Tensor({1}), false};
    LayerGrad g{Tensor({1, 1}, 2.0), Tensor({1})};
    Velocity v;
    sgd_step(p, g, v, 0.1, 0.9);
    CHECK(p.weights[0] == doctest::Approx(0.8));
    sgd_step(p, g, v, 0.1, 0.9);
    CHECK(v.weights[0] == doctest::Approx(0.9 * -0.2 - 0.2));
    CHECK(p.weights[0] == doctest::Approx(0.8 - 0.38));
  }

  TEST_CASE("quadratic loss decreases monotonically for a small step") {
    // f(w) = 3 w0^2 + 0.5 w1^2
    LayerParams p{Tensor({1, 2}, std::vector<double>{2.0, -3.0}), Tensor({2}), false};
    Velocity v;
    auto f = [&] { return 3 * p.weights[0] * p.weights[0] + 0.5 * p.weights[1] * p.weights[1]; };
    double prev = f();
    for (int i = 0; i < 50; ++i) {
      LayerGrad g{Tensor({1, 2}, std::vector<double>{6 * p.weights[0], p.weights[1]}), Tensor({2})};
      sgd_step(p, g, v, 0.05, 0.0);
      const double now = f();
      CHECK(now < prev);
      prev = now;
    }
  }

  TEST_CASE("frozen targets are refused and stay bit-identical") {
    std::mt19937_64 gen(24);
    auto p = random_fc(3, 2, gen);
    p.frozen = true;
    const auto before = p.weights;
    Velocity v;
    CHECK_THROWS_AS(sgd_step(p, {p.weights, p.biases}, v, 0.1, 0.9), StateError);
    CHECK(p.weights == before);
  }

  TEST_CASE("optimizer skips frozen layers over many steps") {
    Network ge(build_ge(10));
    ge.initialize(5);
    const auto conv1 = ge.spec().index_of("conv1");
    ge.set_frozen(conv1, true);
    const auto frozen_before = ge.params(conv1).weights;
    const auto fc2 = ge.spec().index_of("fc2");
    const auto fc_before = ge.params(fc2).weights;
    SgdOptimizer opt(0.05, 0.9);
    std::mt19937_64 gen(25);
    for (int step = 0; step < 5; ++step) {
      Tape tape;
      auto logits = ge.forward(random_tensor({28, 28, 1}, gen, 0, 1), tape);
      opt.step(ge, ge.backward(tape, softmax_cross_entropy(logits, step % 10).d_logits));
    }
    CHECK(ge.params(conv1).weights == frozen_before);
    CHECK_FALSE(ge.params(fc2).weights == fc_before);
  }
}

TEST_SUITE("mac counter") {
  TEST_CASE("counts conv and FC multiply-accumulates") {
    std::mt19937_64 gen(26);
    reset_mac_count();
    conv2d(random_tensor({6, 6, 2}, gen), random_conv(3, 2, 4, gen), 1);
    CHECK(mac_count() == 4 * 4 * 9 * 2 * 4);
    reset_mac_count();
    fully_connected(random_tensor({7}, gen), random_fc(7, 3, gen));
    CHECK(mac_count() == 21);
    reset_mac_count();
    maxpool(random_tensor({4, 4, 1}, gen), 2, 2);
    CHECK(mac_count() == 0);
  }
}
