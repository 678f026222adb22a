// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "moe/checkpoint.hpp"
#include "moe/feature_tap.hpp"
#include "moe/network_spec.hpp"
#include "test_support.hpp"

using namespace moe;
using namespace moe::testing;

namespace {

// Element count of every kernel or matrix, straight from the spec geometry.
std::size_t oracle_weights(const NetworkSpec& s) {
  std::size_t total = 0;
  for (const auto& l : s.layers) {
    if (l.kind == LayerKind::conv) total += l.kernel * l.kernel * l.in_channels * l.out_channels;
    if (l.kind == LayerKind::fully_connected) total += l.fan_in * l.fan_out;
  }
  return total;
}

std::shared_ptr<const Network> random_ge(std::size_t classes, std::uint64_t seed) {
  auto ge = std::make_shared<Network>(build_ge(classes));
  ge->initialize(seed);
  ge->freeze_all();
  return ge;
}

}  // namespace

TEST_SUITE("specs") {
  TEST_CASE("GE has 456,500 weights, a 12x12x20 tap and 62 outputs") {
    auto ge = build_ge();
    CHECK(oracle_weights(ge) == 456500);
    CHECK(Network(ge).weight_count() == 456500);
    auto shapes = ge.shapes();
    CHECK(shapes[kTapLayer + 1] == Shape{12, 12, 20});
    CHECK(shapes.back() == Shape{62});
    CHECK(ge.output_count == 62);
    CHECK(shapes[1] == Shape{24, 24, 20});
    CHECK(shapes[3] == Shape{8, 8, 50});
    CHECK(shapes[4] == Shape{4, 4, 50});
  }

  TEST_CASE("LE at n = 3 holds 11,160 weights and no conv layer") {
    auto le = build_le(3);
    CHECK(oracle_weights(le) == 11160);
    for (const auto& l : le.layers) CHECK(l.kind != LayerKind::conv);
    CHECK(le.input_shape == tap_shape());
  }

  TEST_CASE("LE at n = 12 pools with window 1") {
    auto le = build_le(12);
    CHECK(le.layers[0].window == 1);
    std::mt19937_64 gen(1);
    Network net(le);
    net.initialize(2);
    auto x = random_tensor(tap_shape(), gen);
    CHECK(net.forward(x, 0, 1) == x);
  }

  TEST_CASE("GN weight counts for m = 3, 1, 12") {
    CHECK(oracle_weights(build_gn(3)) == 360);
    CHECK(oracle_weights(build_gn(1)) == 40);
    CHECK(oracle_weights(build_gn(12)) == 5760);
    CHECK(build_gn(3).output_count == 2);
  }

  TEST_CASE("pooled sizes that do not divide 12 are rejected") {
    CHECK_THROWS_AS(build_le(5), ShapeError);
    CHECK_THROWS_AS(build_gn(5), ShapeError);
    CHECK_THROWS_AS(build_le(0), ShapeError);
    CHECK_THROWS_AS(build_gn(24), ShapeError);
  }

  TEST_CASE("LE + GN weights equal n^2 * 1280 for every divisor") {
    for (std::size_t n : {1, 2, 3, 4, 6, 12})
      CHECK(oracle_weights(build_le(n)) + oracle_weights(build_gn(n)) == n * n * 1280);
  }

  TEST_CASE("shape chains are consistent end to end") {
    for (std::size_t classes : {2, 10, 62}) CHECK_NOTHROW(build_ge(classes).validate());
    auto broken = build_ge();
    broken.layers[4].fan_in = 801;
    CHECK_THROWS_AS(broken.validate(), ShapeError);
  }

  TEST_CASE("JSON round trip") {
    for (const auto& spec : {build_ge(10), build_le(4, 10), build_gn(2)}) {
      nlohmann::json j = spec;
      CHECK(j.get<NetworkSpec>() == spec);
    }
  }

  TEST_CASE("unknown layer names and kinds") {
    CHECK_THROWS_AS(build_ge().index_of("conv9"), Error);
    CHECK_THROWS_AS(layer_kind_from_string("dropout"), Error);
  }
}

TEST_SUITE("feature tap") {
  TEST_CASE("tapped tensor equals GE's own internal activation") {
    auto ge = random_ge(10, 3);
    FeatureTap tap(ge);
    std::mt19937_64 gen(4);
    auto img = random_tensor({28, 28, 1}, gen, 0, 1);
    Tape tape;
    ge->forward(img, tape);
    CHECK(tap.activations(img) == ge->forward(img, 0, kTapLayer + 1));
    CHECK(tap.shape() == tap_shape());
    CHECK(tap.finish_global(tap.activations(img)) == ge->forward(img));
  }

  TEST_CASE("shared prefix evaluated once per input") {
    auto ge = random_ge(10, 5);
    FeatureTap tap(ge);
    Network le(build_le(3, 10)), gn(build_gn(3));
    le.initialize(6);
    gn.initialize(7);
    std::mt19937_64 gen(8);
    for (int i = 0; i < 5; ++i) forward_with_tap(tap, le, gn, random_tensor({28, 28, 1}, gen));
    CHECK(tap.evaluations() == 5);
  }

  TEST_CASE("heads match standalone evaluation and GE ignores head weights") {
    auto ge = random_ge(10, 9);
    FeatureTap tap(ge);
    Network le(build_le(4, 10)), gn(build_gn(2));
    le.initialize(10);
    gn.initialize(11);
    std::mt19937_64 gen(12);
    auto img = random_tensor({28, 28, 1}, gen, 0, 1);
    auto out = forward_with_tap(tap, le, gn, img);
    auto tapped = ge->forward(img, 0, kTapLayer + 1);
    CHECK(out.tap == tapped);
    CHECK(out.le_logits == le.forward(tapped));
    CHECK(out.gn_logits == gn.forward(tapped));
    CHECK(out.ge_logits == ge->forward(img));
    le.initialize(99);
    gn.initialize(98);
    CHECK(forward_with_tap(tap, le, gn, img).ge_logits == out.ge_logits);
  }

  TEST_CASE("head built for a different tap shape is rejected") {
    auto ge = random_ge(10, 13);
    FeatureTap tap(ge);
    NetworkSpec odd{"odd", {8, 8, 20}, {LayerSpec::fully_connected("f", 1280, 10)}, 10, true};
    Network bad(odd), gn(build_gn(3));
    bad.initialize(1);
    gn.initialize(2);
    CHECK_THROWS_AS(forward_with_tap(tap, bad, gn, Tensor({28, 28, 1})), ShapeError);
    CHECK_THROWS_AS(FeatureTap(nullptr), Error);
  }
}

TEST_SUITE("network") {
  TEST_CASE("initialization is seeded and Glorot bounded") {
    Network a(build_ge(10)), b(build_ge(10));
    CHECK_FALSE(a.initialized());
    a.initialize(42);
    b.initialize(42);
    CHECK(params_hash(a) == params_hash(b));
    const auto fc1 = a.spec().index_of("fc1");
    const double limit = std::sqrt(6.0 / (800 + 500));
    for (double w : a.params(fc1).weights.data()) CHECK(std::abs(w) <= limit);
    for (double v : a.params(fc1).biases.data()) CHECK(v == 0.0);
    b.initialize(43);
    CHECK(params_hash(a) != params_hash(b));
  }

  TEST_CASE("partial forward ranges compose") {
    Network ge(build_ge(10));
    ge.initialize(1);
    std::mt19937_64 gen(2);
    auto img = random_tensor({28, 28, 1}, gen, 0, 1);
    auto mid = ge.forward(img, 0, 4);
    CHECK(ge.forward(mid, 4) == ge.forward(img));
    CHECK_THROWS_AS(ge.forward(img, 4), ShapeError);
    CHECK_THROWS_AS(ge.forward(img, 3, 2), Error);
  }

  TEST_CASE("freezing a parameterless layer is an error") {
    Network ge(build_ge(10));
    CHECK_THROWS_AS(ge.set_frozen(ge.spec().index_of("pool1"), true), Error);
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("save and load round trip") {
    TempDir dir("ckpt");
    Network ge(build_ge(10));
    ge.initialize(5);
    save_network(dir / "ge.moew", ge);
    auto back = load_network(dir / "ge.moew", build_ge(10));
    CHECK(back.initialized());
    CHECK(params_hash(back) == params_hash(ge));
    for (auto l : ge.param_layers()) CHECK(back.params(l).weights == ge.params(l).weights);
  }

  TEST_CASE("encoding is byte-stable") {
    Network le(build_le(3, 10));
    le.initialize(7);
    CHECK(encode_checkpoint(export_params(le)) == encode_checkpoint(export_params(le)));
  }

  TEST_CASE("corrupt inputs are rejected") {
    Network le(build_le(3, 10));
    le.initialize(8);
    auto bytes = encode_checkpoint(export_params(le));
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(bad_magic), CheckpointError);
    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    CHECK_THROWS_AS(decode_checkpoint(truncated), CheckpointError);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_checkpoint(trailing), CheckpointError);
    TempDir dir("ckpt-bad");
    save_network(dir / "le.moew", le);
    CHECK_THROWS_AS(load_network(dir / "le.moew", build_le(4, 10)), CheckpointError);
    CHECK_THROWS_AS(load_network(dir / "missing.moew", build_le(3, 10)), CheckpointError);
  }
}
