// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

// Small trained models shared by the moe-engine, trainer and explorer tests.

#pragma once

#include <memory>

#include "moe/dataset.hpp"
#include "moe/distort.hpp"
#include "moe/feature_tap.hpp"
#include "moe/glyphs.hpp"
#include "moe/trainer.hpp"

namespace moe::testing {

struct TinyWorld {
  std::shared_ptr<const Network> ge;
  LabeledSet generic_train;
  LabeledSet generic_test;
  LabeledSet user_train;
  LabeledSet user_test;
};

// A 10-class GE trained briefly on glyphs plus one distorted user. Built once
// per test binary.
inline const TinyWorld& tiny_world() {
  static const TinyWorld world = [] {
    TinyWorld w;
    w.generic_train = generate_glyph_set(10, 40, 101);
    w.generic_test = generate_glyph_set(10, 20, 102);
    auto net = std::make_shared<Network>(build_ge(10));
    TrainConfig cfg{0.01, 0.9, 16, 2, 0.1, 103, 5};
    train_ge(*net, w.generic_train, cfg);
    w.ge = net;
    auto pool = generate_glyph_set(10, 20, 104);
    auto data = synthesize_user(pool, make_user_profile(1, 105), 12, 6);
    w.user_train = data.train;
    w.user_test = data.test;
    return w;
  }();
  return world;
}

}  // namespace moe::testing
