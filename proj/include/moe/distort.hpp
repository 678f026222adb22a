// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "moe/dataset.hpp"

namespace moe {

enum class TransformKind {
  rotate,   // degrees, about the image centre
  shear,    // horizontal shear factor
  elastic,  // peak displacement in pixels of a smooth per-user field
  stroke,   // >0 thickens, <0 thins; |magnitude| <= 1
};

std::string to_string(TransformKind kind);
TransformKind transform_kind_from_string(const std::string& s);

struct Transform {
  TransformKind kind = TransformKind::rotate;
  double magnitude = 0.0;

  friend bool operator==(const Transform&, const Transform&) = default;
};

/// A synthetic user: a fixed handwriting distortion applied to held-out
/// generic samples.
struct UserProfile {
  std::size_t user_id = 0;
  std::vector<Transform> transform_chain;
  std::uint64_t seed = 0;

  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

/// Magnitude ranges a profile's chain is drawn from. Signs of rotation,
/// shear and stroke are random per user.
struct DistortionRanges {
  double rotate_min = 14.0, rotate_max = 25.0;
  double shear_min = 0.15, shear_max = 0.35;
  double elastic_min = 1.5, elastic_max = 2.5;
  double stroke_min = 0.5, stroke_max = 1.0;
};

/// Deterministic in (user_id, seed).
UserProfile make_user_profile(std::size_t user_id, std::uint64_t seed,
                              const DistortionRanges& ranges = {});

Tensor apply_transform(const Tensor& image, const Transform& t, std::uint64_t field_seed);
/// Applies the chain in order and clips pixels to [0, 1]. An empty chain
/// (or all-zero magnitudes) returns the image unchanged.
Tensor apply_chain(const Tensor& image, const UserProfile& profile);

struct UserData {
  LabeledSet train;
  LabeledSet test;
  /// Index into the base set of every train / test sample.
  std::vector<std::size_t> train_source;
  std::vector<std::size_t> test_source;
};

UserData synthesize_user(const LabeledSet& base, const UserProfile& profile,
                         std::size_t train_per_class, std::size_t test_per_class);

void to_json(nlohmann::json& j, const UserProfile& p);
void from_json(const nlohmann::json& j, UserProfile& p);

}  // namespace moe
