// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "moe/tensor.hpp"

namespace moe {

enum class LayerKind { conv, maxpool, fully_connected, relu };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);

/// One layer of a declarative network description. Only the fields relevant
/// to `kind` are meaningful; the rest stay zero.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::string name;
  std::size_t kernel = 0;
  std::size_t stride = 0;
  std::size_t window = 0;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;

  static LayerSpec conv(std::string name, std::size_t kernel, std::size_t in_channels,
                        std::size_t out_channels, std::size_t stride = 1);
  static LayerSpec maxpool(std::string name, std::size_t window, std::size_t stride);
  static LayerSpec fully_connected(std::string name, std::size_t fan_in, std::size_t fan_out);
  static LayerSpec relu(std::string name);

  bool has_params() const {
    return kind == LayerKind::conv || kind == LayerKind::fully_connected;
  }
  /// Kernel/matrix shape; empty for parameterless layers.
  Shape weight_shape() const;
  std::size_t bias_count() const;
  /// Output shape for the given input shape; throws ShapeError on mismatch.
  Shape output_shape(const Shape& input) const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Single source of truth from which runtime networks, weight counts and
/// MAC counts are derived.
struct NetworkSpec {
  std::string name;
  Shape input_shape;
  std::vector<LayerSpec> layers;
  std::size_t output_count = 0;
  /// The input is an activation owned by another network (the feature tap).
  bool shared_input = false;

  /// shapes()[0] is the input shape, shapes()[i + 1] the output of layer i.
  /// Validates the whole chain.
  std::vector<Shape> shapes() const;
  void validate() const;
  std::size_t index_of(const std::string& layer_name) const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kTapSide = 12;
inline constexpr std::size_t kTapChannels = 20;
/// GE layer whose output is shared with LE and GN (first pooling layer).
inline constexpr std::size_t kTapLayer = 1;

Shape tap_shape();

/// LeNet5 variant: conv5x5x20, pool2, conv5x5x50, pool2, fc500 + relu, fc(classes).
NetworkSpec build_ge(std::size_t classes = 62);
/// Pools the 12x12x20 tap down to n x n x 20, then one FC layer to `classes`.
NetworkSpec build_le(std::size_t n, std::size_t classes = 62);
/// Same structure as LE with a two-way output (generic, customized).
NetworkSpec build_gn(std::size_t m);

void to_json(nlohmann::json& j, const LayerSpec& s);
void from_json(const nlohmann::json& j, LayerSpec& s);
void to_json(nlohmann::json& j, const NetworkSpec& s);
void from_json(const nlohmann::json& j, NetworkSpec& s);

}  // namespace moe
