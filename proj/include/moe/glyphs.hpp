// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "moe/dataset.hpp"

namespace moe {

// Procedural handwriting-like corpus used when no IDX corpus is supplied.
// Classes 0-9 are hand-drawn digit skeletons; higher classes are
// pseudo-characters whose skeleton is derived from the class id. Every
// sample perturbs the skeleton (control-point jitter, small affine,
// stroke width) and renders it anti-aliased into a 28x28 image.

struct GlyphStyle {
  double jitter = 0.03;           // control point noise, unit coords
  double rotation_deg = 6.0;      // std-dev
  double scale_min = 0.85;
  double scale_max = 1.10;
  double shear = 0.10;            // max |shear|
  double translate = 0.06;        // max |offset|, unit coords
  double width_min = 1.3;         // stroke width, pixels
  double width_max = 2.4;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};
using Stroke = std::vector<Point>;
using Skeleton = std::vector<Stroke>;

inline constexpr std::size_t kMaxGlyphClasses = 62;
inline constexpr std::size_t kGlyphSide = 28;

/// Unit-square skeleton of a class (y grows downwards).
Skeleton glyph_skeleton(std::size_t cls);

/// Anti-aliased rendering of a skeleton already in pixel coordinates.
Tensor render_strokes(const Skeleton& pixel_strokes, double width);

Tensor render_glyph(std::size_t cls, const GlyphStyle& style, std::uint64_t seed);

/// per_class samples of each of `classes` classes, class-interleaved order.
LabeledSet generate_glyph_set(std::size_t classes, std::size_t per_class, std::uint64_t seed,
                              const GlyphStyle& style = {});

}  // namespace moe
