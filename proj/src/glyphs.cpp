// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/glyphs.hpp"

#include <algorithm>
#include <cmath>

#include "moe/random.hpp"

namespace moe {
namespace {

Stroke ellipse(double cx, double cy, double rx, double ry, double from_deg, double to_deg,
               int steps) {
  Stroke s;
  for (int i = 0; i <= steps; ++i) {
    const double a = (from_deg + (to_deg - from_deg) * i / steps) * M_PI / 180.0;
    s.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return s;
}

Skeleton digit(std::size_t d) {
  switch (d) {
    case 0: return {ellipse(0.5, 0.5, 0.28, 0.40, 0, 360, 20)};
    case 1: return {{{0.36, 0.26}, {0.52, 0.10}, {0.52, 0.90}}};
    case 2:
      return {{{0.25, 0.30}, {0.34, 0.14}, {0.55, 0.09}, {0.73, 0.20}, {0.72, 0.42},
               {0.25, 0.90}, {0.80, 0.90}}};
    case 3:
      return {{{0.25, 0.16}, {0.55, 0.09}, {0.74, 0.22}, {0.66, 0.42}, {0.45, 0.49},
               {0.70, 0.58}, {0.76, 0.76}, {0.58, 0.90}, {0.24, 0.86}}};
    case 4: return {{{0.62, 0.90}, {0.62, 0.10}, {0.20, 0.64}, {0.82, 0.64}}};
    case 5:
      return {{{0.76, 0.10}, {0.32, 0.10}, {0.28, 0.46}, {0.56, 0.40}, {0.76, 0.56},
               {0.72, 0.82}, {0.50, 0.91}, {0.24, 0.84}}};
    case 6:
      return {{{0.70, 0.11}, {0.44, 0.26}, {0.29, 0.54}, {0.31, 0.80}, {0.50, 0.91},
               {0.70, 0.80}, {0.70, 0.60}, {0.52, 0.50}, {0.30, 0.62}}};
    case 7: return {{{0.20, 0.12}, {0.80, 0.12}, {0.56, 0.50}, {0.44, 0.90}}};
    case 8:
      return {ellipse(0.5, 0.29, 0.19, 0.19, 0, 360, 16),
              ellipse(0.5, 0.70, 0.23, 0.21, 0, 360, 16)};
    case 9:
      return {ellipse(0.48, 0.32, 0.21, 0.21, 0, 360, 16),
              {{0.69, 0.32}, {0.64, 0.62}, {0.56, 0.90}}};
  }
  return {};
}

double segment_distance(double px, double py, const Point& a, const Point& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - px, ey = a.y + t * dy - py;
  return std::sqrt(ex * ex + ey * ey);
}

}  // namespace

Skeleton glyph_skeleton(std::size_t cls) {
  if (cls >= kMaxGlyphClasses)
    throw Error("glyph classes are limited to " + std::to_string(kMaxGlyphClasses));
  if (cls < 10) return digit(cls);
  // Pseudo-character: two or three strokes with class-seeded control points.
  Rng rng(derive_seed(0x676c797068ULL, "class." + std::to_string(cls)));
  Skeleton sk;
  const auto strokes = 2 + rng.below(2);
  for (std::uint64_t s = 0; s < strokes; ++s) {
    Stroke st;
    const auto points = 2 + rng.below(3);
    for (std::uint64_t p = 0; p < points; ++p)
      st.push_back({rng.uniform(0.15, 0.85), rng.uniform(0.1, 0.9)});
    sk.push_back(std::move(st));
  }
  return sk;
}

Tensor render_strokes(const Skeleton& strokes, double width) {
  Tensor img({kGlyphSide, kGlyphSide, 1});
  const double half = 0.5 * width;
  for (std::size_t y = 0; y < kGlyphSide; ++y) {
    for (std::size_t x = 0; x < kGlyphSide; ++x) {
      const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
      double best = 1e9;
      for (const auto& s : strokes) {
        if (s.size() == 1) best = std::min(best, segment_distance(px, py, s[0], s[0]));
        for (std::size_t i = 1; i < s.size(); ++i)
          best = std::min(best, segment_distance(px, py, s[i - 1], s[i]));
      }
      img[y * kGlyphSide + x] = std::clamp(half + 0.5 - best, 0.0, 1.0);
    }
  }
  return img;
}

Tensor render_glyph(std::size_t cls, const GlyphStyle& style, std::uint64_t seed) {
  Rng rng(seed);
  const double rot = rng.normal() * style.rotation_deg * M_PI / 180.0;
  const double sx = rng.uniform(style.scale_min, style.scale_max);
  const double sy = rng.uniform(style.scale_min, style.scale_max);
  const double shear = rng.uniform(-style.shear, style.shear);
  const double tx = rng.uniform(-style.translate, style.translate);
  const double ty = rng.uniform(-style.translate, style.translate);
  const double width = rng.uniform(style.width_min, style.width_max);
  const double c = std::cos(rot), s = std::sin(rot);

  // Unit square maps onto the central 20x20 box, as in MNIST-style corpora.
  constexpr double kBox = 20.0, kMargin = 4.0;
  Skeleton strokes = glyph_skeleton(cls);
  for (auto& stroke : strokes) {
    for (auto& p : stroke) {
      double x = p.x + rng.normal() * style.jitter - 0.5;
      double y = p.y + rng.normal() * style.jitter - 0.5;
      x = sx * (x + shear * y);
      y = sy * y;
      const double rx = c * x - s * y + 0.5 + tx;
      const double ry = s * x + c * y + 0.5 + ty;
      p = {kMargin + rx * kBox, kMargin + ry * kBox};
    }
  }
  return render_strokes(strokes, width);
}

LabeledSet generate_glyph_set(std::size_t classes, std::size_t per_class, std::uint64_t seed,
                              const GlyphStyle& style) {
  if (classes < 2 || classes > kMaxGlyphClasses)
    throw Error("glyph corpus supports 2.." + std::to_string(kMaxGlyphClasses) + " classes");
  LabeledSet set;
  set.class_count = classes;
  set.images.reserve(classes * per_class);
  set.labels.reserve(classes * per_class);
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t cls = 0; cls < classes; ++cls) {
      const auto sample_seed =
          derive_seed(seed, std::to_string(cls) + "/" + std::to_string(i));
      set.images.push_back(render_glyph(cls, style, sample_seed));
      set.labels.push_back(cls);
    }
  }
  return set;
}

}  // namespace moe
