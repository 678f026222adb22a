// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/distort.hpp"

#include <algorithm>
#include <cmath>

#include "moe/random.hpp"

namespace moe {
namespace {

double sample_bilinear(const Tensor& img, double x, double y) {
  const auto h = static_cast<long>(img.dim(0)), w = static_cast<long>(img.dim(1));
  const long x0 = static_cast<long>(std::floor(x)), y0 = static_cast<long>(std::floor(y));
  const double fx = x - static_cast<double>(x0), fy = y - static_cast<double>(y0);
  auto px = [&](long yy, long xx) {
    if (yy < 0 || xx < 0 || yy >= h || xx >= w) return 0.0;
    return img[static_cast<std::size_t>(yy * w + xx)];
  };
  return (1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) +
         fy * ((1 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1));
}

/// out(x) = in(x + displacement(x)).
template <typename Displacement>
Tensor warp(const Tensor& img, Displacement&& disp) {
  Tensor out = Tensor::zeros_like(img);
  const std::size_t h = img.dim(0), w = img.dim(1);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const auto [dx, dy] = disp(static_cast<double>(x), static_cast<double>(y));
      out[y * w + x] = sample_bilinear(img, static_cast<double>(x) + dx, static_cast<double>(y) + dy);
    }
  return out;
}

Tensor morph3x3(const Tensor& img, bool dilate) {
  Tensor out = Tensor::zeros_like(img);
  const auto h = static_cast<long>(img.dim(0)), w = static_cast<long>(img.dim(1));
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      double v = dilate ? 0.0 : 1.0;
      for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx) {
          const long yy = y + dy, xx = x + dx;
          const double p = (yy < 0 || xx < 0 || yy >= h || xx >= w)
                               ? 0.0
                               : img[static_cast<std::size_t>(yy * w + xx)];
          v = dilate ? std::max(v, p) : std::min(v, p);
        }
      out[static_cast<std::size_t>(y * w + x)] = v;
    }
  return out;
}

constexpr std::size_t kFieldGrid = 4;

}  // namespace

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::rotate: return "rotate";
    case TransformKind::shear: return "shear";
    case TransformKind::elastic: return "elastic";
    case TransformKind::stroke: return "stroke";
  }
  return "?";
}

TransformKind transform_kind_from_string(const std::string& s) {
  if (s == "rotate") return TransformKind::rotate;
  if (s == "shear") return TransformKind::shear;
  if (s == "elastic") return TransformKind::elastic;
  if (s == "stroke") return TransformKind::stroke;
  throw Error("unknown transform kind '" + s + "'");
}

UserProfile make_user_profile(std::size_t user_id, std::uint64_t seed,
                              const DistortionRanges& r) {
  if (user_id == 0) throw Error("user ids start at 1");
  UserProfile p;
  p.user_id = user_id;
  p.seed = seed;
  Rng rng(derive_seed(seed, "profile." + std::to_string(user_id)));
  auto signed_draw = [&](double lo, double hi) {
    const double m = rng.uniform(lo, hi);
    return rng.uniform() < 0.5 ? -m : m;
  };
  p.transform_chain = {
      {TransformKind::rotate, signed_draw(r.rotate_min, r.rotate_max)},
      {TransformKind::shear, signed_draw(r.shear_min, r.shear_max)},
      {TransformKind::elastic, rng.uniform(r.elastic_min, r.elastic_max)},
      {TransformKind::stroke, signed_draw(r.stroke_min, r.stroke_max)},
  };
  return p;
}

Tensor apply_transform(const Tensor& image, const Transform& t, std::uint64_t field_seed) {
  if (image.rank() != 3 || image.dim(2) != 1)
    throw ShapeError("distortions expect H x W x 1 images, got " + shape_string(image.shape()));
  if (t.magnitude == 0.0) return image;
  const double cx = (static_cast<double>(image.dim(1)) - 1) / 2;
  const double cy = (static_cast<double>(image.dim(0)) - 1) / 2;
  switch (t.kind) {
    case TransformKind::rotate: {
      // Inverse rotation maps each output pixel back into the source.
      const double a = -t.magnitude * M_PI / 180.0;
      const double c = std::cos(a), s = std::sin(a);
      return warp(image, [&](double x, double y) {
        const double ux = x - cx, uy = y - cy;
        return std::pair{c * ux - s * uy + cx - x, s * ux + c * uy + cy - y};
      });
    }
    case TransformKind::shear:
      return warp(image, [&](double, double y) { return std::pair{-t.magnitude * (y - cy), 0.0}; });
    case TransformKind::elastic: {
      Rng rng(field_seed);
      double gx[kFieldGrid][kFieldGrid], gy[kFieldGrid][kFieldGrid];
      double peak = 0.0;
      for (std::size_t i = 0; i < kFieldGrid; ++i)
        for (std::size_t j = 0; j < kFieldGrid; ++j) {
          gx[i][j] = rng.normal();
          gy[i][j] = rng.normal();
          peak = std::max(peak, std::hypot(gx[i][j], gy[i][j]));
        }
      const double scale = peak > 0.0 ? t.magnitude / peak : 0.0;
      const double span = static_cast<double>(image.dim(0) - 1) / (kFieldGrid - 1);
      return warp(image, [&](double x, double y) {
        const double fx = x / span, fy = y / span;
        const auto i0 = std::min<std::size_t>(static_cast<std::size_t>(fy), kFieldGrid - 2);
        const auto j0 = std::min<std::size_t>(static_cast<std::size_t>(fx), kFieldGrid - 2);
        const double ty = fy - static_cast<double>(i0), tx = fx - static_cast<double>(j0);
        auto lerp = [&](double g[kFieldGrid][kFieldGrid]) {
          return (1 - ty) * ((1 - tx) * g[i0][j0] + tx * g[i0][j0 + 1]) +
                 ty * ((1 - tx) * g[i0 + 1][j0] + tx * g[i0 + 1][j0 + 1]);
        };
        return std::pair{scale * lerp(gx), scale * lerp(gy)};
      });
    }
    case TransformKind::stroke: {
      const double m = std::clamp(t.magnitude, -1.0, 1.0);
      const Tensor morphed = morph3x3(image, m > 0);
      Tensor out = image;
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (1 - std::abs(m)) * image[i] + std::abs(m) * morphed[i];
      return out;
    }
  }
  return image;
}

Tensor apply_chain(const Tensor& image, const UserProfile& profile) {
  Tensor out = image;
  const auto field_seed = derive_seed(profile.seed, "field." + std::to_string(profile.user_id));
  for (const auto& t : profile.transform_chain) out = apply_transform(out, t, field_seed);
  for (auto& v : out.data()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

UserData synthesize_user(const LabeledSet& base, const UserProfile& profile,
                         std::size_t train_per_class, std::size_t test_per_class) {
  base.validate();
  const auto by_class = base.indices_by_class();
  const std::size_t need = train_per_class + test_per_class;
  for (std::size_t c = 0; c < by_class.size(); ++c)
    if (by_class[c].size() < need)
      throw Error("synthesize_user: class " + std::to_string(c) + " has " +
                  std::to_string(by_class[c].size()) + " source samples, need " +
                  std::to_string(need));

  Rng rng(derive_seed(profile.seed, "draw." + std::to_string(profile.user_id)));
  UserData u;
  u.train.class_count = u.test.class_count = base.class_count;
  for (const auto& members : by_class) {
    const auto picks = rng.sample_without_replacement(members.size(), need);
    for (std::size_t k = 0; k < need; ++k) {
      const auto src = members[picks[k]];
      const bool train = k < train_per_class;
      auto& dst = train ? u.train : u.test;
      dst.images.push_back(apply_chain(base.images[src], profile));
      dst.labels.push_back(base.labels[src]);
      (train ? u.train_source : u.test_source).push_back(src);
    }
  }
  return u;
}

void to_json(nlohmann::json& j, const UserProfile& p) {
  auto chain = nlohmann::json::array();
  for (const auto& t : p.transform_chain)
    chain.push_back({{"kind", to_string(t.kind)}, {"magnitude", t.magnitude}});
  j = {{"user_id", p.user_id}, {"seed", p.seed}, {"transform_chain", chain}};
}

void from_json(const nlohmann::json& j, UserProfile& p) {
  p.user_id = j.at("user_id").get<std::size_t>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.transform_chain.clear();
  for (const auto& t : j.at("transform_chain"))
    p.transform_chain.push_back({transform_kind_from_string(t.at("kind").get<std::string>()),
                                 t.at("magnitude").get<double>()});
}

}  // namespace moe
