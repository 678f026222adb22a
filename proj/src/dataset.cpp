// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <tuple>

#include "moe/random.hpp"

namespace moe {
namespace {

constexpr std::uint32_t kImageSideForIdx = 28;

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IdxError(IdxError::Kind::io, "cannot open IDX file " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at,
                   const std::filesystem::path& path) {
  if (b.size() < at + 4)
    throw IdxError(IdxError::Kind::truncated, path.string() + ": header truncated");
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void put_be32(std::ofstream& f, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  f.write(b, 4);
}

std::string hex(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex;
  os.width(8);
  os.fill('0');
  os << v;
  return os.str();
}

void check_magic(std::uint32_t actual, std::uint32_t expected, const std::filesystem::path& p) {
  if (actual != expected)
    throw IdxError(IdxError::Kind::bad_magic, p.string() + ": expected magic " + hex(expected) +
                                                  ", found " + hex(actual));
}

}  // namespace

void LabeledSet::validate() const {
  if (images.size() != labels.size())
    throw Error("labeled set has " + std::to_string(images.size()) + " images but " +
                std::to_string(labels.size()) + " labels");
  for (auto l : labels)
    if (l >= class_count)
      throw Error("label " + std::to_string(l) + " >= class count " + std::to_string(class_count));
}

std::vector<std::size_t> LabeledSet::class_counts() const {
  std::vector<std::size_t> counts(class_count, 0);
  for (auto l : labels) ++counts.at(l);
  return counts;
}

std::vector<std::vector<std::size_t>> LabeledSet::indices_by_class() const {
  std::vector<std::vector<std::size_t>> out(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) out.at(labels[i]).push_back(i);
  return out;
}

LabeledSet LabeledSet::subset(const std::vector<std::size_t>& indices) const {
  LabeledSet out;
  out.class_count = class_count;
  out.images.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    out.images.push_back(images.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

LabeledSet load_idx(const std::filesystem::path& images_path,
                    const std::filesystem::path& labels_path, std::size_t class_count) {
  const auto ib = slurp(images_path);
  const auto lb = slurp(labels_path);
  check_magic(be32(ib, 0, images_path), kIdxImageMagic, images_path);
  check_magic(be32(lb, 0, labels_path), kIdxLabelMagic, labels_path);

  const std::size_t n = be32(ib, 4, images_path);
  const std::size_t rows = be32(ib, 8, images_path);
  const std::size_t cols = be32(ib, 12, images_path);
  const std::size_t nl = be32(lb, 4, labels_path);
  if (rows != kImageSideForIdx || cols != kImageSideForIdx)
    throw IdxError(IdxError::Kind::bad_shape, images_path.string() + ": expected 28x28 images, found " +
                                                  std::to_string(rows) + "x" + std::to_string(cols));
  if (ib.size() < 16 + n * rows * cols)
    throw IdxError(IdxError::Kind::truncated,
                   images_path.string() + ": header declares " + std::to_string(n) +
                       " images but the file holds only " + std::to_string(ib.size()) + " bytes");
  if (lb.size() < 8 + nl)
    throw IdxError(IdxError::Kind::truncated,
                   labels_path.string() + ": header declares " + std::to_string(nl) +
                       " labels but the file holds only " + std::to_string(lb.size()) + " bytes");
  if (n != nl)
    throw IdxError(IdxError::Kind::count_mismatch, images_path.string() + " has " +
                                                       std::to_string(n) + " images but " +
                                                       labels_path.string() + " has " +
                                                       std::to_string(nl) + " labels");

  LabeledSet set;
  set.images.reserve(n);
  set.labels.reserve(n);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> px(rows * cols);
    const auto* src = ib.data() + 16 + i * rows * cols;
    for (std::size_t p = 0; p < px.size(); ++p) px[p] = src[p] / 255.0;
    set.images.emplace_back(Shape{rows, cols, 1}, std::move(px));
    set.labels.push_back(lb[8 + i]);
    max_label = std::max<std::size_t>(max_label, lb[8 + i]);
  }
  set.class_count = class_count ? class_count : (n ? max_label + 1 : 0);
  if (n && max_label >= set.class_count)
    throw IdxError(IdxError::Kind::bad_label, labels_path.string() + ": label " +
                                                  std::to_string(max_label) + " >= class count " +
                                                  std::to_string(set.class_count));
  return set;
}

void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               const LabeledSet& set) {
  set.validate();
  std::ofstream fi(images_path, std::ios::binary | std::ios::trunc);
  std::ofstream fl(labels_path, std::ios::binary | std::ios::trunc);
  if (!fi) throw IdxError(IdxError::Kind::io, "cannot write " + images_path.string());
  if (!fl) throw IdxError(IdxError::Kind::io, "cannot write " + labels_path.string());
  put_be32(fi, kIdxImageMagic);
  put_be32(fi, static_cast<std::uint32_t>(set.size()));
  put_be32(fi, kImageSideForIdx);
  put_be32(fi, kImageSideForIdx);
  put_be32(fl, kIdxLabelMagic);
  put_be32(fl, static_cast<std::uint32_t>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& img = set.images[i];
    if (img.size() != kImageSideForIdx * kImageSideForIdx)
      throw ShapeError("write_idx: image " + std::to_string(i) + " has shape " +
                       shape_string(img.shape()));
    std::string row(img.size(), '\0');
    for (std::size_t p = 0; p < img.size(); ++p)
      row[p] = static_cast<char>(
          static_cast<std::uint8_t>(std::lround(std::clamp(img[p], 0.0, 1.0) * 255.0)));
    fi.write(row.data(), static_cast<std::streamsize>(row.size()));
    if (set.labels[i] > 255) throw Error("write_idx: label does not fit in a byte");
    const char l = static_cast<char>(set.labels[i]);
    fl.write(&l, 1);
  }
  if (!fi || !fl) throw IdxError(IdxError::Kind::io, "failed writing IDX output");
}

LabeledSet balance_classes(const LabeledSet& set, std::uint64_t seed) {
  set.validate();
  const auto by_class = set.indices_by_class();
  std::size_t target = set.size();
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty())
      throw Error("balance_classes: class " + std::to_string(c) + " has no samples");
    target = std::min(target, by_class[c].size());
  }
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (const auto& members : by_class) {
    for (auto pick : rng.sample_without_replacement(members.size(), target))
      keep.push_back(members[pick]);
  }
  std::sort(keep.begin(), keep.end());
  return set.subset(keep);
}

LabeledSet restrict_classes(const LabeledSet& set, std::size_t classes) {
  if (classes < 2) throw Error("restrict_classes: need at least 2 classes");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < set.size(); ++i)
    if (set.labels[i] < classes) keep.push_back(i);
  auto out = set.subset(keep);
  out.class_count = classes;
  return out;
}

LabeledSet cap_per_class(const LabeledSet& set, std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (const auto& members : set.indices_by_class()) {
    const auto take = std::min(per_class, members.size());
    for (auto pick : rng.sample_without_replacement(members.size(), take))
      keep.push_back(members[pick]);
  }
  std::sort(keep.begin(), keep.end());
  return set.subset(keep);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_indices(
    const std::vector<std::size_t>& labels, std::size_t class_count, double fraction,
    std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw Error("stratified split: fraction must lie in (0, 1), got " + std::to_string(fraction));
  std::vector<std::vector<std::size_t>> by_class(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class.at(labels[i]).push_back(i);
  Rng rng(seed);
  std::vector<bool> to_second(labels.size(), false);
  for (const auto& members : by_class) {
    if (members.size() < 2) continue;
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    take = std::clamp<std::size_t>(take, 1, members.size() - 1);
    for (auto pick : rng.sample_without_replacement(members.size(), take))
      to_second[members[pick]] = true;
  }
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    (to_second[i] ? out.second : out.first).push_back(i);
  return out;
}

Split stratified_split(const LabeledSet& set, double fraction, std::uint64_t seed) {
  set.validate();
  Split s;
  std::tie(s.first_index, s.second_index) =
      stratified_indices(set.labels, set.class_count, fraction, seed);
  s.first = set.subset(s.first_index);
  s.second = set.subset(s.second_index);
  return s;
}

std::pair<LabeledSet, LabeledSet> split_validation(const LabeledSet& set, double fraction,
                                                   std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 0.5))
    throw Error("split_validation: fraction must lie in (0, 0.5), got " + std::to_string(fraction));
  auto s = stratified_split(set, fraction, seed);
  return {std::move(s.first), std::move(s.second)};
}

LabeledSet gn_mixture(const LabeledSet& customized_train, const LabeledSet& generic_pool,
                      std::uint64_t seed) {
  if (customized_train.empty()) throw Error("gn_mixture: customized training set is empty");
  if (generic_pool.size() < customized_train.size())
    throw Error("gn_mixture: generic pool has " + std::to_string(generic_pool.size()) +
                " samples, need at least " + std::to_string(customized_train.size()));
  Rng rng(seed);
  LabeledSet out;
  out.class_count = 2;
  out.images = customized_train.images;
  out.labels.assign(customized_train.size(), kCustomizedOrigin);
  for (auto i : rng.sample_without_replacement(generic_pool.size(), customized_train.size())) {
    out.images.push_back(generic_pool.images[i]);
    out.labels.push_back(kGenericOrigin);
  }
  return out;
}

nlohmann::json manifest(const LabeledSet& set) {
  return {{"size", set.size()}, {"class_count", set.class_count}, {"per_class", set.class_counts()}};
}

}  // namespace moe
