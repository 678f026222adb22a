// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <json.hpp>

#include "moe/tensor.hpp"

namespace moe {

/// 28x28x1 images in [0, 1] with class labels < class_count.
struct LabeledSet {
  std::vector<Tensor> images;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  void validate() const;
  std::vector<std::size_t> class_counts() const;
  /// Indices of the samples of each class, in set order.
  std::vector<std::vector<std::size_t>> indices_by_class() const;
  LabeledSet subset(const std::vector<std::size_t>& indices) const;
};

class IdxError : public Error {
 public:
  enum class Kind { io, bad_magic, bad_shape, truncated, count_mismatch, bad_label };
  IdxError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Reads an IDX image/label pair. class_count 0 infers max(label) + 1.
LabeledSet load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                    std::size_t class_count = 0);
/// Pixels are stored as round(255 * v).
void write_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
               const LabeledSet& set);

/// Downsamples every class to the smallest class count, without replacement.
LabeledSet balance_classes(const LabeledSet& set, std::uint64_t seed);

/// Keeps only samples with label < classes and sets class_count accordingly.
LabeledSet restrict_classes(const LabeledSet& set, std::size_t classes);

/// At most `per_class` samples of each class, chosen without replacement.
LabeledSet cap_per_class(const LabeledSet& set, std::size_t per_class, std::uint64_t seed);

struct Split {
  LabeledSet first;
  LabeledSet second;
  std::vector<std::size_t> first_index;
  std::vector<std::size_t> second_index;
};

/// Class-stratified partition of sample indices: round(fraction * class
/// size) samples of each class (at least one when the class has two or
/// more) go to the second list. Both lists are in ascending order.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_indices(
    const std::vector<std::size_t>& labels, std::size_t class_count, double fraction,
    std::uint64_t seed);

/// Class-stratified split: round(fraction * class size) samples of each
/// class (at least one when the class has two or more) go to `second`.
Split stratified_split(const LabeledSet& set, double fraction, std::uint64_t seed);

/// (train, validation) with 0 < fraction < 0.5.
std::pair<LabeledSet, LabeledSet> split_validation(const LabeledSet& set, double fraction,
                                                   std::uint64_t seed);

inline constexpr std::size_t kGenericOrigin = 0;
inline constexpr std::size_t kCustomizedOrigin = 1;

/// Binary set: every customized sample labelled 1 plus as many generic
/// samples (drawn without replacement) labelled 0.
LabeledSet gn_mixture(const LabeledSet& customized_train, const LabeledSet& generic_pool,
                      std::uint64_t seed);

nlohmann::json manifest(const LabeledSet& set);

}  // namespace moe
