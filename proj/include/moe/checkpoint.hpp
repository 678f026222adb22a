// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "moe/network.hpp"

namespace moe {

// MOEW weight checkpoint, all integers little-endian:
//   "MOEW"  u32 version  u32 entry_count
//   per entry: u32 name_len, name bytes (UTF-8), u32 rank, rank x u32 dims,
//              product(dims) x f64

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  using Error::Error;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

/// "<layer>.weight" / "<layer>.bias" for every parameterized layer.
std::vector<NamedTensor> export_params(const Network& net);
/// Loads parameters by name; every parameterized layer must be present with
/// a matching shape. Marks the network initialized.
void import_params(Network& net, const std::vector<NamedTensor>& entries);

void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path, const NetworkSpec& spec);

/// FNV-1a over the encoded checkpoint bytes.
std::uint64_t params_hash(const Network& net);
/// Same, restricted to the listed layers.
std::uint64_t params_hash(const Network& net, const std::vector<std::size_t>& layers);

}  // namespace moe
