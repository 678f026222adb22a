// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace moe {
namespace {

constexpr char kMagic[4] = {'M', 'O', 'E', 'W'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  void need(std::size_t n, const char* what) const {
    if (in_.size() - pos_ < n)
      throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::string str(std::size_t n) {
    need(n, "name");
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& entries) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    w.u32(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.u32(static_cast<std::uint32_t>(e.tensor.rank()));
    for (auto d : e.tensor.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : e.tensor.data()) w.f64(v);
  }
  return std::move(w.out);
}

std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw CheckpointError("not a MOEW checkpoint (bad magic)");
  std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
  Reader r(body);
  const auto version = r.u32("version");
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported MOEW version " + std::to_string(version));
  const auto count = r.u32("entry count");
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor e;
    e.name = r.str(r.u32("name length"));
    const auto rank = r.u32("rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.u32("dimension");
    const std::size_t n = shape_size(shape);
    r.need(n * 8, "tensor data");
    std::vector<double> data(n);
    for (auto& v : data) v = r.f64();
    e.tensor = Tensor(std::move(shape), std::move(data));
    out.push_back(std::move(e));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after MOEW payload");
  return out;
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& entries) {
  const auto bytes = encode_checkpoint(entries);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CheckpointError("failed writing " + path.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

std::vector<NamedTensor> export_params(const Network& net) {
  std::vector<NamedTensor> out;
  for (auto i : net.param_layers()) {
    const auto& name = net.spec().layers[i].name;
    out.push_back({name + ".weight", net.params(i).weights});
    out.push_back({name + ".bias", net.params(i).biases});
  }
  return out;
}

void import_params(Network& net, const std::vector<NamedTensor>& entries) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e.tensor;
  for (auto i : net.param_layers()) {
    const auto& name = net.spec().layers[i].name;
    auto& p = net.mutable_params(i);
    for (auto [suffix, dst] : {std::pair{".weight", &p.weights}, std::pair{".bias", &p.biases}}) {
      auto it = by_name.find(name + suffix);
      if (it == by_name.end())
        throw CheckpointError("checkpoint lacks '" + name + suffix + "' for network '" +
                              net.spec().name + "'");
      if (it->second->shape() != dst->shape())
        throw CheckpointError("'" + name + suffix + "' has shape " +
                              shape_string(it->second->shape()) + ", network expects " +
                              shape_string(dst->shape()));
      *dst = *it->second;
    }
  }
  net.mark_initialized();
}

void save_network(const std::filesystem::path& path, const Network& net) {
  write_checkpoint(path, export_params(net));
}

Network load_network(const std::filesystem::path& path, const NetworkSpec& spec) {
  Network net(spec);
  import_params(net, read_checkpoint(path));
  return net;
}

std::uint64_t params_hash(const Network& net) { return fnv1a(encode_checkpoint(export_params(net))); }

std::uint64_t params_hash(const Network& net, const std::vector<std::size_t>& layers) {
  std::vector<NamedTensor> subset;
  for (auto i : layers) {
    subset.push_back({net.spec().layers.at(i).name + ".weight", net.params(i).weights});
    subset.push_back({net.spec().layers.at(i).name + ".bias", net.params(i).biases});
  }
  return fnv1a(encode_checkpoint(subset));
}

}  // namespace moe
