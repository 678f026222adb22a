// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations and helpers shared by the tests.
// Nothing here calls into the library's layer kernels.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "moe/layers.hpp"
#include "moe/network.hpp"

namespace moe::testing {

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& gen, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(shape);
  for (auto& v : t.data()) v = d(gen);
  return t;
}

inline LayerParams random_conv(std::size_t k, std::size_t cin, std::size_t cout,
                               std::mt19937_64& gen) {
  return {random_tensor({k, k, cin, cout}, gen), random_tensor({cout}, gen), false};
}

inline LayerParams random_fc(std::size_t nin, std::size_t nout, std::mt19937_64& gen) {
  return {random_tensor({nin, nout}, gen), random_tensor({nout}, gen), false};
}

// Direct transcription of the valid-convolution definition.
inline Tensor oracle_conv(const Tensor& in, const Tensor& w, const Tensor& b, std::size_t stride) {
  const std::size_t H = in.dim(0), W = in.dim(1), C = in.dim(2);
  const std::size_t K = w.dim(0), F = w.dim(3);
  const std::size_t OH = (H - K) / stride + 1, OW = (W - K) / stride + 1;
  Tensor out({OH, OW, F});
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t oy = 0; oy < OH; ++oy)
      for (std::size_t ox = 0; ox < OW; ++ox) {
        double s = b[f];
        for (std::size_t ky = 0; ky < K; ++ky)
          for (std::size_t kx = 0; kx < K; ++kx)
            for (std::size_t c = 0; c < C; ++c)
              s += in.at(oy * stride + ky, ox * stride + kx, c) *
                   w[((ky * K + kx) * C + c) * F + f];
        out.at(oy, ox, f) = s;
      }
  return out;
}

inline Tensor oracle_maxpool(const Tensor& in, std::size_t window, std::size_t stride) {
  const std::size_t OH = (in.dim(0) - window) / stride + 1;
  const std::size_t OW = (in.dim(1) - window) / stride + 1;
  Tensor out({OH, OW, in.dim(2)});
  for (std::size_t c = 0; c < in.dim(2); ++c)
    for (std::size_t oy = 0; oy < OH; ++oy)
      for (std::size_t ox = 0; ox < OW; ++ox) {
        double m = -INFINITY;
        for (std::size_t y = 0; y < window; ++y)
          for (std::size_t x = 0; x < window; ++x)
            m = std::max(m, in.at(oy * stride + y, ox * stride + x, c));
        out.at(oy, ox, c) = m;
      }
  return out;
}

inline Tensor oracle_fc(const Tensor& in, const Tensor& w, const Tensor& b) {
  const std::size_t nin = w.dim(0), nout = w.dim(1);
  Tensor out({nout});
  for (std::size_t j = 0; j < nout; ++j) {
    double s = b[j];
    for (std::size_t i = 0; i < nin; ++i) s += in[i] * w[i * nout + j];
    out[j] = s;
  }
  return out;
}

inline double oracle_cross_entropy(const std::vector<double>& logits, std::size_t label) {
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  return -(logits[label] - m - std::log(z));
}

// Central difference of f with respect to every element of x.
template <typename F>
std::vector<double> numeric_gradient(Tensor& x, F&& f, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f();
    x[i] = keep - h;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// max |a - b| / max(floor, |a|, |b|) over all elements.
inline double max_relative_error(std::span<const double> a, std::span<const double> b,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({floor, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("moe-test-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace moe::testing
