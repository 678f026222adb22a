// Copyright 2026 The moe-custom Authors
// SPDX-License-Identifier: Apache-2.0

#include "moe/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace moe {
namespace {

thread_local std::uint64_t g_macs = 0;

std::size_t pooled_extent(std::size_t extent, std::size_t window,
                          std::size_t stride, const char* what) {
  if (window == 0 || stride == 0 || extent < window || (extent - window) % stride != 0)
    throw ShapeError(std::string(what) + ": extent " + std::to_string(extent) +
                     " is not covered by window " + std::to_string(window) +
                     " with stride " + std::to_string(stride));
  return (extent - window) / stride + 1;
}

void require_rank3(const Tensor& t, const char* what) {
  if (t.rank() != 3)
    throw ShapeError(std::string(what) + ": expected H x W x C input, got " +
                     shape_string(t.shape()));
}

}  // namespace

std::uint64_t mac_count() { return g_macs; }
void reset_mac_count() { g_macs = 0; }

Tensor conv2d(const Tensor& input, const LayerParams& params, std::size_t stride) {
  require_rank3(input, "conv2d");
  const auto& ws = params.weights.shape();
  if (ws.size() != 4 || ws[0] != ws[1])
    throw ShapeError("conv2d: kernel must be k x k x Cin x Cout, got " + shape_string(ws));
  const std::size_t k = ws[0], cin = ws[2], cout = ws[3];
  if (input.dim(2) != cin)
    throw ShapeError("conv2d: input has " + std::to_string(input.dim(2)) +
                     " channels but kernel expects " + std::to_string(cin));
  if (params.biases.size() != cout)
    throw ShapeError("conv2d: bias length " + std::to_string(params.biases.size()) +
                     " != output channels " + std::to_string(cout));
  const std::size_t h = input.dim(0), w = input.dim(1);
  const std::size_t oh = pooled_extent(h, k, stride, "conv2d height");
  const std::size_t ow = pooled_extent(w, k, stride, "conv2d width");

  Tensor out({oh, ow, cout});
  const double* in = input.data().data();
  const double* wt = params.weights.data().data();
  const double* b = params.biases.data().data();
  double* o = out.data().data();
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double* orow = o + (y * ow + x) * cout;
      std::copy(b, b + cout, orow);
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double* irow = in + ((y * stride + ky) * w + (x * stride + kx)) * cin;
          const double* wrow = wt + (ky * k + kx) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double v = irow[ci];
            const double* wc = wrow + ci * cout;
            for (std::size_t co = 0; co < cout; ++co) orow[co] += v * wc[co];
          }
        }
      }
    }
  }
  g_macs += static_cast<std::uint64_t>(oh) * ow * k * k * cin * cout;
  return out;
}

ConvGrads conv2d_backward(const Tensor& input, const LayerParams& params,
                          std::size_t stride, const Tensor& d_output,
                          bool want_params, bool want_input) {
  const auto& ws = params.weights.shape();
  const std::size_t k = ws[0], cin = ws[2], cout = ws[3];
  const std::size_t w = input.dim(1);
  const std::size_t oh = d_output.dim(0), ow = d_output.dim(1);
  if (d_output.rank() != 3 || d_output.dim(2) != cout)
    throw ShapeError("conv2d_backward: upstream gradient " + shape_string(d_output.shape()) +
                     " does not match output channels " + std::to_string(cout));

  ConvGrads g;
  if (want_params) {
    g.d_weights = Tensor::zeros_like(params.weights);
    g.d_biases = Tensor::zeros_like(params.biases);
  }
  if (want_input) g.d_input = Tensor::zeros_like(input);

  const double* in = input.data().data();
  const double* wt = params.weights.data().data();
  const double* go = d_output.data().data();
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      const double* grow = go + (y * ow + x) * cout;
      if (want_params)
        for (std::size_t co = 0; co < cout; ++co) g.d_biases[co] += grow[co];
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const std::size_t ioff = ((y * stride + ky) * w + (x * stride + kx)) * cin;
          const std::size_t woff = (ky * k + kx) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double* wc = wt + woff + ci * cout;
            if (want_params) {
              const double v = in[ioff + ci];
              double* dw = g.d_weights.data().data() + woff + ci * cout;
              for (std::size_t co = 0; co < cout; ++co) dw[co] += v * grow[co];
            }
            if (want_input) {
              double acc = 0.0;
              for (std::size_t co = 0; co < cout; ++co) acc += wc[co] * grow[co];
              g.d_input[ioff + ci] += acc;
            }
          }
        }
      }
    }
  }
  return g;
}

PoolResult maxpool(const Tensor& input, std::size_t window, std::size_t stride) {
  require_rank3(input, "maxpool");
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  const std::size_t oh = pooled_extent(h, window, stride, "maxpool height");
  const std::size_t ow = pooled_extent(w, window, stride, "maxpool width");

  PoolResult r{Tensor({oh, ow, c}), std::vector<std::size_t>(oh * ow * c)};
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_at = 0;
        for (std::size_t py = 0; py < window; ++py) {
          for (std::size_t px = 0; px < window; ++px) {
            const std::size_t at = ((y * stride + py) * w + (x * stride + px)) * c + ch;
            // Strict comparison keeps the first maximum in scan order.
            if (input[at] > best) {
              best = input[at];
              best_at = at;
            }
          }
        }
        const std::size_t o = (y * ow + x) * c + ch;
        r.output[o] = best;
        r.argmax[o] = best_at;
      }
    }
  }
  return r;
}

Tensor maxpool_backward(const Shape& input_shape,
                        const std::vector<std::size_t>& argmax,
                        const Tensor& d_output) {
  if (argmax.size() != d_output.size())
    throw ShapeError("maxpool_backward: argmax map has " + std::to_string(argmax.size()) +
                     " entries, upstream gradient has " + std::to_string(d_output.size()));
  Tensor d_input(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) d_input[argmax[i]] += d_output[i];
  return d_input;
}

Tensor fully_connected(const Tensor& input, const LayerParams& params) {
  const auto& ws = params.weights.shape();
  if (ws.size() != 2)
    throw ShapeError("fully_connected: weights must be Nin x Nout, got " + shape_string(ws));
  const std::size_t nin = ws[0], nout = ws[1];
  if (input.size() != nin)
    throw ShapeError("fully_connected: input " + shape_string(input.shape()) + " has " +
                     std::to_string(input.size()) + " elements, layer expects " +
                     std::to_string(nin));
  if (params.biases.size() != nout)
    throw ShapeError("fully_connected: bias length " + std::to_string(params.biases.size()) +
                     " != " + std::to_string(nout));

  Tensor out({nout}, params.biases.values());
  double* o = out.data().data();
  const double* wt = params.weights.data().data();
  for (std::size_t i = 0; i < nin; ++i) {
    const double v = input[i];
    const double* wrow = wt + i * nout;
    for (std::size_t j = 0; j < nout; ++j) o[j] += v * wrow[j];
  }
  g_macs += static_cast<std::uint64_t>(nin) * nout;
  return out;
}

FcGrads fully_connected_backward(const Tensor& input, const LayerParams& params,
                                 const Tensor& d_output, bool want_params,
                                 bool want_input) {
  const std::size_t nin = params.weights.dim(0), nout = params.weights.dim(1);
  if (d_output.size() != nout)
    throw ShapeError("fully_connected_backward: upstream gradient has " +
                     std::to_string(d_output.size()) + " elements, layer has " +
                     std::to_string(nout) + " outputs");
  FcGrads g;
  const double* wt = params.weights.data().data();
  const double* go = d_output.data().data();
  if (want_params) {
    g.d_weights = Tensor::zeros_like(params.weights);
    g.d_biases = Tensor({nout}, d_output.values());
    double* dw = g.d_weights.data().data();
    for (std::size_t i = 0; i < nin; ++i) {
      const double v = input[i];
      double* row = dw + i * nout;
      for (std::size_t j = 0; j < nout; ++j) row[j] = v * go[j];
    }
  }
  if (want_input) {
    g.d_input = Tensor::zeros_like(input);
    for (std::size_t i = 0; i < nin; ++i) {
      const double* wrow = wt + i * nout;
      double acc = 0.0;
      for (std::size_t j = 0; j < nout; ++j) acc += wrow[j] * go[j];
      g.d_input[i] = acc;
    }
  }
  return g;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& d_output) {
  if (input.size() != d_output.size())
    throw ShapeError("relu_backward: input " + shape_string(input.shape()) +
                     " vs upstream " + shape_string(d_output.shape()));
  Tensor g = d_output;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (input[i] <= 0.0) g[i] = 0.0;
  return g;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - peak);
    total += p[i];
  }
  for (auto& v : p) v /= total;
  return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::size_t label) {
  const std::size_t k = logits.size();
  if (k < 2) throw ShapeError("softmax_cross_entropy: need at least 2 logits");
  if (label >= k)
    throw ShapeError("softmax_cross_entropy: label " + std::to_string(label) +
                     " out of range for " + std::to_string(k) + " classes");
  LossResult r;
  const double peak = *std::max_element(logits.data().begin(), logits.data().end());
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += std::exp(logits[i] - peak);
  const double log_z = peak + std::log(total);
  r.loss = log_z - logits[label];
  r.probabilities.resize(k);
  r.d_logits = Tensor({k});
  for (std::size_t i = 0; i < k; ++i) {
    r.probabilities[i] = std::exp(logits[i] - log_z);
    r.d_logits[i] = r.probabilities[i] - (i == label ? 1.0 : 0.0);
  }
  return r;
}

}  // namespace moe
