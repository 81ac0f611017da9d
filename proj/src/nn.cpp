// Copyright 2026 The SCGNet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scgnet/nn.hpp"

#include <algorithm>
#include <cmath>

namespace scg {

ConvParams make_conv(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride,
                     std::size_t padding, std::mt19937_64& rng, bool zero_init) {
  const std::size_t fan_in = in_ch * kernel * kernel;
  const Real bound = std::sqrt(1.0 / static_cast<Real>(fan_in));
  std::uniform_real_distribution<Real> dist(-bound, bound);
  Buffer w(out_ch * fan_in, 0.0);
  Buffer b(out_ch, 0.0);
  if (!zero_init) {
    for (auto& v : w) v = dist(rng);
    for (auto& v : b) v = dist(rng);
  }
  ConvParams p;
  p.kernel = Tensor::from_data({out_ch, in_ch, kernel, kernel}, std::move(w), true);
  p.bias = Tensor::from_data({out_ch}, std::move(b), true);
  p.stride = stride;
  p.padding = padding;
  return p;
}

BatchNormParams make_batchnorm(std::size_t channels) {
  BatchNormParams p;
  p.scale = Tensor::full({channels}, 1.0, true);
  p.shift = Tensor::zeros({channels}, true);
  p.running_mean = Tensor::zeros({channels});
  p.running_var = Tensor::full({channels}, 1.0);
  return p;
}

// ---- conv2d ----------------------------------------------------------------

namespace {

struct ConvGeometry {
  std::size_t batch, in_ch, h, w, out_ch, kh, kw, stride, pad, oh, ow;
  std::size_t k() const { return in_ch * kh * kw; }
  std::size_t p() const { return oh * ow; }
};

// col[k, p] with k = (c, i, j) and p = (oy, ox).
void im2col(const Real* x, const ConvGeometry& g, Real* col) {
  const std::size_t P = g.p();
  for (std::size_t c = 0; c < g.in_ch; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        Real* row = col + ((c * g.kh + i) * g.kw + j) * P;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + i) - static_cast<long>(g.pad);
          Real* dst = row + oy * g.ow;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill(dst, dst + g.ow, 0.0);
            continue;
          }
          const Real* src = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + j) - static_cast<long>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

void col2im(const Real* col, const ConvGeometry& g, Real* dx) {
  const std::size_t P = g.p();
  for (std::size_t c = 0; c < g.in_ch; ++c) {
    for (std::size_t i = 0; i < g.kh; ++i) {
      for (std::size_t j = 0; j < g.kw; ++j) {
        const Real* row = col + ((c * g.kh + i) * g.kw + j) * P;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + i) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          Real* dst = dx + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const Real* src = row + oy * g.ow;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + j) - static_cast<long>(g.pad);
            if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const ConvParams& p) {
  if (x.rank() != 4) throw ShapeError("conv2d expects [b, ch, h, w], got " + shape_str(x.shape()));
  if (p.kernel.rank() != 4) throw ShapeError("conv2d kernel must be rank 4");
  if (x.dim(1) != p.in_channels()) {
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(x.dim(1)) +
                     " channels, kernel expects " + std::to_string(p.in_channels()));
  }
  if (p.bias.numel() != p.out_channels()) throw ShapeError("conv2d bias size does not match out_ch");
  if (p.stride == 0) throw ShapeError("conv2d stride must be positive");
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), p.out_channels(), p.kernel.dim(2),
                 p.kernel.dim(3), p.stride, p.padding, 0, 0};
  if (g.h + 2 * g.pad < g.kh || g.w + 2 * g.pad < g.kw) {
    throw ShapeError("conv2d input " + shape_str(x.shape()) + " smaller than kernel after padding");
  }
  g.oh = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
  g.ow = (g.w + 2 * g.pad - g.kw) / g.stride + 1;

  const std::size_t K = g.k(), P = g.p();
  Buffer out(g.batch * g.out_ch * P);
  Buffer col(K * P);
  auto xv = x.data();
  auto wv = p.kernel.data();
  auto bv = p.bias.data();
  for (std::size_t s = 0; s < g.batch; ++s) {
    im2col(xv.data() + s * g.in_ch * g.h * g.w, g, col.data());
    Real* os = out.data() + s * g.out_ch * P;
    for (std::size_t o = 0; o < g.out_ch; ++o) {
      Real* orow = os + o * P;
      std::fill(orow, orow + P, bv[o]);
      const Real* wrow = wv.data() + o * K;
      for (std::size_t k = 0; k < K; ++k) {
        const Real wk = wrow[k];
        const Real* crow = col.data() + k * P;
        for (std::size_t q = 0; q < P; ++q) orow[q] += wk * crow[q];
      }
    }
  }

  auto backward = [x, kernel = p.kernel, bias = p.bias, g](const Buffer& grad) {
    const std::size_t K = g.k(), P = g.p();
    std::vector<Buffer> grads(3);
    const bool need_x = x.requires_grad();
    const bool need_w = kernel.requires_grad();
    if (need_x) grads[0].assign(x.numel(), 0.0);
    if (need_w) grads[1].assign(kernel.numel(), 0.0);
    if (bias.requires_grad()) {
      grads[2].assign(g.out_ch, 0.0);
      for (std::size_t s = 0; s < g.batch; ++s)
        for (std::size_t o = 0; o < g.out_ch; ++o) {
          const Real* gr = grad.data() + (s * g.out_ch + o) * P;
          Real acc = 0.0;
          for (std::size_t q = 0; q < P; ++q) acc += gr[q];
          grads[2][o] += acc;
        }
    }
    if (!need_x && !need_w) return grads;
    auto xv = x.data();
    auto wv = kernel.data();
    Buffer col(K * P), col_t(P * K), dcol(K * P);
    for (std::size_t s = 0; s < g.batch; ++s) {
      const Real* gs = grad.data() + s * g.out_ch * P;
      if (need_w) {
        im2col(xv.data() + s * g.in_ch * g.h * g.w, g, col.data());
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t q = 0; q < P; ++q) col_t[q * K + k] = col[k * P + q];
        // dW[o, :] += sum_q g[o, q] * col_t[q, :]
        for (std::size_t o = 0; o < g.out_ch; ++o) {
          Real* dw = grads[1].data() + o * K;
          const Real* gr = gs + o * P;
          for (std::size_t q = 0; q < P; ++q) {
            const Real gq = gr[q];
            if (gq == 0.0) continue;
            const Real* ct = col_t.data() + q * K;
            for (std::size_t k = 0; k < K; ++k) dw[k] += gq * ct[k];
          }
        }
      }
      if (need_x) {
        // dcol[k, :] = sum_o W[o, k] * g[o, :]
        std::fill(dcol.begin(), dcol.end(), 0.0);
        for (std::size_t o = 0; o < g.out_ch; ++o) {
          const Real* wrow = wv.data() + o * K;
          const Real* gr = gs + o * P;
          for (std::size_t k = 0; k < K; ++k) {
            const Real wk = wrow[k];
            Real* drow = dcol.data() + k * P;
            for (std::size_t q = 0; q < P; ++q) drow[q] += wk * gr[q];
          }
        }
        col2im(dcol.data(), g, grads[0].data() + s * g.in_ch * g.h * g.w);
      }
    }
    return grads;
  };
  return make_result("conv2d", {g.batch, g.out_ch, g.oh, g.ow}, std::move(out),
                     {x, p.kernel, p.bias}, std::move(backward));
}

// ---- adaptive average pooling ----------------------------------------------

Tensor adaptive_avg_pool2d(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  if (x.rank() != 4) throw ShapeError("adaptive_avg_pool2d expects [b, d, h, w], got " + shape_str(x.shape()));
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (out_h == 0 || out_w == 0 || out_h > h || out_w > w) {
    throw ShapeError("adaptive_avg_pool2d: output " + std::to_string(out_h) + "x" + std::to_string(out_w) +
                     " larger than input " + std::to_string(h) + "x" + std::to_string(w));
  }
  auto bounds = [](std::size_t i, std::size_t in, std::size_t out) {
    std::size_t lo = (i * in) / out;
    std::size_t hi = ((i + 1) * in + out - 1) / out;
    return std::pair{lo, hi};
  };
  auto xv = x.data();
  Buffer out(planes * out_h * out_w);
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const Real* src = xv.data() + pl * h * w;
    for (std::size_t i = 0; i < out_h; ++i) {
      auto [y0, y1] = bounds(i, h, out_h);
      for (std::size_t j = 0; j < out_w; ++j) {
        auto [x0, x1] = bounds(j, w, out_w);
        Real acc = 0.0;
        for (std::size_t y = y0; y < y1; ++y)
          for (std::size_t xx = x0; xx < x1; ++xx) acc += src[y * w + xx];
        out[(pl * out_h + i) * out_w + j] = acc / static_cast<Real>((y1 - y0) * (x1 - x0));
      }
    }
  }
  auto backward = [planes, h, w, out_h, out_w, bounds](const Buffer& g) {
    Buffer gx(planes * h * w, 0.0);
    for (std::size_t pl = 0; pl < planes; ++pl) {
      Real* dst = gx.data() + pl * h * w;
      for (std::size_t i = 0; i < out_h; ++i) {
        auto [y0, y1] = bounds(i, h, out_h);
        for (std::size_t j = 0; j < out_w; ++j) {
          auto [x0, x1] = bounds(j, w, out_w);
          const Real share = g[(pl * out_h + i) * out_w + j] / static_cast<Real>((y1 - y0) * (x1 - x0));
          for (std::size_t y = y0; y < y1; ++y)
            for (std::size_t xx = x0; xx < x1; ++xx) dst[y * w + xx] += share;
        }
      }
    }
    return std::vector<Buffer>{std::move(gx)};
  };
  return make_result("adaptive_avg_pool2d", {x.dim(0), x.dim(1), out_h, out_w}, std::move(out), {x},
                     std::move(backward));
}

// ---- bilinear upsampling ---------------------------------------------------

namespace {

struct AxisSample {
  std::size_t i0, i1;
  Real w0, w1;
};

std::vector<AxisSample> axis_samples(std::size_t in, std::size_t out) {
  std::vector<AxisSample> s(out);
  const Real ratio = static_cast<Real>(in) / static_cast<Real>(out);
  for (std::size_t o = 0; o < out; ++o) {
    Real src = (static_cast<Real>(o) + 0.5) * ratio - 0.5;
    if (src < 0.0) src = 0.0;
    auto i0 = static_cast<std::size_t>(src);
    if (i0 > in - 1) i0 = in - 1;
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    const Real lambda = src - static_cast<Real>(i0);
    s[o] = {i0, i1, 1.0 - lambda, lambda};
  }
  return s;
}

}  // namespace

Tensor bilinear_upsample(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  if (x.rank() != 4) throw ShapeError("bilinear_upsample expects [b, c, h, w], got " + shape_str(x.shape()));
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (out_h < h || out_w < w) {
    throw ShapeError("bilinear_upsample: downscale requested from " + std::to_string(h) + "x" +
                     std::to_string(w) + " to " + std::to_string(out_h) + "x" + std::to_string(out_w));
  }
  auto ys = axis_samples(h, out_h);
  auto xs = axis_samples(w, out_w);
  auto xv = x.data();
  Buffer out(planes * out_h * out_w);
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const Real* src = xv.data() + pl * h * w;
    Real* dst = out.data() + pl * out_h * out_w;
    for (std::size_t i = 0; i < out_h; ++i) {
      const auto& sy = ys[i];
      const Real* r0 = src + sy.i0 * w;
      const Real* r1 = src + sy.i1 * w;
      for (std::size_t j = 0; j < out_w; ++j) {
        const auto& sx = xs[j];
        dst[i * out_w + j] = sy.w0 * (sx.w0 * r0[sx.i0] + sx.w1 * r0[sx.i1]) +
                             sy.w1 * (sx.w0 * r1[sx.i0] + sx.w1 * r1[sx.i1]);
      }
    }
  }
  auto backward = [planes, h, w, out_h, out_w, ys = std::move(ys), xs = std::move(xs)](const Buffer& g) {
    Buffer gx(planes * h * w, 0.0);
    for (std::size_t pl = 0; pl < planes; ++pl) {
      Real* dst = gx.data() + pl * h * w;
      const Real* gp = g.data() + pl * out_h * out_w;
      for (std::size_t i = 0; i < out_h; ++i) {
        const auto& sy = ys[i];
        Real* r0 = dst + sy.i0 * w;
        Real* r1 = dst + sy.i1 * w;
        for (std::size_t j = 0; j < out_w; ++j) {
          const auto& sx = xs[j];
          const Real v = gp[i * out_w + j];
          r0[sx.i0] += v * sy.w0 * sx.w0;
          r0[sx.i1] += v * sy.w0 * sx.w1;
          r1[sx.i0] += v * sy.w1 * sx.w0;
          r1[sx.i1] += v * sy.w1 * sx.w1;
        }
      }
    }
    return std::vector<Buffer>{std::move(gx)};
  };
  return make_result("bilinear_upsample", {x.dim(0), x.dim(1), out_h, out_w}, std::move(out), {x},
                     std::move(backward));
}

// ---- batch normalization ---------------------------------------------------

Tensor batchnorm(const Tensor& x, BatchNormParams& p) {
  if (x.rank() < 2) throw ShapeError("batchnorm expects [N, C, ...], got " + shape_str(x.shape()));
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (c != p.channels()) {
    throw ShapeError("batchnorm channel mismatch: input has " + std::to_string(c) + ", params have " +
                     std::to_string(p.channels()));
  }
  const std::size_t inner = x.numel() / (n * c);
  const std::size_t count = n * inner;
  auto xv = x.data();
  auto gamma = p.scale.data();
  auto beta = p.shift.data();

  Buffer mean(c, 0.0), var(c, 0.0);
  if (p.training) {
    if (count < 2) throw ShapeError("batchnorm in training mode needs more than one value per channel");
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const Real* src = xv.data() + (s * c + ch) * inner;
        for (std::size_t i = 0; i < inner; ++i) mean[ch] += src[i];
      }
    for (auto& m : mean) m /= static_cast<Real>(count);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const Real* src = xv.data() + (s * c + ch) * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          const Real d = src[i] - mean[ch];
          var[ch] += d * d;
        }
      }
    for (auto& v : var) v /= static_cast<Real>(count);
    // Running variance tracks the unbiased estimate.
    auto rm = p.running_mean.mutable_data();
    auto rv = p.running_var.mutable_data();
    const Real unbias = static_cast<Real>(count) / static_cast<Real>(count - 1);
    for (std::size_t ch = 0; ch < c; ++ch) {
      rm[ch] = (1.0 - p.momentum) * rm[ch] + p.momentum * mean[ch];
      rv[ch] = (1.0 - p.momentum) * rv[ch] + p.momentum * var[ch] * unbias;
    }
  } else {
    auto rm = p.running_mean.data();
    auto rv = p.running_var.data();
    std::copy(rm.begin(), rm.end(), mean.begin());
    std::copy(rv.begin(), rv.end(), var.begin());
  }

  Buffer inv_std(c);
  for (std::size_t ch = 0; ch < c; ++ch) inv_std[ch] = 1.0 / std::sqrt(var[ch] + p.eps);
  Buffer xhat(x.numel()), out(x.numel());
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (s * c + ch) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        xhat[base + i] = (xv[base + i] - mean[ch]) * inv_std[ch];
        out[base + i] = gamma[ch] * xhat[base + i] + beta[ch];
      }
    }

  auto backward = [x, scale = p.scale, shift = p.shift, training = p.training, n, c, inner, count,
                   inv_std = std::move(inv_std), xhat = std::move(xhat)](const Buffer& g) {
    std::vector<Buffer> grads(3);
    auto gamma = scale.data();
    Buffer dgamma(c, 0.0), dbeta(c, 0.0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t base = (s * c + ch) * inner;
        for (std::size_t i = 0; i < inner; ++i) {
          dbeta[ch] += g[base + i];
          dgamma[ch] += g[base + i] * xhat[base + i];
        }
      }
    if (x.requires_grad()) {
      Buffer gx(x.numel());
      const Real m = static_cast<Real>(count);
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t ch = 0; ch < c; ++ch) {
          const std::size_t base = (s * c + ch) * inner;
          for (std::size_t i = 0; i < inner; ++i) {
            if (training) {
              // dx = gamma*inv_std/m * (m*g - sum g - xhat * sum(g*xhat))
              gx[base + i] = gamma[ch] * inv_std[ch] / m *
                             (m * g[base + i] - dbeta[ch] - xhat[base + i] * dgamma[ch]);
            } else {
              gx[base + i] = gamma[ch] * inv_std[ch] * g[base + i];
            }
          }
        }
      grads[0] = std::move(gx);
    }
    if (scale.requires_grad()) grads[1] = std::move(dgamma);
    if (shift.requires_grad()) grads[2] = std::move(dbeta);
    return grads;
  };
  return make_result("batchnorm", x.shape(), std::move(out), {x, p.scale, p.shift}, std::move(backward));
}

Tensor sqrt_degree_outer(const Tensor& degree) {
  // One root over the product; an isolated node comes out as exactly 1.
  Shape col = degree.shape(), row = degree.shape();
  col.push_back(1);
  row.insert(row.end() - 1, 1);
  return sqrt(reshape(degree, col) * reshape(degree, row));
}

}  // namespace scg
