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

#pragma once

#include <cstdint>
#include <random>

#include "scgnet/tensor.hpp"

namespace scg {

enum class Mode { Train, Eval };

struct ConvParams {
  Tensor kernel;  // [out_ch, in_ch, kh, kw]
  Tensor bias;    // [out_ch]
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_channels() const { return kernel.dim(0); }
  std::size_t in_channels() const { return kernel.dim(1); }
};

struct BatchNormParams {
  Tensor scale;  // [channels]
  Tensor shift;  // [channels]
  Tensor running_mean;
  Tensor running_var;
  Real momentum = 0.1;
  Real eps = 1e-5;
  bool training = true;

  std::size_t channels() const { return scale.numel(); }
};

// Kernel and bias drawn from U(-b, b), b = sqrt(1 / fan_in). With
// `zero_init` both start at zero.
ConvParams make_conv(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, std::size_t stride,
                     std::size_t padding, std::mt19937_64& rng, bool zero_init = false);

BatchNormParams make_batchnorm(std::size_t channels);

// Cross-correlation over [b, ch, h, w].
Tensor conv2d(const Tensor& x, const ConvParams& p);

// Output cell (i, j) averages rows floor(i*h/oh) .. ceil((i+1)*h/oh) - 1 and the
// matching columns.
Tensor adaptive_avg_pool2d(const Tensor& x, std::size_t out_h, std::size_t out_w);

// align_corners = false, edge-clamped sampling.
Tensor bilinear_upsample(const Tensor& x, std::size_t out_h, std::size_t out_w);

// Normalizes over every axis except 1 (the channel axis) of [N, C, ...].
// Training mode also updates the running statistics in `p`.
Tensor batchnorm(const Tensor& x, BatchNormParams& p);

// sqrt(d_i * d_j) for degrees [n] or [b, n], shaped [n, n] or [b, n, n].
Tensor sqrt_degree_outer(const Tensor& degree);

}  // namespace scg
