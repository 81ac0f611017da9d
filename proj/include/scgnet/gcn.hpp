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

#include <random>
#include <span>

#include "scgnet/nn.hpp"

namespace scg {

struct GcnLayerParams {
  Tensor theta;  // [d_in, d_out]
  bool use_relu = false;
  bool use_batchnorm = false;
  BatchNormParams bn;  // over d_out channels, nodes act as the batch

  std::size_t in_features() const { return theta.dim(0); }
  std::size_t out_features() const { return theta.dim(1); }
};

GcnLayerParams make_gcn_layer(std::size_t d_in, std::size_t d_out, bool relu_and_bn, std::mt19937_64& rng);

// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I. Accepts [n, n] or [b, n, n].
Tensor normalize_adjacency(const Tensor& a);

// act(BN(A_hat X theta)) with both stages controlled by the layer flags.
Tensor gcn_layer(const Tensor& a_hat, const Tensor& x, GcnLayerParams& p);

// Applies the layers in order; an empty stack returns `x` unchanged.
Tensor gcn_stack(const Tensor& a_hat, const Tensor& x, std::span<GcnLayerParams> layers);

}  // namespace scg
