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

#include "scgnet/gcn.hpp"

#include <cmath>

namespace scg {

GcnLayerParams make_gcn_layer(std::size_t d_in, std::size_t d_out, bool relu_and_bn, std::mt19937_64& rng) {
  const Real bound = std::sqrt(1.0 / static_cast<Real>(d_in));
  std::uniform_real_distribution<Real> dist(-bound, bound);
  Buffer w(d_in * d_out);
  for (auto& v : w) v = dist(rng);
  GcnLayerParams p;
  p.theta = Tensor::from_data({d_in, d_out}, std::move(w), true);
  p.use_relu = relu_and_bn;
  p.use_batchnorm = relu_and_bn;
  if (relu_and_bn) p.bn = make_batchnorm(d_out);
  return p;
}

Tensor normalize_adjacency(const Tensor& a) {
  if ((a.rank() != 2 && a.rank() != 3) || a.dim(a.rank() - 1) != a.dim(a.rank() - 2)) {
    throw ShapeError("normalize_adjacency expects [n, n] or [b, n, n], got " + shape_str(a.shape()));
  }
  const std::size_t n = a.dim(a.rank() - 1);
  auto with_loops = a + Tensor::eye(n);
  return with_loops / sqrt_degree_outer(sum(with_loops, {a.rank() - 1}));
}

Tensor gcn_layer(const Tensor& a_hat, const Tensor& x, GcnLayerParams& p) {
  if (x.rank() != a_hat.rank() || x.dim(x.rank() - 2) != a_hat.dim(a_hat.rank() - 1)) {
    throw ShapeError("gcn_layer: adjacency " + shape_str(a_hat.shape()) + " does not match features " +
                     shape_str(x.shape()));
  }
  if (x.dim(x.rank() - 1) != p.in_features()) {
    throw ShapeError("gcn_layer: features " + shape_str(x.shape()) + " do not match theta " +
                     shape_str(p.theta.shape()));
  }
  auto h = matmul(matmul(a_hat, x), p.theta);
  if (p.use_batchnorm) {
    const Shape shape = h.shape();
    const std::size_t d = p.out_features();
    h = reshape(batchnorm(reshape(h, {h.numel() / d, d}), p.bn), shape);
  }
  if (p.use_relu) h = relu(h);
  return h;
}

Tensor gcn_stack(const Tensor& a_hat, const Tensor& x, std::span<GcnLayerParams> layers) {
  for (std::size_t i = 1; i < layers.size(); ++i) {
    if (layers[i - 1].out_features() != layers[i].in_features()) {
      throw ShapeError("gcn_stack: layer " + std::to_string(i - 1) + " emits " +
                       std::to_string(layers[i - 1].out_features()) + " features, layer " + std::to_string(i) +
                       " expects " + std::to_string(layers[i].in_features()));
    }
  }
  Tensor h = x;
  for (auto& layer : layers) h = gcn_layer(a_hat, h, layer);
  return h;
}

}  // namespace scg
