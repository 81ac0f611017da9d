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

// Self-constructing graph: turns a 2D feature map into a weighted, normalized
// adjacency over pooled nodes, a residual node prediction, and two
// regularizers (a KL term on the latent Gaussian and a diagonal-log term on
// the raw adjacency).
//
// Every operation accepts either a single graph (node tensors [n, c],
// adjacencies [n, n]) or a batch ([b, n, c], [b, n, n]). Batched losses are the
// mean of the per-sample losses; the adaptive factor is per sample.

#include <cstdint>
#include <random>

#include "scgnet/nn.hpp"

namespace scg {

// Additive constant for every log and division in the graph formulas.
inline constexpr Real kEpsNum = 1e-7;

struct GaussianParams {
  Tensor mu;         // [b, n, c]
  Tensor log_sigma;  // [b, n, c]

  Tensor sigma() const { return exp(log_sigma); }
};

struct LatentState {
  Tensor z;      // mu + sigma * noise (train) or mu (eval)
  Tensor z_hat;  // mu * (1 - log sigma)
  Tensor noise;  // standard normal draws, never differentiated
};

struct GraphState {
  Tensor a_raw;          // relu(Z Z^T)
  Tensor a_norm;         // normalized enhanced adjacency
  Tensor node_features;  // pooled features [b, n, d]
  Tensor gamma;          // adaptive factor, one per sample
  std::size_t n = 0;
};

struct ScgParams {
  ConvParams mu_conv;         // 3x3, padding 1
  ConvParams log_sigma_conv;  // 1x1, zero-initialized
  std::size_t node_h = 0;
  std::size_t node_w = 0;

  std::size_t nodes() const { return node_h * node_w; }
};

ScgParams make_scg_params(std::size_t feature_channels, std::size_t latent_channels, std::size_t node_h,
                          std::size_t node_w, std::mt19937_64& rng);

// [b, d, h, w] -> [b, h'*w', d]
Tensor pool_to_nodes(const Tensor& x, std::size_t node_h, std::size_t node_w);

// Nodes are laid back onto the h' x w' grid for the two convolutions.
GaussianParams encode(const Tensor& nodes, const ScgParams& p);

LatentState reparameterize(const GaussianParams& g, Mode mode, std::mt19937_64& rng);
LatentState reparameterize(const GaussianParams& g, Mode mode, std::uint64_t seed);

// -1/(2n) * sum over all n*c entries of (1 + 2 log sigma - mu^2 - sigma^2).
Tensor kl_loss(const GaussianParams& g);

Tensor decode_adjacency(const LatentState& latent);

// sqrt(1 + n / (trace(A') + eps)); scalar for [n, n], shape [b] for batches.
Tensor adaptive_gamma(const Tensor& a_raw);

// -(gamma / n^2) * sum_i log(clamp(A'_ii, 0, 1) + eps). Gamma enters as a
// constant weight (detached).
Tensor dl_loss(const Tensor& a_raw, const Tensor& gamma);

// B = A' + gamma * diag(A') + I, then D^-1/2 B D^-1/2 with D the row sums of B.
Tensor enhance_and_normalize(const Tensor& a_raw, const Tensor& gamma);

// gamma * z_hat
Tensor residual_prediction(const LatentState& latent, const Tensor& gamma);

struct ScgOutput {
  GraphState graph;
  GaussianParams gaussian;
  LatentState latent;
  Tensor y_hat;  // [b, n, c]
  Tensor kl;
  Tensor dl;
};

// Train mode samples noise from `rng`; eval mode ignores it.
ScgOutput scg_forward(const Tensor& x, const ScgParams& p, Mode mode, std::mt19937_64& rng);

}  // namespace scg
