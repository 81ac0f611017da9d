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

#include "scgnet/scg.hpp"

namespace scg {

namespace {

void require_square(const Tensor& a, const char* what) {
  if ((a.rank() != 2 && a.rank() != 3) || a.dim(a.rank() - 1) != a.dim(a.rank() - 2)) {
    throw ShapeError(std::string(what) + " expects [n, n] or [b, n, n], got " + shape_str(a.shape()));
  }
}

// Per-sample gamma laid out to broadcast against [b, n, *].
Tensor gamma_for(const Tensor& reference, const Tensor& gamma) {
  if (reference.rank() == 2) {
    if (gamma.numel() != 1) throw ShapeError("single-graph gamma must be a scalar");
    return reshape(gamma, {});
  }
  const std::size_t b = reference.dim(0);
  if (gamma.numel() != b) {
    throw ShapeError("gamma has " + std::to_string(gamma.numel()) + " entries for batch of " +
                     std::to_string(b));
  }
  return reshape(gamma, {b, 1, 1});
}

}  // namespace

ScgParams make_scg_params(std::size_t feature_channels, std::size_t latent_channels, std::size_t node_h,
                          std::size_t node_w, std::mt19937_64& rng) {
  ScgParams p;
  p.mu_conv = make_conv(feature_channels, latent_channels, 3, 1, 1, rng);
  // Zero weights give sigma = exp(0) = 1 at the start of training.
  p.log_sigma_conv = make_conv(feature_channels, latent_channels, 1, 1, 0, rng, /*zero_init=*/true);
  p.node_h = node_h;
  p.node_w = node_w;
  return p;
}

Tensor pool_to_nodes(const Tensor& x, std::size_t node_h, std::size_t node_w) {
  if (x.rank() != 4) throw ShapeError("pool_to_nodes expects [b, d, h, w], got " + shape_str(x.shape()));
  auto pooled = adaptive_avg_pool2d(x, node_h, node_w);
  const std::size_t b = x.dim(0), d = x.dim(1);
  return reshape(permute(pooled, {0, 2, 3, 1}), {b, node_h * node_w, d});
}

GaussianParams encode(const Tensor& nodes, const ScgParams& p) {
  const bool single = nodes.rank() == 2;
  if (!single && nodes.rank() != 3) {
    throw ShapeError("encode expects [n, d] or [b, n, d], got " + shape_str(nodes.shape()));
  }
  const std::size_t b = single ? 1 : nodes.dim(0);
  const std::size_t n = nodes.dim(nodes.rank() - 2), d = nodes.dim(nodes.rank() - 1);
  if (n != p.nodes()) {
    throw ShapeError("encode: " + std::to_string(n) + " nodes do not fill a " + std::to_string(p.node_h) +
                     "x" + std::to_string(p.node_w) + " grid");
  }
  auto grid = permute(reshape(nodes, {b, p.node_h, p.node_w, d}), {0, 3, 1, 2});
  auto to_nodes = [&](const Tensor& maps) {
    const std::size_t c = maps.dim(1);
    auto flat = reshape(permute(maps, {0, 2, 3, 1}), {b, n, c});
    return single ? reshape(flat, {n, c}) : flat;
  };
  return {to_nodes(conv2d(grid, p.mu_conv)), to_nodes(conv2d(grid, p.log_sigma_conv))};
}

LatentState reparameterize(const GaussianParams& g, Mode mode, std::mt19937_64& rng) {
  if (g.mu.shape() != g.log_sigma.shape()) {
    throw ShapeError("mu " + shape_str(g.mu.shape()) + " and log_sigma " + shape_str(g.log_sigma.shape()) +
                     " differ");
  }
  Buffer eps(g.mu.numel(), 0.0);
  if (mode == Mode::Train) {
    std::normal_distribution<Real> normal(0.0, 1.0);
    for (auto& v : eps) v = normal(rng);
  }
  LatentState s;
  s.noise = Tensor::from_data(g.mu.shape(), std::move(eps));
  s.z = mode == Mode::Train ? g.mu + g.sigma() * s.noise : g.mu;
  s.z_hat = g.mu * add_scalar(neg(g.log_sigma), 1.0);
  return s;
}

LatentState reparameterize(const GaussianParams& g, Mode mode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return reparameterize(g, mode, rng);
}

Tensor kl_loss(const GaussianParams& g) {
  if (g.mu.rank() < 2) throw ShapeError("kl_loss expects [n, c] or [b, n, c]");
  const std::size_t n = g.mu.dim(g.mu.rank() - 2);
  const std::size_t c = g.mu.dim(g.mu.rank() - 1);
  const std::size_t batch = g.mu.numel() / (n * c);
  // log sigma^2 = 2 log_sigma; sigma^2 = exp(2 log_sigma)
  auto two_ls = scale(g.log_sigma, 2.0);
  auto terms = add_scalar(two_ls - square(g.mu) - exp(two_ls), 1.0);
  return scale(sum_all(terms), -1.0 / (2.0 * static_cast<Real>(n) * static_cast<Real>(batch)));
}

Tensor decode_adjacency(const LatentState& latent) {
  return relu(matmul(latent.z, transpose(latent.z)));
}

Tensor adaptive_gamma(const Tensor& a_raw) {
  require_square(a_raw, "adaptive_gamma");
  const auto n = static_cast<Real>(a_raw.dim(a_raw.rank() - 1));
  auto trace = sum(diagonal(a_raw), {a_raw.rank() - 2});
  return sqrt(add_scalar(div(Tensor::scalar(n), add_scalar(trace, kEpsNum)), 1.0));
}

Tensor dl_loss(const Tensor& a_raw, const Tensor& gamma) {
  require_square(a_raw, "dl_loss");
  const auto n = static_cast<Real>(a_raw.dim(a_raw.rank() - 1));
  auto log_diag = log(add_scalar(clamp(diagonal(a_raw), 0.0, 1.0), kEpsNum));
  auto per_sample = sum(log_diag, {a_raw.rank() - 2});
  auto g = reshape(gamma.detach(), per_sample.shape());
  return scale(mean_all(g * per_sample), -1.0 / (n * n));
}

Tensor enhance_and_normalize(const Tensor& a_raw, const Tensor& gamma) {
  require_square(a_raw, "enhance_and_normalize");
  const std::size_t n = a_raw.dim(a_raw.rank() - 1);
  auto enhanced = a_raw + gamma_for(a_raw, gamma) * diag_embed(diagonal(a_raw)) + Tensor::eye(n);
  return enhanced / sqrt_degree_outer(sum(enhanced, {a_raw.rank() - 1}));
}

Tensor residual_prediction(const LatentState& latent, const Tensor& gamma) {
  return gamma_for(latent.z_hat, gamma) * latent.z_hat;
}

ScgOutput scg_forward(const Tensor& x, const ScgParams& p, Mode mode, std::mt19937_64& rng) {
  if (x.rank() != 4) throw ShapeError("scg_forward expects [b, d, h, w], got " + shape_str(x.shape()));
  if (p.node_h > x.dim(2) || p.node_w > x.dim(3)) {
    throw ShapeError("node grid " + std::to_string(p.node_h) + "x" + std::to_string(p.node_w) +
                     " exceeds feature map " + shape_str(x.shape()));
  }
  ScgOutput out;
  out.graph.n = p.nodes();
  out.graph.node_features = pool_to_nodes(x, p.node_h, p.node_w);
  out.gaussian = encode(out.graph.node_features, p);
  out.latent = reparameterize(out.gaussian, mode, rng);
  out.kl = kl_loss(out.gaussian);
  out.graph.a_raw = decode_adjacency(out.latent);
  out.graph.gamma = adaptive_gamma(out.graph.a_raw);
  out.dl = dl_loss(out.graph.a_raw, out.graph.gamma);
  out.graph.a_norm = enhance_and_normalize(out.graph.a_raw, out.graph.gamma);
  out.y_hat = residual_prediction(out.latent, out.graph.gamma);
  return out;
}

}  // namespace scg
