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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "scgnet/errors.hpp"
#include "scgnet/gcn.hpp"
#include "support.hpp"

using namespace scg;
using scgtest::grads;
using scgtest::numeric_gradient;
using scgtest::random_tensor;
using scgtest::rel_diff;
using scgtest::values;

namespace {

std::vector<double> normalize_ref(const std::vector<double>& a, std::size_t n) {
  std::vector<double> b(a), d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) b[i * n + i] += 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i] += b[i * n + j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b[i * n + j] /= std::sqrt(d[i]) * std::sqrt(d[j]);
  return b;
}

Tensor random_graph(std::size_t n, std::mt19937_64& rng) {
  auto z = random_tensor({n, 3}, rng);
  return relu(matmul(z, transpose(z)));
}

Tensor permute_nodes(const Tensor& t, const std::vector<std::size_t>& perm, bool both_axes) {
  const std::size_t n = perm.size(), d = t.dim(1);
  Buffer out(t.numel());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t src_col = both_axes ? perm[j] : j;
      out[i * d + j] = t.data()[perm[i] * d + src_col];
    }
  return Tensor::from_data(t.shape(), std::move(out));
}

}  // namespace

TEST_CASE("normalize_adjacency hand value") {
  auto a = normalize_adjacency(Tensor::from_data({2, 2}, {0, 1, 1, 0}));
  for (double v : a.data()) CHECK(std::abs(v - 0.5) < 1e-15);
  // An empty graph becomes the identity.
  CHECK(values(normalize_adjacency(Tensor::zeros({3, 3}))) == values(Tensor::eye(3)));
}

TEST_CASE("normalize_adjacency matches the loop definition, single and batched") {
  std::mt19937_64 rng(1);
  auto a0 = random_graph(6, rng), a1 = random_graph(6, rng);
  CHECK(rel_diff(values(normalize_adjacency(a0)), normalize_ref(values(a0), 6)) < 1e-14);
  auto both = values(a0);
  auto v1 = values(a1);
  both.insert(both.end(), v1.begin(), v1.end());
  auto batched = normalize_adjacency(Tensor::from_data({2, 6, 6}, both));
  auto ref1 = normalize_ref(v1, 6);
  for (std::size_t i = 0; i < 36; ++i) CHECK(std::abs(batched.data()[36 + i] - ref1[i]) < 1e-14);
}

TEST_CASE("normalized adjacency is symmetric with spectral radius one") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    auto h = normalize_adjacency(random_graph(8, rng));
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(h.at({i, j}) - h.at({j, i})) <= 1e-12);
    const double rho = scgtest::spectral_radius(h.data(), 8);
    CHECK(rho <= 1.0 + 1e-8);
    CHECK(rho > 1.0 - 1e-6);
  }
}

TEST_CASE("normalize_adjacency gradients against central differences") {
  std::mt19937_64 rng(3);
  auto a = random_graph(4, rng).detach().set_requires_grad(true);
  auto w = random_tensor({4, 4}, rng);
  sum_all(normalize_adjacency(a) * w).backward();
  auto f = [&] { return sum_all(normalize_adjacency(a) * w).item(); };
  CHECK(rel_diff(grads(a), numeric_gradient(f, a.mutable_data())) < 1e-7);
}

TEST_CASE("normalize_adjacency rejects non-square input") {
  CHECK_THROWS_AS(normalize_adjacency(Tensor::zeros({2, 3})), ShapeError);
  CHECK_THROWS_AS(normalize_adjacency(Tensor::zeros({4})), ShapeError);
}

TEST_CASE("gcn_layer without batchnorm is A X theta") {
  std::mt19937_64 rng(4);
  auto p = make_gcn_layer(3, 2, false, rng);
  auto a = normalize_adjacency(random_graph(5, rng));
  auto x = random_tensor({5, 3}, rng);
  auto y = gcn_layer(a, x, p);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t o = 0; o < 2; ++o) {
      double acc = 0;
      for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t k = 0; k < 3; ++k) acc += a.at({i, j}) * x.at({j, k}) * p.theta.at({k, o});
      CHECK(std::abs(y.at({i, o}) - acc) < 1e-14);
    }
}

TEST_CASE("gcn_layer with batchnorm and relu normalizes over nodes") {
  std::mt19937_64 rng(5);
  auto p = make_gcn_layer(4, 3, true, rng);
  auto a = normalize_adjacency(random_tensor({2, 6, 6}, rng, 0, 1));
  auto x = random_tensor({2, 6, 4}, rng);
  auto y = gcn_layer(a, x, p);
  auto lin = matmul(matmul(a, x), p.theta);
  for (std::size_t o = 0; o < 3; ++o) {
    double m = 0, v = 0;
    for (std::size_t r = 0; r < 12; ++r) m += lin.data()[r * 3 + o];
    m /= 12;
    for (std::size_t r = 0; r < 12; ++r) v += std::pow(lin.data()[r * 3 + o] - m, 2);
    v /= 12;
    for (std::size_t r = 0; r < 12; ++r) {
      const double ref = std::max(0.0, (lin.data()[r * 3 + o] - m) / std::sqrt(v + 1e-5));
      CHECK(std::abs(y.data()[r * 3 + o] - ref) < 1e-12);
    }
  }
}

TEST_CASE("gcn_layer is permutation equivariant") {
  std::mt19937_64 rng(6);
  auto p = make_gcn_layer(4, 3, true, rng);
  std::vector<std::size_t> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  for (int t = 0; t < 10; ++t) {
    std::shuffle(perm.begin(), perm.end(), rng);
    auto a = normalize_adjacency(random_graph(7, rng));
    auto x = random_tensor({7, 4}, rng);
    auto y = gcn_layer(a, x, p);
    auto yp = gcn_layer(permute_nodes(a, perm, true), permute_nodes(x, perm, false), p);
    CHECK(rel_diff(values(yp), values(permute_nodes(y, perm, false))) < 1e-10);
  }
}

TEST_CASE("gcn_layer gradients against central differences") {
  std::mt19937_64 rng(7);
  auto p = make_gcn_layer(3, 4, true, rng);
  auto a = normalize_adjacency(random_graph(5, rng)).detach().set_requires_grad(true);
  auto x = random_tensor({5, 3}, rng, -1, 1, true);
  auto w = random_tensor({5, 4}, rng);
  sum_all(gcn_layer(a, x, p) * w).backward();
  auto f = [&] { return sum_all(gcn_layer(a, x, p) * w).item(); };
  CHECK(rel_diff(grads(x), numeric_gradient(f, x.mutable_data())) < 1e-6);
  CHECK(rel_diff(grads(a), numeric_gradient(f, a.mutable_data())) < 1e-6);
  CHECK(rel_diff(grads(p.theta), numeric_gradient(f, p.theta.mutable_data())) < 1e-6);
}

TEST_CASE("gcn_stack chains layers and checks widths") {
  std::mt19937_64 rng(8);
  std::vector<GcnLayerParams> layers;
  layers.push_back(make_gcn_layer(4, 2, false, rng));
  layers.push_back(make_gcn_layer(2, 3, false, rng));
  auto a = normalize_adjacency(random_graph(5, rng));
  auto x = random_tensor({5, 4}, rng);
  auto y = gcn_stack(a, x, layers);
  auto ref = gcn_layer(a, gcn_layer(a, x, layers[0]), layers[1]);
  CHECK(values(y) == values(ref));
  CHECK(values(gcn_stack(a, x, {})) == values(x));
  layers[1] = make_gcn_layer(3, 3, false, rng);
  CHECK_THROWS_AS(gcn_stack(a, x, layers), ShapeError);
  CHECK_THROWS_AS(gcn_layer(a, random_tensor({4, 4}, rng), layers[0]), ShapeError);
  CHECK_THROWS_AS(gcn_layer(a, random_tensor({5, 3}, rng), layers[0]), ShapeError);
}
