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
#include "doctest.h"
#include "scgnet/errors.hpp"
#include "scgnet/tensor.hpp"
#include "support.hpp"

using namespace scg;
using scgtest::grads;
using scgtest::numeric_gradient;
using scgtest::random_tensor;
using scgtest::rel_diff;
using scgtest::values;

TEST_CASE("factories and shape queries") {
  auto t = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rank() == 2);
  CHECK(t.numel() == 6);
  CHECK(t.at({1, 2}) == 6.0);
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  CHECK(Tensor::eye(3).at({1, 1}) == 1.0);
  CHECK(Tensor::eye(3).at({0, 1}) == 0.0);
  CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(t.item(), ShapeError);
}

TEST_CASE("trailing-axis broadcasting") {
  auto a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  auto row = Tensor::from_data({3}, {10, 20, 30});
  auto col = Tensor::from_data({2, 1}, {100, 200});
  CHECK(values(a + row) == std::vector<double>{11, 22, 33, 14, 25, 36});
  CHECK(values(a + col) == std::vector<double>{101, 102, 103, 204, 205, 206});
  CHECK(broadcast_shapes({4, 1, 3}, {2, 1}) == Shape{4, 2, 3});
  CHECK_THROWS_AS(a + Tensor::zeros({2}), ShapeError);
}

TEST_CASE("broadcast gradients reduce over the expanded axes") {
  auto a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  auto b = Tensor::from_data({3}, {1, 1, 1}, true);
  sum_all(a * b).backward();
  CHECK(grads(b) == std::vector<double>{5, 7, 9});
  CHECK(grads(a) == std::vector<double>{1, 1, 1, 1, 1, 1});
}

TEST_CASE("matmul matches a brute-force triple loop") {
  std::mt19937_64 rng(1);
  auto a = random_tensor({2, 3, 4}, rng);
  auto b = random_tensor({2, 4, 5}, rng);
  auto c = matmul(a, b);
  REQUIRE(c.shape() == Shape{2, 3, 5});
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        double ref = 0;
        for (std::size_t k = 0; k < 4; ++k) ref += a.at({s, i, k}) * b.at({s, k, j});
        CHECK(c.at({s, i, j}) == doctest::Approx(ref).epsilon(1e-14));
      }
  CHECK_THROWS_AS(matmul(a, random_tensor({3, 5}, rng)), ShapeError);
}

TEST_CASE("reverse mode agrees with central differences on a composite expression") {
  std::mt19937_64 rng(2);
  auto x = random_tensor({3, 4}, rng, 0.5, 2.0, true);
  auto w = random_tensor({4, 2}, rng, -1, 1, true);
  auto f = [&] {
    auto h = softmax(matmul(log(x) * sqrt(x), w), 1);
    return sum_all(square(h) + exp(scale(h, -0.5))) + mean_all(relu(transpose(w) + Tensor::scalar(0.3)));
  };
  f().backward();
  auto fx = [&] {
    NoGradGuard g;
    return f().item();
  };
  auto gx = numeric_gradient(fx, x.mutable_data());
  auto gw = numeric_gradient(fx, w.mutable_data());
  CHECK(rel_diff(grads(x), gx) < 1e-7);
  CHECK(rel_diff(grads(w), gw) < 1e-7);
}

TEST_CASE("a tensor used twice accumulates both contributions") {
  auto x = Tensor::from_data({1}, {3.0}, true);
  sum_all(x * x + x).backward();
  CHECK(x.grad()[0] == doctest::Approx(7.0));
  // A second backward accumulates until zero_grad.
  sum_all(x * x).backward();
  CHECK(x.grad()[0] == doctest::Approx(13.0));
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("relu derivative at zero is zero") {
  auto x = Tensor::from_data({3}, {-1.0, 0.0, 2.0}, true);
  sum_all(relu(x)).backward();
  CHECK(grads(x) == std::vector<double>{0, 0, 1});
}

TEST_CASE("clamp passes gradient inside the closed interval only") {
  auto x = Tensor::from_data({5}, {-0.5, 0.0, 0.5, 1.0, 1.5}, true);
  auto y = clamp(x, 0.0, 1.0);
  CHECK(values(y) == std::vector<double>{0, 0, 0.5, 1, 1});
  sum_all(y).backward();
  CHECK(grads(x) == std::vector<double>{0, 1, 1, 1, 0});
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(log(Tensor::from_data({1}, {-1.0})), DomainError);
  CHECK_THROWS_AS(sqrt(Tensor::from_data({1}, {-1e-3})), DomainError);
  CHECK_THROWS_AS(log(Tensor::from_data({1}, {std::nan("")})), DomainError);
  CHECK(std::isinf(log(Tensor::from_data({1}, {0.0})).item()));
}

TEST_CASE("backward requires a scalar") {
  auto x = Tensor::from_data({2}, {1, 2}, true);
  CHECK_THROWS_AS((x * x).backward(), ShapeError);
}

TEST_CASE("no-grad scope records nothing") {
  auto x = Tensor::from_data({2}, {1, 2}, true);
  Tensor y;
  {
    NoGradGuard g;
    y = x * x;
  }
  CHECK(y.grad_fn() == nullptr);
  CHECK_FALSE(y.requires_grad());
  CHECK((x * x).grad_fn() != nullptr);
}

TEST_CASE("detach cuts the tape and replays under a frozen scope") {
  auto x = Tensor::from_data({1}, {2.0}, true);
  sum_all(x * x.detach()).backward();
  CHECK(x.grad()[0] == doctest::Approx(2.0));

  std::vector<Buffer> store;
  {
    FrozenDetachScope rec(FrozenDetachScope::Mode::Record, &store);
    (void)x.detach();
  }
  REQUIRE(store.size() == 1);
  x.mutable_data()[0] = 5.0;
  FrozenDetachScope replay(FrozenDetachScope::Mode::Replay, &store);
  CHECK(x.detach().item() == 2.0);
  CHECK_THROWS(x.detach());
}

TEST_CASE("shape ops move values where expected") {
  auto a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(values(transpose(a)) == std::vector<double>{1, 4, 2, 5, 3, 6});
  CHECK(reshape(a, {3, 2}).shape() == Shape{3, 2});
  CHECK_THROWS_AS(reshape(a, {4, 2}), ShapeError);
  auto p = permute(Tensor::from_data({1, 2, 3}, {1, 2, 3, 4, 5, 6}), {2, 0, 1});
  CHECK(p.shape() == Shape{3, 1, 2});
  CHECK(values(p) == std::vector<double>{1, 4, 2, 5, 3, 6});
  auto sq = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  CHECK(values(diagonal(sq)) == std::vector<double>{1, 4});
  CHECK(values(diag_embed(Tensor::from_data({2}, {7, 8}))) == std::vector<double>{7, 0, 0, 8});
  CHECK_THROWS_AS(diagonal(a), ShapeError);
}

TEST_CASE("reductions") {
  auto a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(values(sum(a, {0})) == std::vector<double>{5, 7, 9});
  CHECK(values(mean(a, {1})) == std::vector<double>{2, 5});
  CHECK(sum(a, {1}, true).shape() == Shape{2, 1});
  CHECK(sum_all(a).item() == 21.0);
  CHECK(mean_all(a).item() == 3.5);
}

TEST_CASE("softmax is stable for large logits") {
  auto a = Tensor::from_data({1, 3}, {1000.0, 1000.0, -1000.0});
  auto s = softmax(a, 1);
  CHECK(s.at({0, 0}) == doctest::Approx(0.5));
  CHECK(s.at({0, 2}) == 0.0);
}

TEST_CASE("every differentiable op name is unique") {
  auto ops = differentiable_ops();
  std::sort(ops.begin(), ops.end());
  CHECK(std::adjacent_find(ops.begin(), ops.end()) == ops.end());
}
