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
#include "scgnet/nn.hpp"
#include "support.hpp"

using namespace scg;
using scgtest::grads;
using scgtest::numeric_gradient;
using scgtest::random_tensor;
using scgtest::rel_diff;
using scgtest::values;

namespace {

// Direct definition of a strided, zero-padded cross-correlation.
double conv_ref(const Tensor& x, const ConvParams& p, std::size_t s, std::size_t o, std::size_t i, std::size_t j) {
  const std::size_t cin = x.dim(1), h = x.dim(2), w = x.dim(3), k = p.kernel.dim(2);
  double acc = p.bias.data()[o];
  for (std::size_t c = 0; c < cin; ++c)
    for (std::size_t u = 0; u < k; ++u)
      for (std::size_t v = 0; v < k; ++v) {
        const long r = static_cast<long>(i * p.stride + u) - static_cast<long>(p.padding);
        const long q = static_cast<long>(j * p.stride + v) - static_cast<long>(p.padding);
        if (r < 0 || q < 0 || r >= static_cast<long>(h) || q >= static_cast<long>(w)) continue;
        acc += x.at({s, c, static_cast<std::size_t>(r), static_cast<std::size_t>(q)}) * p.kernel.at({o, c, u, v});
      }
  return acc;
}

}  // namespace

TEST_CASE("conv2d matches the direct definition") {
  std::mt19937_64 rng(3);
  for (auto [k, stride, pad] : {std::tuple{3, 1, 1}, {3, 2, 1}, {1, 1, 0}, {3, 1, 0}}) {
    auto x = random_tensor({2, 3, 7, 6}, rng);
    auto p = make_conv(3, 4, k, stride, pad, rng);
    auto y = conv2d(x, p);
    const std::size_t oh = (7 + 2 * pad - k) / stride + 1, ow = (6 + 2 * pad - k) / stride + 1;
    REQUIRE(y.shape() == Shape{2, 4, oh, ow});
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t o = 0; o < 4; ++o)
        for (std::size_t i = 0; i < oh; ++i)
          for (std::size_t j = 0; j < ow; ++j)
            CHECK(y.at({s, o, i, j}) == doctest::Approx(conv_ref(x, p, s, o, i, j)).epsilon(1e-13));
  }
}

TEST_CASE("conv2d gradients against central differences") {
  std::mt19937_64 rng(4);
  auto x = random_tensor({2, 2, 5, 5}, rng, -1, 1, true);
  auto p = make_conv(2, 3, 3, 2, 1, rng);
  auto r = random_tensor({2, 3, 3, 3}, rng);
  auto f = [&] { return sum_all(conv2d(x, p) * r); };
  f().backward();
  auto fv = [&] { NoGradGuard g; return f().item(); };
  CHECK(rel_diff(grads(x), numeric_gradient(fv, x.mutable_data())) < 1e-8);
  CHECK(rel_diff(grads(p.kernel), numeric_gradient(fv, p.kernel.mutable_data())) < 1e-8);
  CHECK(rel_diff(grads(p.bias), numeric_gradient(fv, p.bias.mutable_data())) < 1e-8);
}

TEST_CASE("conv2d rejects mismatched channels and oversized kernels") {
  std::mt19937_64 rng(5);
  auto p = make_conv(3, 4, 3, 1, 0, rng);
  CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 2, 5, 5}), p), ShapeError);
  CHECK_THROWS_AS(conv2d(Tensor::zeros({1, 3, 2, 2}), p), ShapeError);
}

TEST_CASE("zero-initialized conv outputs zero") {
  std::mt19937_64 rng(6);
  auto p = make_conv(3, 2, 1, 1, 0, rng, true);
  auto y = conv2d(random_tensor({1, 3, 4, 4}, rng), p);
  for (auto v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("adaptive average pooling") {
  auto x = Tensor::from_data({1, 1, 4, 4}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16});
  CHECK(values(adaptive_avg_pool2d(x, 2, 2)) == std::vector<double>{3.5, 5.5, 11.5, 13.5});
  CHECK(values(adaptive_avg_pool2d(x, 4, 4)) == values(x));
  CHECK(adaptive_avg_pool2d(x, 1, 1).item() == 8.5);
  // Overlapping windows for 3 -> 2: rows [0, 2) and [1, 3).
  auto y = Tensor::from_data({1, 1, 3, 1}, {1, 2, 4});
  CHECK(values(adaptive_avg_pool2d(y, 2, 1)) == std::vector<double>{1.5, 3.0});
  CHECK_THROWS_AS(adaptive_avg_pool2d(x, 5, 2), ShapeError);
}

TEST_CASE("bilinear upsampling with half-pixel centres") {
  // Reference values of the half-pixel (align_corners = false) convention.
  auto x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  auto y = bilinear_upsample(x, 4, 4);
  const std::vector<double> ref{1, 1.25, 1.75, 2, 1.5, 1.75, 2.25, 2.5, 2.5, 2.75, 3.25, 3.5, 3, 3.25, 3.75, 4};
  REQUIRE(y.numel() == ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y.data()[i] == doctest::Approx(ref[i]).epsilon(1e-15));
  CHECK(values(bilinear_upsample(x, 2, 2)) == values(x));
  CHECK_THROWS_AS(bilinear_upsample(x, 1, 4), ShapeError);
}

TEST_CASE("bilinear upsampling preserves constants and has the adjoint gradient") {
  std::mt19937_64 rng(7);
  auto c = Tensor::full({1, 2, 3, 3}, 0.7);
  auto up = bilinear_upsample(c, 8, 5);
  for (auto v : up.data()) CHECK(v == doctest::Approx(0.7));
  auto x = random_tensor({1, 2, 3, 3}, rng, -1, 1, true);
  auto r = random_tensor({1, 2, 8, 5}, rng);
  auto f = [&] { return sum_all(bilinear_upsample(x, 8, 5) * r); };
  f().backward();
  auto fv = [&] { NoGradGuard g; return f().item(); };
  CHECK(rel_diff(grads(x), numeric_gradient(fv, x.mutable_data())) < 1e-8);
}

TEST_CASE("batchnorm in training mode normalizes and updates running stats") {
  auto x = Tensor::from_data({2, 1, 1, 2}, {1, 2, 3, 6});
  auto p = make_batchnorm(1);
  auto y = batchnorm(x, p);
  // mean 3, biased variance 3.5
  const double inv = 1.0 / std::sqrt(3.5 + 1e-5);
  CHECK(y.data()[0] == doctest::Approx(-2 * inv));
  CHECK(y.data()[3] == doctest::Approx(3 * inv));
  // running: 0.9 * 0 + 0.1 * 3, 0.9 * 1 + 0.1 * (unbiased 14 / 3)
  CHECK(p.running_mean.data()[0] == doctest::Approx(0.3));
  CHECK(p.running_var.data()[0] == doctest::Approx(0.9 + 0.1 * 14.0 / 3.0));
}

TEST_CASE("batchnorm in eval mode uses running stats") {
  auto p = make_batchnorm(2);
  p.training = false;
  p.running_mean.mutable_data()[1] = 1.0;
  p.running_var.mutable_data()[1] = 4.0;
  auto x = Tensor::from_data({1, 2, 1, 1}, {5.0, 5.0});
  auto y = batchnorm(x, p);
  CHECK(y.data()[0] == doctest::Approx(5.0 / std::sqrt(1 + 1e-5)));
  CHECK(y.data()[1] == doctest::Approx(4.0 / std::sqrt(4 + 1e-5)));
  CHECK(p.running_mean.data()[0] == 0.0);
}

TEST_CASE("batchnorm gradients against central differences") {
  std::mt19937_64 rng(8);
  auto x = random_tensor({3, 2, 2, 2}, rng, -1, 1, true);
  auto p = make_batchnorm(2);
  p.scale.mutable_data()[0] = 1.3;
  p.shift.mutable_data()[1] = -0.2;
  auto r = random_tensor({3, 2, 2, 2}, rng);
  auto f = [&] { return sum_all(batchnorm(x, p) * r); };
  f().backward();
  auto fv = [&] { NoGradGuard g; return f().item(); };
  CHECK(rel_diff(grads(x), numeric_gradient(fv, x.mutable_data())) < 1e-7);
  CHECK(rel_diff(grads(p.scale), numeric_gradient(fv, p.scale.mutable_data())) < 1e-7);
  CHECK(rel_diff(grads(p.shift), numeric_gradient(fv, p.shift.mutable_data())) < 1e-7);
}
