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

// Test-side oracles, deliberately independent of the library's own
// gradient checker.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "scgnet/tensor.hpp"

namespace scgtest {

// Central differences of f with respect to every entry of x (modified in
// place and restored).
inline std::vector<double> numeric_gradient(const std::function<double()>& f, std::span<double> x,
                                            double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f();
    x[i] = orig - h;
    const double down = f();
    x[i] = orig;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// max |a - b| / max(max |a|, max |b|, 1e-12)
inline double rel_diff(std::span<const double> a, std::span<const double> b) {
  double diff = 0, mag = 1e-12;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    mag = std::max({mag, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / mag;
}

inline scg::Tensor random_tensor(scg::Shape shape, std::mt19937_64& rng, double lo = -1, double hi = 1,
                                 bool requires_grad = false) {
  std::uniform_real_distribution<double> d(lo, hi);
  scg::Buffer v(scg::shape_numel(shape));
  for (auto& x : v) x = d(rng);
  return scg::Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

// Largest |eigenvalue| of a symmetric n x n matrix by power iteration. For
// symmetric m, |m x| / |x| never exceeds the spectral radius.
inline double spectral_radius(std::span<const double> m, std::size_t n, int iterations = 500) {
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
  double ratio = 0;
  for (int it = 0; it < iterations; ++it) {
    double nx = 0, ny = 0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 0;
      for (std::size_t j = 0; j < n; ++j) y[i] += m[i * n + j] * x[j];
      nx += x[i] * x[i];
      ny += y[i] * y[i];
    }
    if (ny == 0) return 0;
    ratio = std::sqrt(ny / nx);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / std::sqrt(ny);
  }
  return ratio;
}

inline std::vector<double> values(const scg::Tensor& t) { return {t.data().begin(), t.data().end()}; }
inline std::vector<double> grads(const scg::Tensor& t) { return {t.grad().begin(), t.grad().end()}; }

}  // namespace scgtest
