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

#include "scgnet/scene.hpp"

#include <cmath>
#include <random>

namespace scg {

std::vector<Color> default_palette(std::size_t classes) {
  std::vector<Color> p = {
      Color{0.25, 0.45, 0.25},  // background
      Color{0.85, 0.25, 0.20},  // rectangle
      Color{0.20, 0.35, 0.85},  // disk
      Color{0.90, 0.85, 0.30},  // stripe
  };
  // Extra classes get evenly spaced hues.
  for (std::size_t k = p.size(); k < classes; ++k) {
    const double h = std::fmod(0.13 + 0.618 * static_cast<double>(k), 1.0) * 6.0;
    const double x = 1.0 - std::fabs(std::fmod(h, 2.0) - 1.0);
    Color c{};
    switch (static_cast<int>(h)) {
      case 0: c = {1, x, 0}; break;
      case 1: c = {x, 1, 0}; break;
      case 2: c = {0, 1, x}; break;
      case 3: c = {0, x, 1}; break;
      case 4: c = {x, 0, 1}; break;
      default: c = {1, 0, x}; break;
    }
    for (auto& v : c) v = 0.15 + 0.7 * v;
    p.push_back(c);
  }
  p.resize(classes);
  return p;
}

const Color& SceneSpec::color(std::size_t label) const {
  if (label >= palette.size()) throw ConfigError("palette has no color for class " + std::to_string(label));
  return palette[label];
}

void SceneSpec::validate() const {
  if (image_size < 8) throw ConfigError("scene image_size must be at least 8");
  if (classes < 2) throw ConfigError("scenes need at least 2 classes");
  if (shapes_min > shapes_max) throw ConfigError("shapes_min exceeds shapes_max");
  if (noise < 0.0) throw ConfigError("noise level must be non-negative");
  if (!palette.empty() && palette.size() != classes) throw ConfigError("palette size does not match classes");
}

std::int32_t shape_label(ShapeKind kind, std::size_t classes) {
  return 1 + static_cast<std::int32_t>(static_cast<std::size_t>(kind) % (classes - 1));
}

Scene render_scene(const SceneSpec& spec, std::span<const SceneShape> shapes, std::uint64_t noise_seed) {
  spec.validate();
  SceneSpec s = spec;
  if (s.palette.empty()) s.palette = default_palette(s.classes);
  const std::size_t n = s.image_size;
  Scene scene;
  scene.size = n;
  scene.mask.assign(n * n, 0);
  for (const auto& shape : shapes) {
    if (shape.label < 0 || static_cast<std::size_t>(shape.label) >= s.classes) {
      throw ConfigError("shape label " + std::to_string(shape.label) + " outside the class range");
    }
    for (std::size_t y = 0; y < n; ++y) {
      const double py = static_cast<double>(y) + 0.5;
      for (std::size_t x = 0; x < n; ++x) {
        const double px = static_cast<double>(x) + 0.5;
        bool inside = false;
        switch (shape.kind) {
          case ShapeKind::Rectangle:
            inside = px >= shape.x0 && px < shape.x1 && py >= shape.y0 && py < shape.y1;
            break;
          case ShapeKind::Disk: {
            const double dx = px - shape.x0, dy = py - shape.y0;
            inside = dx * dx + dy * dy <= shape.x1 * shape.x1;
            break;
          }
          case ShapeKind::Stripe: {
            const double t = shape.horizontal ? py : px;
            inside = t >= shape.x0 && t < shape.x1;
            break;
          }
        }
        if (inside) scene.mask[y * n + x] = shape.label;
      }
    }
  }
  scene.image.assign(3 * n * n, 0.0);
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n * n; ++i) {
    const auto& c = s.color(static_cast<std::size_t>(scene.mask[i]));
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double jitter = s.noise > 0.0 ? s.noise * normal(rng) : 0.0;
      scene.image[ch * n * n + i] = c[ch] + jitter;
    }
  }
  return scene;
}

Scene generate_scene(const SceneSpec& spec, std::uint64_t index) {
  spec.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  const double n = static_cast<double>(spec.image_size);
  // Sizes are relative to a 64-pixel frame.
  const double unit = n / 64.0;
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const auto count = std::uniform_int_distribution<std::size_t>(spec.shapes_min, spec.shapes_max)(rng);
  std::vector<SceneShape> shapes;
  for (std::size_t i = 0; i < count; ++i) {
    SceneShape sh;
    sh.kind = static_cast<ShapeKind>(std::uniform_int_distribution<int>(0, 2)(rng));
    sh.label = shape_label(sh.kind, spec.classes);
    switch (sh.kind) {
      case ShapeKind::Rectangle: {
        const double w = uniform(22, 40) * unit, h = uniform(22, 40) * unit;
        sh.x0 = uniform(-0.2 * w, n - 0.8 * w);
        sh.y0 = uniform(-0.2 * h, n - 0.8 * h);
        sh.x1 = sh.x0 + w;
        sh.y1 = sh.y0 + h;
        break;
      }
      case ShapeKind::Disk:
        sh.x1 = uniform(12, 20) * unit;
        sh.x0 = uniform(0.15 * n, 0.85 * n);
        sh.y0 = uniform(0.15 * n, 0.85 * n);
        break;
      case ShapeKind::Stripe: {
        const double w = uniform(14, 22) * unit;
        sh.horizontal = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
        sh.x0 = uniform(0, n - w);
        sh.x1 = sh.x0 + w;
        break;
      }
    }
    shapes.push_back(sh);
  }
  return render_scene(spec, shapes, rng());
}

std::vector<Scene> generate_scenes(const SceneSpec& spec, std::uint64_t first, std::size_t count) {
  std::vector<Scene> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_scene(spec, first + i));
  return out;
}

SceneBatch make_batch(std::span<const Scene> scenes, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("empty batch");
  const std::size_t n = scenes[indices[0]].size;
  const std::size_t b = indices.size();
  Buffer images(b * 3 * n * n);
  Labels labels{b, n, n, std::vector<std::int32_t>(b * n * n)};
  for (std::size_t s = 0; s < b; ++s) {
    const auto& sc = scenes[indices[s]];
    if (sc.size != n) throw ShapeError("scenes in a batch must share a size");
    std::copy(sc.image.begin(), sc.image.end(), images.begin() + static_cast<std::ptrdiff_t>(s * 3 * n * n));
    std::copy(sc.mask.begin(), sc.mask.end(), labels.values.begin() + static_cast<std::ptrdiff_t>(s * n * n));
  }
  return {Tensor::from_data({b, 3, n, n}, std::move(images)), std::move(labels)};
}

}  // namespace scg
