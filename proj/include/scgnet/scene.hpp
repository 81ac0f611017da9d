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

// Synthetic labeled scenes: flat-colored shapes on a background, with
// Gaussian pixel noise. Class 0 is background; shape kinds cycle through the
// remaining classes (rectangle, disk, stripe for the default four classes).

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "scgnet/model.hpp"

namespace scg {

using Color = std::array<double, 3>;

struct SceneSpec {
  std::size_t image_size = 64;
  std::size_t classes = 4;
  std::size_t shapes_min = 2;
  std::size_t shapes_max = 4;
  double noise = 0.1;
  std::uint64_t seed = 42;
  std::vector<Color> palette;  // empty selects default_palette(classes)

  const Color& color(std::size_t label) const;
  void validate() const;
};

std::vector<Color> default_palette(std::size_t classes);

enum class ShapeKind { Rectangle, Disk, Stripe };

struct SceneShape {
  ShapeKind kind = ShapeKind::Rectangle;
  std::int32_t label = 1;
  // Rectangle: [x0, x1) x [y0, y1). Disk: centre (x0, y0), radius x1.
  // Stripe: rows (horizontal) or columns [x0, x1).
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool horizontal = true;
};

struct Scene {
  std::size_t size = 0;
  std::vector<double> image;        // [3, size, size]
  std::vector<std::int32_t> mask;   // [size, size]
};

// Label of shape kind `kind` under `classes` classes.
std::int32_t shape_label(ShapeKind kind, std::size_t classes);

// Rasterizes `shapes` in order (later shapes overwrite) and adds noise drawn
// from `noise_seed`.
Scene render_scene(const SceneSpec& spec, std::span<const SceneShape> shapes, std::uint64_t noise_seed);

// Deterministic in (spec.seed, index).
Scene generate_scene(const SceneSpec& spec, std::uint64_t index);

std::vector<Scene> generate_scenes(const SceneSpec& spec, std::uint64_t first, std::size_t count);

struct SceneBatch {
  Tensor images;  // [b, 3, H, W]
  Labels labels;
};

SceneBatch make_batch(std::span<const Scene> scenes, std::span<const std::size_t> indices);

}  // namespace scg
