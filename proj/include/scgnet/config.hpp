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

// Flat "key = value" run configuration. One key per line, '#' starts a
// comment, unknown or repeated keys are errors. `format_run_config` emits
// every key in a fixed order, so parse(format(c)) == c and the text is
// stable enough to embed in checkpoints.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scgnet/model.hpp"
#include "scgnet/scene.hpp"

namespace scg {

enum class OptimizerKind { Adam, SgdMomentum };

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 4;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double momentum = 0.9;
  std::size_t scenes = 400;
  std::size_t eval_every = 0;  // epochs between metric passes; 0 = final only
  std::size_t eval_scenes = 100;
  std::uint64_t eval_offset = 1000000;  // first held-out scene index
  bool dl_loss = true;
  std::uint64_t seed = 42;
  std::string checkpoint = "checkpoint.scgc";  // file name inside the output directory

  void validate() const;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  SceneSpec scene;

  // Shared keys (seed, image_size, classes) fan out to every section.
  void set_seed(std::uint64_t seed);
  void validate() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(std::string_view text);

// `extra_keys` are accepted and returned in `extras` instead of being errors.
RunConfig run_config_from(const KeyValues& kv, const std::set<std::string>& extra_keys = {},
                          std::map<std::string, std::string>* extras = nullptr);
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string format_run_config(const RunConfig& config);

// Scene set for evaluation. `text` is either inline "key=value,key=value"
// or the path of a file holding one key = value per line. Keys: offset,
// count, seed, noise, shapes_min, shapes_max. Unset keys keep `base`.
struct SceneSelection {
  SceneSpec spec;
  std::uint64_t offset = 0;
  std::size_t count = 0;
};
SceneSelection parse_scene_selection(std::string_view text, const SceneSelection& base);

// SCG_SEED, when set, replaces the configured seed.
void apply_env_overrides(RunConfig& config);

// Shortest text that parses back to the same double.
std::string format_real(double v);
double parse_real(const std::string& key, const std::string& value);
std::uint64_t parse_uint(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);

}  // namespace scg
