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

#include "scgnet/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "scgnet/tsr.hpp"

namespace scg {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_uint(key, std::string(trim(item))));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::string format_list(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string optimizer_name(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

}  // namespace

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_real(const std::string& key, const std::string& value) {
  double v = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size() || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (scenes < 1) throw ConfigError("scenes must be at least 1");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (checkpoint.empty()) throw ConfigError("checkpoint file name must not be empty");
}

void RunConfig::set_seed(std::uint64_t seed) {
  model.seed = seed;
  train.seed = seed;
  scene.seed = seed;
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  scene.validate();
  if (model.image_size != scene.image_size || model.classes != scene.classes) {
    throw ConfigError("model and scene disagree on image_size or classes");
  }
  if (model.in_channels != 3) throw ConfigError("synthetic scenes are RGB; in_channels must be 3");
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

RunConfig run_config_from(const KeyValues& kv, const std::set<std::string>& extra_keys,
                          std::map<std::string, std::string>* extras) {
  RunConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto size = [](std::size_t& dst) -> Setter {
    return [&dst](const std::string& k, const std::string& v) { dst = parse_uint(k, v); };
  };
  const std::map<std::string, Setter> setters = {
      {"seed", [&](const std::string& k, const std::string& v) { c.set_seed(parse_uint(k, v)); }},
      {"image_size",
       [&](const std::string& k, const std::string& v) { c.model.image_size = c.scene.image_size = parse_uint(k, v); }},
      {"classes",
       [&](const std::string& k, const std::string& v) { c.model.classes = c.scene.classes = parse_uint(k, v); }},
      {"backbone_widths", [&](const std::string& k, const std::string& v) { c.model.backbone_widths = parse_list(k, v); }},
      {"node_h", size(c.model.node_h)},
      {"node_w", size(c.model.node_w)},
      {"gcn_layers", size(c.model.gcn_layers)},
      {"gcn_hidden", size(c.model.gcn_hidden)},
      {"fuse_gcn", [&](const std::string& k, const std::string& v) { c.model.fuse_gcn = parse_bool(k, v); }},
      {"fuse_residual", [&](const std::string& k, const std::string& v) { c.model.fuse_residual = parse_bool(k, v); }},
      {"epochs", size(c.train.epochs)},
      {"batch_size", size(c.train.batch_size)},
      {"learning_rate", [&](const std::string& k, const std::string& v) { c.train.learning_rate = parse_real(k, v); }},
      {"optimizer",
       [&](const std::string& k, const std::string& v) {
         if (v == "adam") c.train.optimizer = OptimizerKind::Adam;
         else if (v == "sgd") c.train.optimizer = OptimizerKind::SgdMomentum;
         else throw ConfigError(k + ": expected adam or sgd, got '" + v + "'");
       }},
      {"momentum", [&](const std::string& k, const std::string& v) { c.train.momentum = parse_real(k, v); }},
      {"scenes", size(c.train.scenes)},
      {"eval_every", size(c.train.eval_every)},
      {"eval_scenes", size(c.train.eval_scenes)},
      {"eval_offset", [&](const std::string& k, const std::string& v) { c.train.eval_offset = parse_uint(k, v); }},
      {"dl_loss", [&](const std::string& k, const std::string& v) { c.train.dl_loss = parse_bool(k, v); }},
      {"checkpoint", [&](const std::string&, const std::string& v) { c.train.checkpoint = v; }},
      {"shapes_min", size(c.scene.shapes_min)},
      {"shapes_max", size(c.scene.shapes_max)},
      {"noise", [&](const std::string& k, const std::string& v) { c.scene.noise = parse_real(k, v); }},
  };
  for (const auto& [key, value] : kv) {
    if (auto it = setters.find(key); it != setters.end()) {
      it->second(key, value);
    } else if (extra_keys.count(key) && extras) {
      (*extras)[key] = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return c;
}

RunConfig parse_run_config(std::string_view text) { return run_config_from(parse_key_values(text)); }

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file_bytes(path));
}

std::string format_run_config(const RunConfig& c) {
  std::ostringstream os;
  os << "seed = " << c.model.seed << '\n'
     << "image_size = " << c.model.image_size << '\n'
     << "classes = " << c.model.classes << '\n'
     << "backbone_widths = " << format_list(c.model.backbone_widths) << '\n'
     << "node_h = " << c.model.node_h << '\n'
     << "node_w = " << c.model.node_w << '\n'
     << "gcn_layers = " << c.model.gcn_layers << '\n'
     << "gcn_hidden = " << c.model.gcn_hidden << '\n'
     << "fuse_gcn = " << (c.model.fuse_gcn ? "true" : "false") << '\n'
     << "fuse_residual = " << (c.model.fuse_residual ? "true" : "false") << '\n'
     << "epochs = " << c.train.epochs << '\n'
     << "batch_size = " << c.train.batch_size << '\n'
     << "learning_rate = " << format_real(c.train.learning_rate) << '\n'
     << "optimizer = " << optimizer_name(c.train.optimizer) << '\n'
     << "momentum = " << format_real(c.train.momentum) << '\n'
     << "scenes = " << c.train.scenes << '\n'
     << "eval_every = " << c.train.eval_every << '\n'
     << "eval_scenes = " << c.train.eval_scenes << '\n'
     << "eval_offset = " << c.train.eval_offset << '\n'
     << "dl_loss = " << (c.train.dl_loss ? "true" : "false") << '\n'
     << "checkpoint = " << c.train.checkpoint << '\n'
     << "shapes_min = " << c.scene.shapes_min << '\n'
     << "shapes_max = " << c.scene.shapes_max << '\n'
     << "noise = " << format_real(c.scene.noise) << '\n';
  return os.str();
}

SceneSelection parse_scene_selection(std::string_view text, const SceneSelection& base) {
  SceneSelection sel = base;
  text = trim(text);
  if (text.empty()) return sel;
  KeyValues kv;
  const std::filesystem::path as_path{std::string(text)};
  if (text.find('=') == std::string_view::npos || std::filesystem::is_regular_file(as_path)) {
    if (!std::filesystem::is_regular_file(as_path)) {
      throw ConfigError("scene spec '" + std::string(text) + "' is neither key=value pairs nor a readable file");
    }
    kv = parse_key_values(read_file_bytes(as_path));
  } else {
    std::string lines(text);
    std::replace(lines.begin(), lines.end(), ',', '\n');
    kv = parse_key_values(lines);
  }
  for (const auto& [k, v] : kv) {
    if (k == "offset") sel.offset = parse_uint(k, v);
    else if (k == "count") sel.count = parse_uint(k, v);
    else if (k == "seed") sel.spec.seed = parse_uint(k, v);
    else if (k == "noise") sel.spec.noise = parse_real(k, v);
    else if (k == "shapes_min") sel.spec.shapes_min = parse_uint(k, v);
    else if (k == "shapes_max") sel.spec.shapes_max = parse_uint(k, v);
    else throw ConfigError("unknown scene spec key '" + k + "'");
  }
  if (sel.count == 0) throw ConfigError("scene spec selects no scenes");
  sel.spec.validate();
  return sel;
}

void apply_env_overrides(RunConfig& config) {
  if (const char* s = std::getenv("SCG_SEED"); s && *s) config.set_seed(parse_uint("SCG_SEED", s));
}

}  // namespace scg
