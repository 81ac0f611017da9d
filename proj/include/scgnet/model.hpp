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

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "scgnet/gcn.hpp"
#include "scgnet/scg.hpp"

namespace scg {

struct ModelConfig {
  std::size_t image_size = 64;
  std::size_t in_channels = 3;
  std::vector<std::size_t> backbone_widths{16, 32, 64};
  std::size_t node_h = 8;
  std::size_t node_w = 8;
  std::size_t classes = 4;
  std::size_t gcn_layers = 2;
  std::size_t gcn_hidden = 0;  // 0 selects feature_channels / 2
  std::uint64_t seed = 42;
  // Fusion ablation switches.
  bool fuse_gcn = true;
  bool fuse_residual = true;

  std::size_t feature_channels() const { return backbone_widths.back(); }
  std::size_t total_stride() const { return std::size_t{1} << backbone_widths.size(); }
  std::size_t feature_size() const { return image_size / total_stride(); }
  std::size_t nodes() const { return node_h * node_w; }
  std::size_t hidden_width() const;
  void validate() const;
};

// Stride-2 3x3 conv -> BN -> ReLU -> 3x3 conv -> BN -> ReLU.
struct BackboneStage {
  ConvParams down;
  BatchNormParams bn_down;
  ConvParams conv;
  BatchNormParams bn_conv;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

class Model {
 public:
  explicit Model(ModelConfig config);
  // Parameters are shared handles, so copies would alias.
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }

  void set_training(bool training);

  // Stable, deterministic order; the names key checkpoint entries.
  std::vector<NamedTensor> named_parameters();
  // Batch-norm running statistics.
  std::vector<NamedTensor> named_buffers();
  std::size_t parameter_count();
  void zero_grad();

  std::vector<BackboneStage> backbone;
  ScgParams scg;
  std::vector<GcnLayerParams> gcn;

 private:
  ModelConfig config_;
};

// Closed form: sum over stages of both convs (weights + bias) and both BNs,
// the two encoder convs, and the GCN thetas plus their BN affine terms.
std::size_t expected_parameter_count(const ModelConfig& config);

Tensor backbone_forward(const Tensor& image, Model& model, Mode mode);

struct ModelOutput {
  Tensor logits;       // [b, c, H, W]
  Tensor node_logits;  // [b, n, c], fused
  Tensor gcn_nodes;    // [b, n, c]
  ScgOutput scg;
};

// Sets every batch-norm to `mode`; train mode draws latent noise from `rng`.
ModelOutput model_forward(const Tensor& image, Model& model, Mode mode, std::mt19937_64& rng);

// Integer label maps [b, h, w].
struct Labels {
  std::size_t batch = 0, height = 0, width = 0;
  std::vector<std::int32_t> values;

  std::size_t size() const { return values.size(); }
};

inline constexpr Real kDiceSmoothing = 1.0;

// 1 - mean_k (2 sum p_k y_k + s) / (sum p_k + sum y_k + s) with p the class
// softmax over every pixel of the batch.
Tensor dice_loss(const Tensor& logits, const Labels& labels, Real smoothing = kDiceSmoothing);

struct LossBundle {
  Tensor dice, kl, dl, total;

  Real dice_value() const { return dice.item(); }
  Real kl_value() const { return kl.item(); }
  Real dl_value() const { return dl.item(); }
  Real total_value() const { return total.item(); }
};

// Unweighted sum. Throws NonFiniteLossError naming the first bad component.
LossBundle total_loss(const Tensor& dice, const Tensor& kl, const Tensor& dl);

struct MetricsReport {
  std::size_t classes = 0;
  std::vector<std::uint64_t> confusion;  // row = truth, column = prediction
  std::vector<double> f1;
  double mean_f1 = 0.0;
  double overall_accuracy = 0.0;

  std::uint64_t count(std::size_t truth, std::size_t predicted) const {
    return confusion[truth * classes + predicted];
  }
  std::uint64_t total() const;
};

// Confusion counts from argmax predictions (ties go to the lowest class).
std::vector<std::uint64_t> confusion_counts(const Tensor& logits, const Labels& labels);
MetricsReport metrics_from_confusion(std::size_t classes, std::vector<std::uint64_t> confusion);
MetricsReport merge(const MetricsReport& a, const MetricsReport& b);

MetricsReport evaluate(const Tensor& logits, const Labels& labels);

// Argmax class per pixel, [b, H, W] row-major.
std::vector<std::int32_t> predict_classes(const Tensor& logits);

}  // namespace scg
