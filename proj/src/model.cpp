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

#include "scgnet/model.hpp"

#include <cmath>

namespace scg {

std::size_t ModelConfig::hidden_width() const {
  return gcn_hidden != 0 ? gcn_hidden : std::max<std::size_t>(1, feature_channels() / 2);
}

void ModelConfig::validate() const {
  if (backbone_widths.empty()) throw ConfigError("backbone needs at least one stage");
  for (auto w : backbone_widths)
    if (w == 0) throw ConfigError("backbone widths must be positive");
  if (in_channels == 0) throw ConfigError("in_channels must be positive");
  if (classes < 2) throw ConfigError("classes must be at least 2");
  if (gcn_layers == 0) throw ConfigError("gcn_layers must be at least 1");
  if (image_size == 0 || image_size % total_stride() != 0) {
    throw ConfigError("image_size " + std::to_string(image_size) + " is not divisible by the backbone stride " +
                      std::to_string(total_stride()));
  }
  if (node_h == 0 || node_w == 0 || node_h > feature_size() || node_w > feature_size()) {
    throw ConfigError("node grid " + std::to_string(node_h) + "x" + std::to_string(node_w) +
                      " does not fit the " + std::to_string(feature_size()) + "x" +
                      std::to_string(feature_size()) + " feature map");
  }
  if (!fuse_gcn && !fuse_residual) throw ConfigError("at least one fusion branch must be enabled");
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  std::size_t in = config_.in_channels;
  for (auto width : config_.backbone_widths) {
    BackboneStage st;
    st.down = make_conv(in, width, 3, 2, 1, rng);
    st.bn_down = make_batchnorm(width);
    st.conv = make_conv(width, width, 3, 1, 1, rng);
    st.bn_conv = make_batchnorm(width);
    backbone.push_back(std::move(st));
    in = width;
  }
  scg = make_scg_params(config_.feature_channels(), config_.classes, config_.node_h, config_.node_w, rng);
  std::size_t d = config_.feature_channels();
  for (std::size_t i = 0; i < config_.gcn_layers; ++i) {
    const bool last = i + 1 == config_.gcn_layers;
    const std::size_t out = last ? config_.classes : config_.hidden_width();
    gcn.push_back(make_gcn_layer(d, out, !last, rng));
    d = out;
  }
}

void Model::set_training(bool training) {
  for (auto& st : backbone) {
    st.bn_down.training = training;
    st.bn_conv.training = training;
  }
  for (auto& layer : gcn) layer.bn.training = training;
}

std::vector<NamedTensor> Model::named_parameters() {
  std::vector<NamedTensor> out;
  auto conv = [&](const std::string& prefix, const ConvParams& p) {
    out.push_back({prefix + ".kernel", p.kernel});
    out.push_back({prefix + ".bias", p.bias});
  };
  auto bn = [&](const std::string& prefix, const BatchNormParams& p) {
    out.push_back({prefix + ".scale", p.scale});
    out.push_back({prefix + ".shift", p.shift});
  };
  for (std::size_t i = 0; i < backbone.size(); ++i) {
    const std::string prefix = "backbone." + std::to_string(i);
    conv(prefix + ".down", backbone[i].down);
    bn(prefix + ".bn_down", backbone[i].bn_down);
    conv(prefix + ".conv", backbone[i].conv);
    bn(prefix + ".bn_conv", backbone[i].bn_conv);
  }
  conv("scg.mu_conv", scg.mu_conv);
  conv("scg.log_sigma_conv", scg.log_sigma_conv);
  for (std::size_t i = 0; i < gcn.size(); ++i) {
    const std::string prefix = "gcn." + std::to_string(i);
    out.push_back({prefix + ".theta", gcn[i].theta});
    if (gcn[i].use_batchnorm) bn(prefix + ".bn", gcn[i].bn);
  }
  return out;
}

std::vector<NamedTensor> Model::named_buffers() {
  std::vector<NamedTensor> out;
  auto bn = [&](const std::string& prefix, const BatchNormParams& p) {
    out.push_back({prefix + ".running_mean", p.running_mean});
    out.push_back({prefix + ".running_var", p.running_var});
  };
  for (std::size_t i = 0; i < backbone.size(); ++i) {
    const std::string prefix = "backbone." + std::to_string(i);
    bn(prefix + ".bn_down", backbone[i].bn_down);
    bn(prefix + ".bn_conv", backbone[i].bn_conv);
  }
  for (std::size_t i = 0; i < gcn.size(); ++i)
    if (gcn[i].use_batchnorm) bn("gcn." + std::to_string(i) + ".bn", gcn[i].bn);
  return out;
}

std::size_t Model::parameter_count() {
  std::size_t total = 0;
  for (auto& p : named_parameters()) total += p.tensor.numel();
  return total;
}

void Model::zero_grad() {
  for (auto& p : named_parameters()) p.tensor.zero_grad();
}

std::size_t expected_parameter_count(const ModelConfig& c) {
  std::size_t total = 0;
  std::size_t in = c.in_channels;
  for (auto w : c.backbone_widths) {
    total += 9 * in * w + w + 2 * w;  // stride-2 conv + BN
    total += 9 * w * w + w + 2 * w;   // 3x3 conv + BN
    in = w;
  }
  const std::size_t d = c.feature_channels();
  total += 9 * d * c.classes + c.classes;  // mu conv
  total += d * c.classes + c.classes;      // log-sigma conv
  std::size_t din = d;
  for (std::size_t i = 0; i < c.gcn_layers; ++i) {
    const bool last = i + 1 == c.gcn_layers;
    const std::size_t dout = last ? c.classes : c.hidden_width();
    total += din * dout + (last ? 0 : 2 * dout);
    din = dout;
  }
  return total;
}

Tensor backbone_forward(const Tensor& image, Model& model, Mode mode) {
  const auto& cfg = model.config();
  if (image.rank() != 4 || image.dim(1) != cfg.in_channels) {
    throw ShapeError("backbone expects [b, " + std::to_string(cfg.in_channels) + ", H, W], got " +
                     shape_str(image.shape()));
  }
  const std::size_t stride = cfg.total_stride();
  if (image.dim(2) % stride != 0 || image.dim(3) % stride != 0) {
    throw ShapeError("image " + std::to_string(image.dim(2)) + "x" + std::to_string(image.dim(3)) +
                     " is not divisible by the backbone stride " + std::to_string(stride));
  }
  model.set_training(mode == Mode::Train);
  Tensor h = image;
  for (auto& st : model.backbone) {
    h = relu(batchnorm(conv2d(h, st.down), st.bn_down));
    h = relu(batchnorm(conv2d(h, st.conv), st.bn_conv));
  }
  return h;
}

ModelOutput model_forward(const Tensor& image, Model& model, Mode mode, std::mt19937_64& rng) {
  const auto& cfg = model.config();
  ModelOutput out;
  auto features = backbone_forward(image, model, mode);
  out.scg = scg_forward(features, model.scg, mode, rng);
  out.gcn_nodes = gcn_stack(out.scg.graph.a_norm, out.scg.graph.node_features, model.gcn);
  if (cfg.fuse_gcn && cfg.fuse_residual) {
    out.node_logits = out.gcn_nodes + out.scg.y_hat;
  } else {
    out.node_logits = cfg.fuse_gcn ? out.gcn_nodes : out.scg.y_hat;
  }
  const std::size_t b = image.dim(0);
  auto grid = permute(reshape(out.node_logits, {b, cfg.node_h, cfg.node_w, cfg.classes}), {0, 3, 1, 2});
  out.logits = bilinear_upsample(grid, image.dim(2), image.dim(3));
  return out;
}

namespace {

void check_labels(const Tensor& logits, const Labels& labels) {
  if (logits.rank() != 4) throw ShapeError("logits must be [b, c, H, W], got " + shape_str(logits.shape()));
  if (labels.batch != logits.dim(0) || labels.height != logits.dim(2) || labels.width != logits.dim(3) ||
      labels.values.size() != labels.batch * labels.height * labels.width) {
    throw ShapeError("labels [" + std::to_string(labels.batch) + ", " + std::to_string(labels.height) + ", " +
                     std::to_string(labels.width) + "] do not match logits " + shape_str(logits.shape()));
  }
  const auto c = static_cast<std::int32_t>(logits.dim(1));
  for (auto v : labels.values) {
    if (v < 0 || v >= c) {
      throw DomainError("label " + std::to_string(v) + " outside [0, " + std::to_string(c) + ")");
    }
  }
}

}  // namespace

Tensor dice_loss(const Tensor& logits, const Labels& labels, Real smoothing) {
  check_labels(logits, labels);
  const std::size_t b = logits.dim(0), c = logits.dim(1), hw = logits.dim(2) * logits.dim(3);
  Buffer onehot(logits.numel(), 0.0);
  Buffer counts(c, 0.0);
  for (std::size_t s = 0; s < b; ++s)
    for (std::size_t i = 0; i < hw; ++i) {
      const auto k = static_cast<std::size_t>(labels.values[s * hw + i]);
      onehot[(s * c + k) * hw + i] = 1.0;
      counts[k] += 1.0;
    }
  auto y = Tensor::from_data(logits.shape(), std::move(onehot));
  auto p = softmax(logits, 1);
  auto overlap = sum(p * y, {0, 2, 3});
  auto mass = sum(p, {0, 2, 3});
  auto y_mass = Tensor::from_data({c}, std::move(counts));
  auto coeff = add_scalar(scale(overlap, 2.0), smoothing) / add_scalar(mass + y_mass, smoothing);
  return add_scalar(neg(mean_all(coeff)), 1.0);
}

LossBundle total_loss(const Tensor& dice, const Tensor& kl, const Tensor& dl) {
  const std::pair<const char*, const Tensor*> parts[] = {{"dice", &dice}, {"kl", &kl}, {"dl", &dl}};
  for (auto [name, t] : parts) {
    if (!std::isfinite(t->item())) {
      throw NonFiniteLossError(name, std::string("non-finite ") + name + " loss: " + std::to_string(t->item()));
    }
  }
  LossBundle bundle{dice, kl, dl, dice + kl + dl};
  if (!std::isfinite(bundle.total.item())) throw NonFiniteLossError("total", "non-finite total loss");
  return bundle;
}

std::uint64_t MetricsReport::total() const {
  std::uint64_t t = 0;
  for (auto v : confusion) t += v;
  return t;
}

std::vector<std::int32_t> predict_classes(const Tensor& logits) {
  if (logits.rank() != 4) throw ShapeError("logits must be [b, c, H, W], got " + shape_str(logits.shape()));
  const std::size_t b = logits.dim(0), c = logits.dim(1), hw = logits.dim(2) * logits.dim(3);
  auto lv = logits.data();
  std::vector<std::int32_t> out(b * hw);
  for (std::size_t s = 0; s < b; ++s)
    for (std::size_t i = 0; i < hw; ++i) {
      std::size_t best = 0;
      Real best_v = lv[(s * c) * hw + i];
      for (std::size_t k = 1; k < c; ++k) {
        const Real v = lv[(s * c + k) * hw + i];
        if (v > best_v) {
          best_v = v;
          best = k;
        }
      }
      out[s * hw + i] = static_cast<std::int32_t>(best);
    }
  return out;
}

std::vector<std::uint64_t> confusion_counts(const Tensor& logits, const Labels& labels) {
  check_labels(logits, labels);
  const std::size_t c = logits.dim(1);
  auto pred = predict_classes(logits);
  std::vector<std::uint64_t> conf(c * c, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    conf[static_cast<std::size_t>(labels.values[i]) * c + static_cast<std::size_t>(pred[i])] += 1;
  }
  return conf;
}

MetricsReport metrics_from_confusion(std::size_t classes, std::vector<std::uint64_t> confusion) {
  if (confusion.size() != classes * classes) throw ShapeError("confusion matrix size does not match classes");
  MetricsReport r;
  r.classes = classes;
  r.confusion = std::move(confusion);
  r.f1.assign(classes, 0.0);
  std::uint64_t diag = 0;
  for (std::size_t k = 0; k < classes; ++k) {
    std::uint64_t tp = r.count(k, k), fp = 0, fn = 0;
    for (std::size_t j = 0; j < classes; ++j) {
      if (j == k) continue;
      fp += r.count(j, k);
      fn += r.count(k, j);
    }
    const std::uint64_t denom = 2 * tp + fp + fn;
    r.f1[k] = denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
    r.mean_f1 += r.f1[k];
    diag += tp;
  }
  r.mean_f1 /= static_cast<double>(classes);
  const auto total = r.total();
  r.overall_accuracy = total == 0 ? 0.0 : static_cast<double>(diag) / static_cast<double>(total);
  return r;
}

MetricsReport merge(const MetricsReport& a, const MetricsReport& b) {
  if (a.classes != b.classes) throw ShapeError("cannot merge metrics over different class counts");
  auto conf = a.confusion;
  for (std::size_t i = 0; i < conf.size(); ++i) conf[i] += b.confusion[i];
  return metrics_from_confusion(a.classes, std::move(conf));
}

MetricsReport evaluate(const Tensor& logits, const Labels& labels) {
  return metrics_from_confusion(logits.dim(1), confusion_counts(logits, labels));
}

}  // namespace scg
