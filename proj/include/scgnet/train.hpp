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
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scgnet/checkpoint.hpp"
#include "scgnet/config.hpp"
#include "scgnet/model.hpp"
#include "scgnet/optimizer.hpp"
#include "scgnet/scene.hpp"

namespace scg {

struct StepLoss {
  std::uint64_t step = 0;  // 1-based, counts across epochs and resumes
  double dice = 0, kl = 0, dl = 0, total = 0;
};

// Eval-mode pass over a scene set.
struct EvalSummary {
  MetricsReport metrics;
  double mean_diagonal = 0.0;  // mean over scenes of sum_i clamp(A'_ii, 0, 1) / n
  double mean_gamma = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_total = 0.0;
  double mean_dice = 0.0;
  std::optional<EvalSummary> train;
  std::optional<EvalSummary> eval;
};

EvalSummary evaluate_scenes(Model& model, std::span<const Scene> scenes, std::size_t batch_size);

class Trainer {
 public:
  explicit Trainer(RunConfig config);
  // Continues from `ckpt`. The model section of `config` must match the
  // checkpoint; epochs and other training keys come from `config`.
  Trainer(RunConfig config, const Checkpoint& ckpt);

  const RunConfig& config() const { return config_; }
  Model& model() { return model_; }
  const std::vector<Scene>& scenes() const { return scenes_; }
  std::size_t epoch() const { return epoch_; }
  std::uint64_t step() const { return step_; }
  bool done() const { return epoch_ >= config_.train.epochs; }

  // One pass over the shuffled training corpus.
  EpochRecord run_epoch(const std::function<void(const StepLoss&)>& on_step = {});

  Checkpoint checkpoint();

  // Held-out scenes as configured by eval_offset / eval_scenes.
  std::vector<Scene> eval_scenes() const;

 private:
  RunConfig config_;
  Model model_;
  Optimizer optimizer_;
  std::mt19937_64 rng_;
  std::vector<Scene> scenes_;
  std::size_t epoch_ = 0;
  std::uint64_t step_ = 0;
};

struct TrainOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::vector<StepLoss> losses;
  std::vector<EpochRecord> epochs;
  EvalSummary final_train;
  EvalSummary final_eval;
  std::filesystem::path checkpoint_path;
};

// Runs to config.train.epochs and writes into out_dir:
//   loss.csv             step,dice,kl,dl,total (appended on resume)
//   metrics_history.csv  per-epoch loss and any metric passes
//   <checkpoint>         refreshed after every epoch
//   train_metrics.{txt,csv}, eval_metrics.{txt,csv}
TrainResult train(const RunConfig& config, const TrainOptions& options);

std::string loss_csv_header();
std::string format_loss_row(const StepLoss& s);

// Model plus the run configuration it was trained with.
struct LoadedModel {
  RunConfig config;
  Model model;
};
LoadedModel model_from_checkpoint(const Checkpoint& ckpt);

struct GraphExport {
  Tensor a_raw;   // [n, n]
  Tensor a_norm;  // [n, n]
  std::size_t n = 0;
  double gamma = 0.0;
  double edge_density = 0.0;  // fraction of a_raw entries above kEdgeThreshold
};
inline constexpr double kEdgeThreshold = 1e-6;

GraphExport export_graph(Model& model, const Scene& scene);
void write_graph_export(const std::filesystem::path& dir, const GraphExport& g);

}  // namespace scg
