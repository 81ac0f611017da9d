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

#include "scgnet/train.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "scgnet/report.hpp"
#include "scgnet/tsr.hpp"

namespace scg {

namespace {

const std::set<std::string> kStateKeys = {"epoch", "step", "optimizer_steps", "rng_state"};

std::mt19937_64 training_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x7261u};
  return std::mt19937_64(seq);
}

std::string model_section(RunConfig c) {
  // Only the keys that decide tensor shapes and initialization.
  RunConfig ref;
  ref.model = c.model;
  return format_run_config(ref);
}

std::string metric_cell(const std::optional<EvalSummary>& s, bool oa) {
  if (!s) return "";
  return format_real(oa ? s->metrics.overall_accuracy : s->metrics.mean_f1);
}

std::string history_header() { return "epoch,mean_total,mean_dice,train_mf1,train_oa,eval_mf1,eval_oa,mean_diagonal\n"; }

std::string history_row(const EpochRecord& r) {
  std::string diag = r.eval ? format_real(r.eval->mean_diagonal) : (r.train ? format_real(r.train->mean_diagonal) : "");
  return std::to_string(r.epoch) + "," + format_real(r.mean_total) + "," + format_real(r.mean_dice) + "," +
         metric_cell(r.train, false) + "," + metric_cell(r.train, true) + "," + metric_cell(r.eval, false) + "," +
         metric_cell(r.eval, true) + "," + diag + "\n";
}

std::ofstream open_log(const std::filesystem::path& path, const std::string& header, bool append) {
  const bool exists = std::filesystem::exists(path);
  std::ofstream out(path, append && exists ? std::ios::app | std::ios::binary : std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  if (!(append && exists)) out << header;
  return out;
}

}  // namespace

std::string loss_csv_header() { return "step,dice,kl,dl,total\n"; }

std::string format_loss_row(const StepLoss& s) {
  return std::to_string(s.step) + "," + format_real(s.dice) + "," + format_real(s.kl) + "," + format_real(s.dl) + "," +
         format_real(s.total) + "\n";
}

EvalSummary evaluate_scenes(Model& model, std::span<const Scene> scenes, std::size_t batch_size) {
  if (scenes.empty()) throw ShapeError("cannot evaluate an empty scene set");
  if (batch_size == 0) batch_size = 1;
  NoGradGuard no_grad;
  std::mt19937_64 unused(0);
  const std::size_t c = model.config().classes;
  EvalSummary s;
  s.metrics = metrics_from_confusion(c, std::vector<std::uint64_t>(c * c, 0));
  double diag_sum = 0.0, gamma_sum = 0.0;
  for (std::size_t start = 0; start < scenes.size(); start += batch_size) {
    const std::size_t b = std::min(batch_size, scenes.size() - start);
    std::vector<std::size_t> idx(b);
    std::iota(idx.begin(), idx.end(), start);
    auto batch = make_batch(scenes, idx);
    auto out = model_forward(batch.images, model, Mode::Eval, unused);
    s.metrics = merge(s.metrics, evaluate(out.logits, batch.labels));
    const std::size_t n = out.scg.graph.n;
    auto a = out.scg.graph.a_raw.data();
    for (std::size_t k = 0; k < b; ++k) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += std::clamp(a[k * n * n + i * n + i], 0.0, 1.0);
      diag_sum += d / static_cast<double>(n);
      gamma_sum += out.scg.graph.gamma.data()[k];
    }
  }
  s.mean_diagonal = diag_sum / static_cast<double>(scenes.size());
  s.mean_gamma = gamma_sum / static_cast<double>(scenes.size());
  return s;
}

Trainer::Trainer(RunConfig config)
    : config_(std::move(config)),
      model_((config_.validate(), config_.model)),
      optimizer_(config_.train.optimizer, config_.train.learning_rate, config_.train.momentum),
      rng_(training_rng(config_.train.seed)),
      scenes_(generate_scenes(config_.scene, 0, config_.train.scenes)) {}

Trainer::Trainer(RunConfig config, const Checkpoint& ckpt) : Trainer(std::move(config)) {
  std::map<std::string, std::string> state;
  const RunConfig saved = run_config_from(parse_key_values(ckpt.config_echo), kStateKeys, &state);
  if (model_section(saved) != model_section(config_)) {
    throw ConfigError("model configuration differs from the checkpoint being resumed");
  }
  if (saved.train.optimizer != config_.train.optimizer) {
    throw ConfigError("optimizer differs from the checkpoint being resumed");
  }
  for (const auto& key : kStateKeys)
    if (!state.count(key)) throw CorruptFileError("checkpoint is missing training state '" + key + "'");
  load_model_state(model_, ckpt);
  optimizer_.restore(parse_uint("optimizer_steps", state["optimizer_steps"]), ckpt.entries);
  epoch_ = parse_uint("epoch", state["epoch"]);
  step_ = parse_uint("step", state["step"]);
  std::istringstream is(state["rng_state"]);
  is >> rng_;
  if (!is) throw CorruptFileError("checkpoint rng_state is unreadable");
}

EpochRecord Trainer::run_epoch(const std::function<void(const StepLoss&)>& on_step) {
  std::vector<std::size_t> order(scenes_.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);
  const std::size_t bs = config_.train.batch_size;
  EpochRecord rec;
  rec.epoch = epoch_ + 1;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < order.size(); start += bs) {
    std::span<const std::size_t> idx(order.data() + start, std::min(bs, order.size() - start));
    auto batch = make_batch(scenes_, idx);
    model_.zero_grad();
    auto out = model_forward(batch.images, model_, Mode::Train, rng_);
    auto dice = dice_loss(out.logits, batch.labels);
    auto losses = total_loss(dice, out.scg.kl, config_.train.dl_loss ? out.scg.dl : Tensor::scalar(0.0));
    losses.total.backward();
    optimizer_.step(model_.named_parameters());
    ++step_;
    StepLoss s{step_, losses.dice_value(), losses.kl_value(), out.scg.dl.item(), losses.total_value()};
    rec.mean_total += s.total;
    rec.mean_dice += s.dice;
    ++batches;
    if (on_step) on_step(s);
  }
  rec.mean_total /= static_cast<double>(batches);
  rec.mean_dice /= static_cast<double>(batches);
  ++epoch_;
  const std::size_t every = config_.train.eval_every;
  if (every != 0 && epoch_ % every == 0) {
    rec.train = evaluate_scenes(model_, scenes_, bs);
    auto held_out = eval_scenes();
    rec.eval = evaluate_scenes(model_, held_out, bs);
  }
  return rec;
}

std::vector<Scene> Trainer::eval_scenes() const {
  return generate_scenes(config_.scene, config_.train.eval_offset, config_.train.eval_scenes);
}

Checkpoint Trainer::checkpoint() {
  Checkpoint ckpt;
  std::ostringstream rng_text;
  rng_text << rng_;
  ckpt.config_echo = format_run_config(config_) + "epoch = " + std::to_string(epoch_) + "\n" +
                     "step = " + std::to_string(step_) + "\n" +
                     "optimizer_steps = " + std::to_string(optimizer_.steps()) + "\n" +
                     "rng_state = " + rng_text.str() + "\n";
  append_model_state(model_, ckpt);
  for (auto& e : optimizer_.state()) ckpt.entries.push_back(std::move(e));
  return ckpt;
}

TrainResult train(const RunConfig& config, const TrainOptions& options) {
  std::optional<Trainer> trainer;
  if (options.resume) trainer.emplace(config, load_checkpoint(*options.resume));
  else trainer.emplace(config);
  Trainer& t = *trainer;

  std::filesystem::create_directories(options.out_dir);
  const bool append = options.resume.has_value();
  auto loss_log = open_log(options.out_dir / "loss.csv", loss_csv_header(), append);
  auto history_log = open_log(options.out_dir / "metrics_history.csv", history_header(), append);

  TrainResult result;
  result.checkpoint_path = options.out_dir / config.train.checkpoint;
  while (!t.done()) {
    auto rec = t.run_epoch([&](const StepLoss& s) {
      result.losses.push_back(s);
      loss_log << format_loss_row(s);
    });
    loss_log.flush();
    history_log << history_row(rec);
    history_log.flush();
    save_checkpoint(result.checkpoint_path, t.checkpoint());
    if (options.on_epoch) options.on_epoch(rec);
    result.epochs.push_back(std::move(rec));
  }
  if (!std::filesystem::exists(result.checkpoint_path)) save_checkpoint(result.checkpoint_path, t.checkpoint());

  const std::size_t bs = config.train.batch_size;
  if (!result.epochs.empty() && result.epochs.back().train && result.epochs.back().eval) {
    result.final_train = *result.epochs.back().train;
    result.final_eval = *result.epochs.back().eval;
  } else {
    result.final_train = evaluate_scenes(t.model(), t.scenes(), bs);
    auto held_out = t.eval_scenes();
    result.final_eval = evaluate_scenes(t.model(), held_out, bs);
  }
  write_metrics(options.out_dir / "train_metrics", result.final_train.metrics);
  write_metrics(options.out_dir / "eval_metrics", result.final_eval.metrics);
  return result;
}

LoadedModel model_from_checkpoint(const Checkpoint& ckpt) {
  std::map<std::string, std::string> state;
  RunConfig config = run_config_from(parse_key_values(ckpt.config_echo), kStateKeys, &state);
  config.validate();
  Model model(config.model);
  load_model_state(model, ckpt);
  return {std::move(config), std::move(model)};
}

GraphExport export_graph(Model& model, const Scene& scene) {
  NoGradGuard no_grad;
  std::mt19937_64 unused(0);
  const Scene one[] = {scene};
  const std::size_t idx[] = {0};
  auto batch = make_batch(one, idx);
  auto out = model_forward(batch.images, model, Mode::Eval, unused);
  GraphExport g;
  g.n = out.scg.graph.n;
  g.a_raw = reshape(out.scg.graph.a_raw, {g.n, g.n});
  g.a_norm = reshape(out.scg.graph.a_norm, {g.n, g.n});
  g.gamma = out.scg.graph.gamma.data()[0];
  std::size_t edges = 0;
  for (auto v : g.a_raw.data()) edges += v > kEdgeThreshold ? 1 : 0;
  g.edge_density = static_cast<double>(edges) / static_cast<double>(g.n * g.n);
  return g;
}

void write_graph_export(const std::filesystem::path& dir, const GraphExport& g) {
  std::filesystem::create_directories(dir);
  write_tsr(dir / "a_raw.tsr", g.a_raw);
  write_tsr(dir / "a_norm.tsr", g.a_norm);
  write_file_bytes(dir / "summary.txt", "n = " + std::to_string(g.n) + "\ngamma = " + format_real(g.gamma) +
                                            "\nedge_density = " + format_real(g.edge_density) + "\n");
}

}  // namespace scg
