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

// scgnet: train, evaluate, gradient-check and inspect SCG-Net models.

#include <cmath>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "scgnet/scgnet.h"

namespace {

int report(scg_status s) {
  if (s == SCG_OK) return 0;
  std::fprintf(stderr, "scgnet: %s: %s\n", scg_status_string(s), scg_last_error());
  return static_cast<int>(s);
}

void print_epoch(const scg_epoch_info* info, void*) {
  std::printf("epoch %zu  loss %.6f  dice %.6f", info->epoch, info->mean_total, info->mean_dice);
  if (info->has_metrics) {
    std::printf("  train mF1 %.4f OA %.4f  eval mF1 %.4f OA %.4f  diag %.4f", info->train_mf1, info->train_oa,
                info->eval_mf1, info->eval_oa, info->mean_diagonal);
  }
  std::printf("\n");
  std::fflush(stdout);
}

void print_grad(const scg_grad_result* r, void*) {
  std::printf("%-4s %-22s %-10s max_rel_err %.3e  tol %.0e  trials %zu  %.2fs\n", r->passed ? "ok" : "FAIL", r->scope,
              r->tier, r->max_rel_error, r->tolerance, r->trials, r->seconds);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SCG-Net: self-constructing graph segmentation on CPU"};
  app.set_version_flag("--version", scg_version());
  app.require_subcommand(1);

  std::string config, resume, out;
  auto* train = app.add_subcommand("train", "Train a model from a config file");
  train->add_option("--config", config, "key = value config file")->required();
  train->add_option("--resume", resume, "checkpoint to continue from");
  train->add_option("--out", out, "output directory")->required();

  std::string ckpt, scenes, eval_out;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on synthetic scenes");
  eval->add_option("--ckpt", ckpt, "checkpoint file")->required();
  eval->add_option("--scenes", scenes,
                   "inline key=value,... (offset, count, seed, noise, shapes_min, shapes_max) or a file; "
                   "defaults to the held-out scenes of the training config");
  eval->add_option("--out", eval_out, "directory for metrics, PGM predictions and PPM inputs");

  std::string scope;
  double tol = 0.0;
  std::size_t trials = 0;
  bool list = false;
  auto* grad = app.add_subcommand("grad-check", "Finite-difference gradient checks");
  grad->add_option("--scope", scope, "operation name or 'model'; all scopes when omitted");
  grad->add_option("--tol", tol, "override the tolerance of every checked scope");
  grad->add_option("--trials", trials, "random instances per scope");
  grad->add_flag("--list", list, "print the registered scopes and exit");

  std::string graph_ckpt, graph_out;
  std::uint64_t scene_index = 0;
  auto* graph = app.add_subcommand("export-graph", "Dump the learned adjacency of one scene");
  graph->add_option("--ckpt", graph_ckpt, "checkpoint file")->required();
  graph->add_option("--scene", scene_index, "scene index under the training scene generator")->required();
  graph->add_option("--out", graph_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (*train) {
    scg_train_summary summary{};
    auto s = scg_train(config.c_str(), resume.empty() ? nullptr : resume.c_str(), out.c_str(), print_epoch, nullptr,
                       &summary);
    if (s != SCG_OK) return report(s);
    std::printf("trained %zu epochs (%llu steps)\n", summary.epochs_run, static_cast<unsigned long long>(summary.steps));
    std::printf("train mF1 %.4f OA %.4f\neval  mF1 %.4f OA %.4f\n", summary.train_mf1, summary.train_oa,
                summary.eval_mf1, summary.eval_oa);
    return 0;
  }

  if (*eval) {
    scg_model* model = nullptr;
    if (auto s = scg_model_load(ckpt.c_str(), &model); s != SCG_OK) return report(s);
    scg_metrics* metrics = nullptr;
    auto s = scg_model_evaluate(model, scenes.c_str(), eval_out.empty() ? nullptr : eval_out.c_str(), &metrics);
    if (s == SCG_OK) {
      std::fputs(scg_metrics_text(metrics), stdout);
      if (!eval_out.empty()) s = scg_metrics_write(metrics, (eval_out + "/metrics").c_str());
    }
    scg_metrics_free(metrics);
    scg_model_free(model);
    return report(s);
  }

  if (*grad) {
    if (list) {
      for (std::size_t i = 0; i < scg_grad_check_scope_count(); ++i) std::printf("%s\n", scg_grad_check_scope_name(i));
      return 0;
    }
    auto s = scg_grad_check(scope.empty() ? nullptr : scope.c_str(), tol, trials, print_grad, nullptr);
    return report(s);
  }

  if (*graph) {
    scg_model* model = nullptr;
    if (auto s = scg_model_load(graph_ckpt.c_str(), &model); s != SCG_OK) return report(s);
    scg_graph_summary summary{};
    auto s = scg_model_export_graph(model, scene_index, graph_out.c_str(), &summary);
    scg_model_free(model);
    if (s != SCG_OK) return report(s);
    std::printf("n = %zu\ngamma = %.17g\nedge_density = %.17g\n", summary.n, summary.gamma, summary.edge_density);
    return 0;
  }
  return 0;
}
