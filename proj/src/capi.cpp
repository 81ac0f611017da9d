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

#include "scgnet/scgnet.h"

#include <cmath>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "scgnet/checkpoint.hpp"
#include "scgnet/config.hpp"
#include "scgnet/gradcheck.hpp"
#include "scgnet/report.hpp"
#include "scgnet/train.hpp"
#include "scgnet/tsr.hpp"

struct scg_model {
  scg::RunConfig config;
  std::unique_ptr<scg::Model> model;
  std::size_t epoch = 0;
};

struct scg_metrics {
  scg::MetricsReport report;
  std::string text;
};

struct scg_tensor {
  scg::Tensor tensor;
};

namespace {

thread_local std::string g_last_error;

scg_status fail(scg_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Maps the library's exception hierarchy onto status codes.
template <typename F>
scg_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return SCG_OK;
  } catch (const scg::ShapeError& e) {
    return fail(SCG_ERR_SHAPE, e.what());
  } catch (const scg::DomainError& e) {
    return fail(SCG_ERR_DOMAIN, e.what());
  } catch (const scg::ConfigError& e) {
    return fail(SCG_ERR_CONFIG, e.what());
  } catch (const scg::CorruptFileError& e) {
    return fail(SCG_ERR_CORRUPT_FILE, e.what());
  } catch (const scg::VersionError& e) {
    return fail(SCG_ERR_VERSION, e.what());
  } catch (const scg::IoError& e) {
    return fail(SCG_ERR_IO, e.what());
  } catch (const scg::UnknownScopeError& e) {
    return fail(SCG_ERR_UNKNOWN_SCOPE, e.what());
  } catch (const scg::NonFiniteLossError& e) {
    return fail(SCG_ERR_NON_FINITE, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(SCG_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SCG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SCG_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SCG_ERR_INTERNAL, "unknown error");
  }
}

struct InvalidArgument : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

scg_status run(auto&& body) {
  g_last_error.clear();
  try {
    body();
    return SCG_OK;
  } catch (const InvalidArgument& e) {
    return fail(SCG_ERR_INVALID_ARGUMENT, e.what());
  } catch (...) {
    // Rethrow into the common mapper.
    return guarded([&] { throw; });
  }
}

scg_epoch_info to_info(const scg::EpochRecord& r) {
  scg_epoch_info info{};
  info.epoch = r.epoch;
  info.mean_total = r.mean_total;
  info.mean_dice = r.mean_dice;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  info.train_mf1 = info.train_oa = info.eval_mf1 = info.eval_oa = info.mean_diagonal = nan;
  if (r.train && r.eval) {
    info.has_metrics = 1;
    info.train_mf1 = r.train->metrics.mean_f1;
    info.train_oa = r.train->metrics.overall_accuracy;
    info.eval_mf1 = r.eval->metrics.mean_f1;
    info.eval_oa = r.eval->metrics.overall_accuracy;
    info.mean_diagonal = r.eval->mean_diagonal;
  }
  return info;
}

}  // namespace

extern "C" {

const char* scg_version(void) { return "1.0.0"; }

const char* scg_status_string(scg_status status) {
  switch (status) {
    case SCG_OK: return "ok";
    case SCG_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SCG_ERR_SHAPE: return "shape error";
    case SCG_ERR_DOMAIN: return "domain error";
    case SCG_ERR_CONFIG: return "config error";
    case SCG_ERR_IO: return "i/o error";
    case SCG_ERR_CORRUPT_FILE: return "corrupt file";
    case SCG_ERR_VERSION: return "version mismatch";
    case SCG_ERR_UNKNOWN_SCOPE: return "unknown scope";
    case SCG_ERR_NON_FINITE: return "non-finite loss";
    case SCG_ERR_CHECK_FAILED: return "check failed";
    case SCG_ERR_INTERNAL: return "internal error";
  }
  return "unrecognized status";
}

const char* scg_last_error(void) { return g_last_error.c_str(); }

scg_status scg_train(const char* config_path, const char* resume_path, const char* out_dir,
                     scg_epoch_callback callback, void* user, scg_train_summary* summary) {
  return run([&] {
    require(config_path && out_dir, "config_path and out_dir are required");
    auto config = scg::load_run_config(config_path);
    scg::apply_env_overrides(config);
    config.validate();
    scg::TrainOptions opts;
    opts.out_dir = out_dir;
    if (resume_path && *resume_path) opts.resume = std::filesystem::path(resume_path);
    if (callback) {
      opts.on_epoch = [&](const scg::EpochRecord& r) {
        const auto info = to_info(r);
        callback(&info, user);
      };
    }
    auto result = scg::train(config, opts);
    if (summary) {
      summary->epochs_run = result.epochs.size();
      summary->steps = result.losses.empty() ? 0 : result.losses.back().step;
      summary->final_loss =
          result.epochs.empty() ? std::numeric_limits<double>::quiet_NaN() : result.epochs.back().mean_total;
      summary->train_mf1 = result.final_train.metrics.mean_f1;
      summary->train_oa = result.final_train.metrics.overall_accuracy;
      summary->eval_mf1 = result.final_eval.metrics.mean_f1;
      summary->eval_oa = result.final_eval.metrics.overall_accuracy;
      summary->mean_diagonal = result.final_eval.mean_diagonal;
    }
  });
}

scg_status scg_model_load(const char* checkpoint_path, scg_model** out) {
  return run([&] {
    require(checkpoint_path && out, "checkpoint_path and out are required");
    *out = nullptr;
    auto ckpt = scg::load_checkpoint(checkpoint_path);
    auto loaded = scg::model_from_checkpoint(ckpt);
    auto handle = std::make_unique<scg_model>();
    handle->config = loaded.config;
    handle->model = std::make_unique<scg::Model>(std::move(loaded.model));
    const auto echo = scg::parse_key_values(ckpt.config_echo);
    for (const auto& [k, v] : echo)
      if (k == "epoch") handle->epoch = scg::parse_uint(k, v);
    *out = handle.release();
  });
}

void scg_model_free(scg_model* model) { delete model; }

scg_status scg_model_info_get(const scg_model* model, scg_model_info* info) {
  return run([&] {
    require(model && info, "model and info are required");
    const auto& c = model->config.model;
    info->image_size = c.image_size;
    info->classes = c.classes;
    info->nodes = c.nodes();
    info->feature_channels = c.feature_channels();
    info->parameter_count = model->model->parameter_count();
    info->epoch = model->epoch;
  });
}

scg_status scg_model_evaluate(scg_model* model, const char* scene_spec, const char* out_dir, scg_metrics** out) {
  return run([&] {
    require(model && out, "model and out are required");
    *out = nullptr;
    scg::SceneSelection base{model->config.scene, model->config.train.eval_offset, model->config.train.eval_scenes};
    auto sel = scg::parse_scene_selection(scene_spec ? scene_spec : "", base);
    auto scenes = scg::generate_scenes(sel.spec, sel.offset, sel.count);
    auto summary = scg::evaluate_scenes(*model->model, scenes, model->config.train.batch_size);
    if (out_dir && *out_dir) {
      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      scg::NoGradGuard no_grad;
      std::mt19937_64 unused(0);
      const auto c = model->config.model.classes;
      for (std::size_t i = 0; i < scenes.size(); ++i) {
        const std::size_t idx[] = {i};
        auto batch = scg::make_batch(scenes, idx);
        auto fwd = scg::model_forward(batch.images, *model->model, scg::Mode::Eval, unused);
        auto pred = scg::predict_classes(fwd.logits);
        const auto size = scenes[i].size;
        const std::string stem = "scene_" + std::to_string(sel.offset + i);
        scg::write_file_bytes(dir / (stem + "_input.ppm"), scg::encode_ppm(scenes[i].image, size, size));
        scg::write_file_bytes(dir / (stem + "_pred.pgm"), scg::encode_pgm(pred, size, size, c));
      }
    }
    auto handle = std::make_unique<scg_metrics>();
    handle->report = summary.metrics;
    handle->text = scg::format_metrics_text(summary.metrics) +
                   "mean_diagonal = " + scg::format_real(summary.mean_diagonal) + "\n" +
                   "mean_gamma = " + scg::format_real(summary.mean_gamma) + "\n";
    *out = handle.release();
  });
}

void scg_metrics_free(scg_metrics* metrics) { delete metrics; }

size_t scg_metrics_classes(const scg_metrics* metrics) { return metrics ? metrics->report.classes : 0; }

double scg_metrics_overall_accuracy(const scg_metrics* metrics) {
  return metrics ? metrics->report.overall_accuracy : std::numeric_limits<double>::quiet_NaN();
}

double scg_metrics_mean_f1(const scg_metrics* metrics) {
  return metrics ? metrics->report.mean_f1 : std::numeric_limits<double>::quiet_NaN();
}

double scg_metrics_f1(const scg_metrics* metrics, size_t cls) {
  if (!metrics || cls >= metrics->report.classes) return std::numeric_limits<double>::quiet_NaN();
  return metrics->report.f1[cls];
}

uint64_t scg_metrics_confusion(const scg_metrics* metrics, size_t truth, size_t predicted) {
  if (!metrics || truth >= metrics->report.classes || predicted >= metrics->report.classes) return 0;
  return metrics->report.count(truth, predicted);
}

const char* scg_metrics_text(const scg_metrics* metrics) { return metrics ? metrics->text.c_str() : ""; }

scg_status scg_metrics_write(const scg_metrics* metrics, const char* path_stem) {
  return run([&] {
    require(metrics && path_stem, "metrics and path_stem are required");
    scg::write_metrics(path_stem, metrics->report);
  });
}

scg_status scg_model_export_graph(scg_model* model, uint64_t scene_index, const char* out_dir,
                                  scg_graph_summary* summary) {
  return run([&] {
    require(model && out_dir, "model and out_dir are required");
    auto scene = scg::generate_scene(model->config.scene, scene_index);
    auto g = scg::export_graph(*model->model, scene);
    scg::write_graph_export(out_dir, g);
    if (summary) {
      summary->n = g.n;
      summary->gamma = g.gamma;
      summary->edge_density = g.edge_density;
    }
  });
}

size_t scg_grad_check_scope_count(void) { return scg::grad_check_scopes().size(); }

const char* scg_grad_check_scope_name(size_t index) {
  static const std::vector<std::string> names = scg::grad_check_scopes();
  return index < names.size() ? names[index].c_str() : nullptr;
}

scg_status scg_grad_check(const char* scope, double tolerance, size_t trials, scg_grad_callback callback,
                          void* user) {
  bool all_passed = true;
  std::string first_failure;
  auto status = run([&] {
    std::optional<double> tol;
    if (tolerance > 0.0) tol = tolerance;
    auto report = [&](const scg::ScopeReport& r) {
      if (!r.passed && all_passed) {
        all_passed = false;
        first_failure = r.scope + ": max relative error " + scg::format_real(r.max_rel_error) + " exceeds " +
                        scg::format_real(r.tolerance);
      }
      if (callback) {
        scg_grad_result res{r.scope.c_str(), scg::tier_name(r.tier), r.tolerance, r.max_rel_error,
                            r.trials,        r.seconds,              r.passed ? 1 : 0};
        callback(&res, user);
      }
    };
    if (scope && *scope) report(scg::grad_check(scope, trials, tol));
    else scg::grad_check_all(trials, tol, 20240601, report);
  });
  if (status != SCG_OK) return status;
  return all_passed ? SCG_OK : fail(SCG_ERR_CHECK_FAILED, first_failure);
}

scg_status scg_tensor_read(const char* path, scg_tensor** out) {
  return run([&] {
    require(path && out, "path and out are required");
    *out = nullptr;
    auto t = std::make_unique<scg_tensor>();
    t->tensor = scg::read_tsr(path);
    *out = t.release();
  });
}

scg_status scg_tensor_create(const size_t* shape, size_t rank, const double* data, scg_tensor** out) {
  return run([&] {
    require(out && (rank == 0 || shape), "shape and out are required");
    *out = nullptr;
    scg::Shape s(shape, shape + rank);
    const auto n = scg::shape_numel(s);
    require(n == 0 || data, "data is required for a non-empty tensor");
    auto t = std::make_unique<scg_tensor>();
    t->tensor = scg::Tensor::from_data(s, scg::Buffer(data, data + n));
    *out = t.release();
  });
}

void scg_tensor_free(scg_tensor* tensor) { delete tensor; }

size_t scg_tensor_rank(const scg_tensor* tensor) { return tensor ? tensor->tensor.rank() : 0; }

size_t scg_tensor_dim(const scg_tensor* tensor, size_t axis) {
  if (!tensor || axis >= tensor->tensor.rank()) return 0;
  return tensor->tensor.dim(axis);
}

size_t scg_tensor_numel(const scg_tensor* tensor) { return tensor ? tensor->tensor.numel() : 0; }

const double* scg_tensor_data(const scg_tensor* tensor) { return tensor ? tensor->tensor.data().data() : nullptr; }

scg_status scg_tensor_write(const scg_tensor* tensor, const char* path, int dtype_bits) {
  return run([&] {
    require(tensor && path, "tensor and path are required");
    require(dtype_bits == 32 || dtype_bits == 64, "dtype_bits must be 32 or 64");
    scg::write_tsr(path, tensor->tensor, dtype_bits == 32 ? scg::TsrDType::F32 : scg::TsrDType::F64);
  });
}

}  // extern "C"
