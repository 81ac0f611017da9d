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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "scgnet/scgnet.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("scgnet_capi_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void count_epochs(const scg_epoch_info* info, void* user) {
  auto* n = static_cast<std::size_t*>(user);
  *n = info->epoch;
}

void collect(const scg_grad_result* r, void* user) {
  static_cast<std::vector<std::string>*>(user)->push_back(r->scope);
}

}  // namespace

TEST_CASE("status strings and error reporting") {
  CHECK(std::strlen(scg_version()) > 0);
  CHECK(std::string(scg_status_string(SCG_OK)) != std::string(scg_status_string(SCG_ERR_IO)));
  scg_model* m = nullptr;
  CHECK(scg_model_load(nullptr, &m) == SCG_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(scg_last_error()) > 0);
  CHECK(scg_model_load("/nonexistent/file.scgc", &m) == SCG_ERR_IO);
  CHECK(m == nullptr);
  scg_model_free(nullptr);
  scg_metrics_free(nullptr);
  scg_tensor_free(nullptr);
}

TEST_CASE("tensor handles") {
  TempDir dir;
  const std::size_t shape[] = {2, 3};
  const double data[] = {1, 2, 3, 4, 5, 6};
  scg_tensor* t = nullptr;
  REQUIRE(scg_tensor_create(shape, 2, data, &t) == SCG_OK);
  CHECK(scg_tensor_rank(t) == 2);
  CHECK(scg_tensor_dim(t, 1) == 3);
  CHECK(scg_tensor_numel(t) == 6);
  const auto path = (dir.path / "t.tsr").string();
  CHECK(scg_tensor_write(t, path.c_str(), 64) == SCG_OK);
  CHECK(scg_tensor_write(t, path.c_str(), 16) == SCG_ERR_INVALID_ARGUMENT);
  scg_tensor* back = nullptr;
  REQUIRE(scg_tensor_read(path.c_str(), &back) == SCG_OK);
  CHECK(std::memcmp(scg_tensor_data(back), data, sizeof data) == 0);
  scg_tensor_free(back);
  scg_tensor_free(t);
  std::ofstream(dir.path / "junk.tsr") << "not a tensor";
  CHECK(scg_tensor_read((dir.path / "junk.tsr").string().c_str(), &back) == SCG_ERR_CORRUPT_FILE);
}

TEST_CASE("gradient checks through the C interface") {
  CHECK(scg_grad_check_scope_count() > 30);
  CHECK(scg_grad_check_scope_name(scg_grad_check_scope_count()) == nullptr);
  std::vector<std::string> seen;
  CHECK(scg_grad_check("dl_loss", 0, 0, collect, &seen) == SCG_OK);
  CHECK(seen == std::vector<std::string>{"dl_loss"});
  CHECK(scg_grad_check("dl_loss", 1e-30, 1, nullptr, nullptr) == SCG_ERR_CHECK_FAILED);
  CHECK(scg_grad_check("nope", 0, 0, nullptr, nullptr) == SCG_ERR_UNKNOWN_SCOPE);
}

TEST_CASE("train, load, evaluate and export") {
  TempDir dir;
  const auto cfg = dir.path / "tiny.conf";
  std::ofstream(cfg) << "image_size = 16\nbackbone_widths = 4,6,8\nnode_h = 2\nnode_w = 2\n"
                        "scenes = 8\nbatch_size = 4\neval_scenes = 3\nepochs = 2\n";
  const auto out = dir.path / "run";
  std::size_t last_epoch = 0;
  scg_train_summary summary{};
  REQUIRE(scg_train(cfg.string().c_str(), nullptr, out.string().c_str(), count_epochs, &last_epoch, &summary) ==
          SCG_OK);
  CHECK(last_epoch == 2);
  CHECK(summary.epochs_run == 2);
  CHECK(summary.steps == 4);
  CHECK(std::isfinite(summary.final_loss));
  CHECK(fs::exists(out / "loss.csv"));

  std::ofstream(dir.path / "bad.conf") << "wat = 1\n";
  CHECK(scg_train((dir.path / "bad.conf").string().c_str(), nullptr, out.string().c_str(), nullptr, nullptr,
                  nullptr) == SCG_ERR_CONFIG);

  scg_model* model = nullptr;
  REQUIRE(scg_model_load((out / "checkpoint.scgc").string().c_str(), &model) == SCG_OK);
  scg_model_info info{};
  CHECK(scg_model_info_get(model, &info) == SCG_OK);
  CHECK(info.image_size == 16);
  CHECK(info.nodes == 4);
  CHECK(info.classes == 4);
  CHECK(info.epoch == 2);

  scg_metrics* metrics = nullptr;
  const auto pred = dir.path / "pred";
  REQUIRE(scg_model_evaluate(model, "offset=50,count=2", pred.string().c_str(), &metrics) == SCG_OK);
  CHECK(scg_metrics_classes(metrics) == 4);
  std::uint64_t total = 0;
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t p = 0; p < 4; ++p) total += scg_metrics_confusion(metrics, t, p);
  CHECK(total == 2 * 16 * 16);
  CHECK(std::isnan(scg_metrics_f1(metrics, 4)));
  CHECK(std::string(scg_metrics_text(metrics)).find("mf1 = ") != std::string::npos);
  CHECK(scg_metrics_write(metrics, (dir.path / "m").string().c_str()) == SCG_OK);
  CHECK(fs::exists(dir.path / "m.csv"));
  CHECK(fs::exists(pred / "scene_50_input.ppm"));
  CHECK(fs::exists(pred / "scene_51_pred.pgm"));
  scg_metrics_free(metrics);
  CHECK(scg_model_evaluate(model, "offset=x", nullptr, &metrics) == SCG_ERR_CONFIG);

  scg_graph_summary g{};
  CHECK(scg_model_export_graph(model, 0, (dir.path / "graph").string().c_str(), &g) == SCG_OK);
  CHECK(g.n == 4);
  CHECK(g.gamma > 1.0);
  CHECK(g.edge_density >= 0.0);
  CHECK(g.edge_density <= 1.0);
  scg_tensor* a = nullptr;
  REQUIRE(scg_tensor_read((dir.path / "graph" / "a_raw.tsr").string().c_str(), &a) == SCG_OK);
  CHECK(scg_tensor_dim(a, 0) == 4);
  scg_tensor_free(a);
  scg_model_free(model);

  // Truncated checkpoint.
  const auto bytes = [&] {
    std::ifstream in(out / "checkpoint.scgc", std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }();
  std::ofstream(dir.path / "cut.scgc", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  model = nullptr;
  CHECK(scg_model_load((dir.path / "cut.scgc").string().c_str(), &model) == SCG_ERR_CORRUPT_FILE);
  CHECK(model == nullptr);
}
