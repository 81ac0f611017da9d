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

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>

#include "doctest.h"
#include "scgnet/checkpoint.hpp"
#include "scgnet/config.hpp"
#include "scgnet/errors.hpp"
#include "scgnet/gradcheck.hpp"
#include "scgnet/optimizer.hpp"
#include "scgnet/report.hpp"
#include "scgnet/scene.hpp"
#include "scgnet/train.hpp"
#include "scgnet/tsr.hpp"
#include "support.hpp"

using namespace scg;
namespace fs = std::filesystem;
using scgtest::random_tensor;
using scgtest::values;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("scgnet_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* kTinyConfig =
    "image_size = 16\n"
    "backbone_widths = 4,6,8\n"
    "node_h = 2\n"
    "node_w = 2\n"
    "scenes = 8\n"
    "batch_size = 4\n"
    "eval_scenes = 4\n"
    "epochs = 2\n"
    "seed = 11\n";

RunConfig tiny(std::size_t epochs = 2) {
  auto c = parse_run_config(kTinyConfig);
  c.train.epochs = epochs;
  return c;
}

std::vector<std::vector<double>> snapshot(std::vector<NamedTensor> ts) {
  std::vector<std::vector<double>> out;
  for (auto& t : ts) out.push_back(values(t.tensor));
  return out;
}

std::string slurp(const fs::path& p) { return read_file_bytes(p); }

}  // namespace

TEST_CASE("tsr round trip and rejection of damaged blobs") {
  std::mt19937_64 rng(1);
  auto t = random_tensor({2, 3, 4}, rng);
  auto back = decode_tsr(encode_tsr(t));
  CHECK(back.shape() == t.shape());
  CHECK(values(back) == values(t));
  auto f32 = decode_tsr(encode_tsr(t, TsrDType::F32));
  for (std::size_t i = 0; i < t.numel(); ++i) CHECK(f32.data()[i] == static_cast<double>(static_cast<float>(t.data()[i])));
  auto s = decode_tsr(encode_tsr(Tensor::scalar(2.5)));
  CHECK(s.rank() == 0);
  CHECK(s.item() == 2.5);

  const std::string blob = encode_tsr(t);
  CHECK(blob.size() == 4 + 1 + 1 + 3 * 8 + 24 * 8);
  CHECK(blob.substr(0, 4) == "TSR1");
  for (std::size_t cut = 0; cut < blob.size(); cut += 7) CHECK_THROWS_AS(decode_tsr(blob.substr(0, cut)), CorruptFileError);
  CHECK_THROWS_AS(decode_tsr(blob + "x"), CorruptFileError);
  std::string bad = blob;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_tsr(bad), CorruptFileError);
  bad = blob;
  bad[4] = 9;
  CHECK_THROWS_AS(decode_tsr(bad), CorruptFileError);

  TempDir dir("tsr");
  write_tsr(dir.path / "a.tsr", t);
  CHECK(values(read_tsr(dir.path / "a.tsr")) == values(t));
  CHECK_THROWS_AS(read_tsr(dir.path / "missing.tsr"), IoError);
}

TEST_CASE("config parsing, formatting and overrides") {
  auto c = parse_run_config("# comment\nepochs = 3 # trailing\n\nlearning_rate = 0.005\ndl_loss = false\n");
  CHECK(c.train.epochs == 3);
  CHECK(c.train.learning_rate == 0.005);
  CHECK_FALSE(c.train.dl_loss);
  auto again = parse_run_config(format_run_config(c));
  CHECK(format_run_config(again) == format_run_config(c));
  CHECK(again.train.learning_rate == 0.005);
  CHECK_THROWS_AS(parse_run_config("epochs = 3\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("epochs = 3\nepochs = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("epochs = three\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("image_size = 60\n").validate(), ConfigError);

  auto s = parse_run_config("seed = 9\n");
  CHECK(s.model.seed == 9);
  CHECK(s.train.seed == 9);
  CHECK(s.scene.seed == 9);
  ::setenv("SCG_SEED", "123", 1);
  apply_env_overrides(s);
  ::unsetenv("SCG_SEED");
  CHECK(s.model.seed == 123);
  CHECK(s.scene.seed == 123);
  auto untouched = parse_run_config("seed = 9\n");
  apply_env_overrides(untouched);
  CHECK(untouched.train.seed == 9);
  CHECK(format_real(0.1) == "0.1");
  CHECK(parse_real("x", format_real(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("scene selection") {
  SceneSelection base{SceneSpec{}, 1000, 10};
  auto inline_sel = parse_scene_selection("offset=5,count=3,noise=0", base);
  CHECK(inline_sel.offset == 5);
  CHECK(inline_sel.count == 3);
  CHECK(inline_sel.spec.noise == 0.0);
  CHECK(inline_sel.spec.seed == base.spec.seed);
  CHECK(parse_scene_selection("", base).count == 10);
  TempDir dir("sel");
  std::ofstream(dir.path / "s.txt") << "count = 2\nseed = 4\n";
  auto file_sel = parse_scene_selection((dir.path / "s.txt").string(), base);
  CHECK(file_sel.count == 2);
  CHECK(file_sel.spec.seed == 4);
  CHECK_THROWS_AS(parse_scene_selection("colour=red", base), ConfigError);
  CHECK_THROWS_AS(parse_scene_selection("count=0", base), ConfigError);
}

TEST_CASE("scene generation is deterministic and exact") {
  SceneSpec spec;
  auto a = generate_scene(spec, 17), b = generate_scene(spec, 17), c = generate_scene(spec, 18);
  CHECK(a.image == b.image);
  CHECK(a.mask == b.mask);
  CHECK(a.mask != c.mask);
  spec.noise = 0;
  SceneShape full;
  full.kind = ShapeKind::Rectangle;
  full.label = 1;
  full.x0 = full.y0 = 0;
  full.x1 = full.y1 = 64;
  auto flat = render_scene(spec, std::span<const SceneShape>(&full, 1), 0);
  const auto& col = default_palette(4)[1];
  CHECK(std::all_of(flat.mask.begin(), flat.mask.end(), [](std::int32_t v) { return v == 1; }));
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t i = 0; i < 64 * 64; ++i) CHECK(flat.image[ch * 4096 + i] == col[ch]);
  // Later shapes overwrite earlier ones.
  SceneShape two[2] = {full, full};
  two[1].label = 2;
  two[1].x1 = 32;
  auto layered = render_scene(spec, two, 0);
  CHECK(layered.mask[0] == 2);
  CHECK(layered.mask[63] == 1);
  two[1].label = 7;
  CHECK_THROWS_AS(render_scene(spec, two, 0), ConfigError);
}

TEST_CASE("default scenes keep every class between 2% and 90% of pixels") {
  SceneSpec spec;
  std::vector<double> freq(4, 0.0);
  for (auto& s : generate_scenes(spec, 0, 1000))
    for (auto v : s.mask) freq[static_cast<std::size_t>(v)] += 1.0;
  for (auto& f : freq) {
    f /= 1000.0 * 64 * 64;
    CHECK(f >= 0.02);
    CHECK(f <= 0.90);
  }
}

TEST_CASE("report encodings") {
  std::vector<std::int32_t> labels = {0, 1, 2, 3, 3, 0};
  auto pgm = encode_pgm(labels, 3, 2, 4);
  CHECK(pgm.substr(0, 9) == "P5\n3 2\n3\n");
  CHECK(pgm.size() == 9 + 6);
  CHECK(static_cast<unsigned char>(pgm[9 + 3]) == 3);
  labels[0] = 4;
  CHECK_THROWS(encode_pgm(labels, 3, 2, 4));
  std::vector<double> chw = {-1, 0.5, 2, 1, 0, 0, 0, 0.25, 1, 0, 0, 0};
  auto ppm = encode_ppm(chw, 2, 2);
  CHECK(ppm.substr(0, 11) == "P6\n2 2\n255\n");
  CHECK(static_cast<unsigned char>(ppm[11]) == 0);
  CHECK(static_cast<unsigned char>(ppm[11 + 3]) == 128);
  CHECK(static_cast<unsigned char>(ppm[11 + 6]) == 255);

  auto r = metrics_from_confusion(2, {3, 1, 0, 4});
  auto text = format_metrics_text(r);
  CHECK(text.find("oa = 0.875\n") != std::string::npos);
  CHECK(text.find("confusion.0 = 3,1\n") != std::string::npos);
  auto csv = format_metrics_csv(r);
  CHECK(csv.rfind("class,f1\n", 0) == 0);
  CHECK(csv.find("oa,0.875\n") != std::string::npos);
}

TEST_CASE("adam first step moves each weight by the learning rate") {
  auto p = Tensor::from_data({3}, {1.0, -2.0, 0.5}, true);
  auto loss = sum_all(p * Tensor::from_data({3}, {3.0, -0.5, 0.0}));
  loss.backward();
  Optimizer opt(OptimizerKind::Adam, 0.01);
  opt.step({{"p", p}});
  CHECK(std::abs(p.data()[0] - (1.0 - 0.01 * 3.0 / (3.0 + 1e-8))) < 1e-15);
  CHECK(std::abs(p.data()[1] - (-2.0 + 0.01 * 0.5 / (0.5 + 1e-8))) < 1e-15);
  CHECK(p.data()[2] == 0.5);
  CHECK(opt.steps() == 1);

  auto q = Tensor::from_data({1}, {1.0}, true);
  sum_all(q * Tensor::from_data({1}, {2.0})).backward();
  Optimizer sgd(OptimizerKind::SgdMomentum, 0.1, 0.9);
  sgd.step({{"q", q}});
  sgd.step({{"q", q}});
  CHECK(std::abs(q.data()[0] - (1.0 - 0.1 * 2.0 - 0.1 * (0.9 * 2.0 + 2.0))) < 1e-15);
}

TEST_CASE("checkpoint bytes round trip and damaged files are rejected") {
  Trainer t(tiny(1));
  t.run_epoch();
  auto ckpt = t.checkpoint();
  const std::string bytes = serialize_checkpoint(ckpt);
  CHECK(bytes.substr(0, 4) == "SCGC");
  CHECK(serialize_checkpoint(deserialize_checkpoint(bytes)) == bytes);

  for (std::size_t cut = 0; cut < bytes.size(); cut += 97) {
    CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, cut)), CorruptFileError);
  }
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 1)), CorruptFileError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes + '\0'), CorruptFileError);
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(bad), CorruptFileError);
  bad = bytes;
  bad[4] = 2;
  CHECK_THROWS_AS(deserialize_checkpoint(bad), VersionError);

  TempDir dir("ckpt");
  save_checkpoint(dir.path / "c.scgc", ckpt);
  CHECK(slurp(dir.path / "c.scgc") == bytes);
  auto loaded = model_from_checkpoint(load_checkpoint(dir.path / "c.scgc"));
  CHECK(snapshot(loaded.model.named_parameters()) == snapshot(t.model().named_parameters()));
  CHECK(snapshot(loaded.model.named_buffers()) == snapshot(t.model().named_buffers()));

  // A checkpoint missing one tensor leaves the target untouched.
  Model fresh(t.config().model);
  const auto before = snapshot(fresh.named_parameters());
  auto partial = ckpt;
  partial.entries.pop_back();
  auto keep = std::find_if(partial.entries.begin(), partial.entries.end(),
                           [](const NamedTensor& e) { return e.name.rfind("param/gcn.", 0) == 0; });
  REQUIRE(keep != partial.entries.end());
  partial.entries.erase(keep);
  CHECK_THROWS(load_model_state(fresh, partial));
  CHECK(snapshot(fresh.named_parameters()) == before);
}

TEST_CASE("zero learning rate leaves parameters bitwise unchanged") {
  auto c = tiny(1);
  c.train.learning_rate = 0.0;
  Trainer t(c);
  const auto params = snapshot(t.model().named_parameters());
  const auto buffers = snapshot(t.model().named_buffers());
  t.run_epoch();
  CHECK(snapshot(t.model().named_parameters()) == params);
  CHECK(snapshot(t.model().named_buffers()) != buffers);
}

TEST_CASE("seeded runs are reproducible and resumable") {
  TempDir a("runa"), b("runb"), c("runc");
  auto full = train(tiny(2), {a.path, {}, {}});
  train(tiny(2), {b.path, {}, {}});
  CHECK(slurp(a.path / "loss.csv") == slurp(b.path / "loss.csv"));
  CHECK(slurp(a.path / "checkpoint.scgc") == slurp(b.path / "checkpoint.scgc"));
  CHECK(full.losses.size() == 4);
  CHECK(slurp(a.path / "loss.csv").rfind("step,dice,kl,dl,total\n", 0) == 0);

  train(tiny(1), {c.path, {}, {}});
  train(tiny(2), {c.path, c.path / "checkpoint.scgc", {}});
  CHECK(slurp(c.path / "loss.csv") == slurp(a.path / "loss.csv"));
  auto resumed = model_from_checkpoint(load_checkpoint(c.path / "checkpoint.scgc"));
  auto straight = model_from_checkpoint(load_checkpoint(a.path / "checkpoint.scgc"));
  CHECK(snapshot(resumed.model.named_parameters()) == snapshot(straight.model.named_parameters()));
  CHECK(slurp(c.path / "checkpoint.scgc") == slurp(a.path / "checkpoint.scgc"));
  CHECK(fs::exists(a.path / "eval_metrics.txt"));
  CHECK(fs::exists(a.path / "train_metrics.csv"));
  CHECK(fs::exists(a.path / "metrics_history.csv"));

  auto other = tiny(2);
  other.model.backbone_widths = {4, 6, 10};
  CHECK_THROWS_AS(Trainer(other, load_checkpoint(a.path / "checkpoint.scgc")), ConfigError);
}

TEST_CASE("graph export") {
  Trainer t(tiny(1));
  auto g = export_graph(t.model(), generate_scene(t.config().scene, 3));
  CHECK(g.n == 4);
  CHECK(g.a_raw.shape() == Shape{4, 4});
  double trace = 0;
  for (std::size_t i = 0; i < 4; ++i) trace += g.a_raw.at({i, i});
  CHECK(std::abs(g.gamma - std::sqrt(1.0 + 4.0 / (trace + kEpsNum))) < 1e-12);
  std::size_t edges = 0;
  for (double v : g.a_raw.data()) edges += v > kEdgeThreshold;
  CHECK(g.edge_density == static_cast<double>(edges) / 16.0);
  TempDir dir("graph");
  write_graph_export(dir.path, g);
  CHECK(values(read_tsr(dir.path / "a_norm.tsr")) == values(g.a_norm));
  CHECK(slurp(dir.path / "summary.txt").find("n = 4\n") != std::string::npos);
}

TEST_CASE("every differentiable operation has a gradient check") {
  const auto scopes = grad_check_scopes();
  const std::set<std::string> registered(scopes.begin(), scopes.end());
  for (auto op : differentiable_ops()) CHECK_MESSAGE(registered.count(std::string(op)), op);
  CHECK(registered.count("model"));

  // Walk a full training tape and make sure nothing unregistered shows up.
  Model m(micro_model_config());
  std::mt19937_64 rng(1);
  auto x = random_tensor({2, 3, 16, 16}, rng);
  Labels labels{2, 16, 16, std::vector<std::int32_t>(512, 1)};
  auto out = model_forward(x, m, Mode::Train, rng);
  auto loss = total_loss(dice_loss(out.logits, labels), out.scg.kl, out.scg.dl).total;
  std::set<const TapeNode*> seen;
  std::vector<const TapeNode*> stack{loss.grad_fn()};
  std::set<std::string> ops;
  while (!stack.empty()) {
    const TapeNode* node = stack.back();
    stack.pop_back();
    if (!node || !seen.insert(node).second) continue;
    ops.insert(std::string(node->op));
    for (const auto& in : node->inputs) stack.push_back(in.grad_fn());
  }
  CHECK(ops.size() > 10);
  for (const auto& op : ops) CHECK_MESSAGE(registered.count(op), op);
}

TEST_CASE("grad_check runner") {
  auto r = grad_check("kl_loss");
  CHECK(r.passed);
  CHECK(r.max_rel_error < 1e-6);
  CHECK(r.tier == GradTier::Elementary);
  CHECK(grad_check("enhance_and_normalize").max_rel_error < 1e-5);
  CHECK_FALSE(grad_check("kl_loss", 1, 1e-30).passed);
  CHECK_THROWS_AS(grad_check("no_such_op"), UnknownScopeError);
  CHECK_THROWS_AS(scope_tier("no_such_op"), UnknownScopeError);
}
