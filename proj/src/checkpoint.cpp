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

#include "scgnet/checkpoint.hpp"

#include <algorithm>
#include <set>

#include "scgnet/tsr.hpp"

namespace scg {

namespace {
constexpr std::string_view kMagic = "SCGC";
}

const Tensor* Checkpoint::find(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e.tensor;
  return nullptr;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out;
  out.append(kMagic);
  le::put_u32(out, ckpt.version);
  le::put_u64(out, ckpt.config_echo.size());
  out.append(ckpt.config_echo);
  le::put_u64(out, ckpt.entries.size());
  for (const auto& e : ckpt.entries) {
    le::put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.append(e.name);
    auto blob = encode_tsr(e.tensor);
    le::put_u64(out, blob.size());
    out.append(blob);
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  le::Reader in(bytes);
  if (in.remaining() < 8 || in.take(4) != kMagic) throw CorruptFileError("not a checkpoint (bad magic)");
  Checkpoint ckpt;
  ckpt.version = in.u32();
  if (ckpt.version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(ckpt.version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  const auto echo_len = in.u64();
  ckpt.config_echo = std::string(in.take(echo_len));
  const auto count = in.u64();
  // Every entry needs at least 4 + 8 bytes; rejects absurd counts early.
  if (count > in.remaining() / 12) throw CorruptFileError("checkpoint entry count exceeds file size");
  std::set<std::string> names;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = in.u32();
    std::string name(in.take(name_len));
    const auto blob_len = in.u64();
    auto tensor = decode_tsr(in.take(blob_len));
    if (!names.insert(name).second) throw CorruptFileError("duplicate checkpoint entry '" + name + "'");
    ckpt.entries.push_back({std::move(name), std::move(tensor)});
  }
  if (in.remaining() != 0) throw CorruptFileError("trailing bytes after checkpoint entries");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_bytes(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file_bytes(path));
}

void append_model_state(Model& model, Checkpoint& ckpt) {
  for (auto& p : model.named_parameters())
    ckpt.entries.push_back({"param/" + p.name, Tensor::from_data(p.tensor.shape(), Buffer(p.tensor.data().begin(), p.tensor.data().end()))});
  for (auto& b : model.named_buffers())
    ckpt.entries.push_back({"buffer/" + b.name, Tensor::from_data(b.tensor.shape(), Buffer(b.tensor.data().begin(), b.tensor.data().end()))});
}

void load_model_state(Model& model, const Checkpoint& ckpt) {
  auto copy_into = [&](const std::string& key, Tensor dst) {
    const Tensor* src = ckpt.find(key);
    if (!src) throw CorruptFileError("checkpoint is missing '" + key + "'");
    if (src->shape() != dst.shape()) {
      throw CorruptFileError("checkpoint entry '" + key + "' has shape " + shape_str(src->shape()) + ", model expects " +
                             shape_str(dst.shape()));
    }
    auto out = dst.mutable_data();
    std::copy(src->data().begin(), src->data().end(), out.begin());
  };
  // Validate everything before the first write so a bad file leaves the model untouched.
  for (auto& p : model.named_parameters()) {
    const Tensor* src = ckpt.find("param/" + p.name);
    if (!src || src->shape() != p.tensor.shape()) throw CorruptFileError("checkpoint entry 'param/" + p.name + "' missing or misshapen");
  }
  for (auto& b : model.named_buffers()) {
    const Tensor* src = ckpt.find("buffer/" + b.name);
    if (!src || src->shape() != b.tensor.shape()) throw CorruptFileError("checkpoint entry 'buffer/" + b.name + "' missing or misshapen");
  }
  for (auto& p : model.named_parameters()) copy_into("param/" + p.name, p.tensor);
  for (auto& b : model.named_buffers()) copy_into("buffer/" + b.name, b.tensor);
}

}  // namespace scg
