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

// Checkpoint container:
//
//   magic    4 bytes "SCGC"
//   version  u32
//   echo     u64 length + UTF-8 text (run config plus training state keys)
//   count    u64
//   entries  count x (u32 name length + name, u64 blob length + TSR1 blob)
//
// All integers little-endian. Entries keep insertion order, so writing a
// loaded checkpoint reproduces the original bytes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "scgnet/model.hpp"

namespace scg {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::string config_echo;
  std::vector<NamedTensor> entries;

  // nullptr when absent.
  const Tensor* find(std::string_view name) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
// Throws CorruptFileError on malformed input and VersionError on a version
// other than kCheckpointVersion. Nothing is returned unless the whole file
// parses.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies "param/<name>" and "buffer/<name>" entries into `model`, checking
// that every tensor is present with the right shape.
void load_model_state(Model& model, const Checkpoint& ckpt);
void append_model_state(Model& model, Checkpoint& ckpt);

}  // namespace scg
