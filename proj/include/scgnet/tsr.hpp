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

// "TSR1" tensor blobs:
//
//   magic   4 bytes  "TSR1"
//   dtype   u8       1 = f32, 2 = f64
//   rank    u8
//   extents rank x u64, little-endian
//   payload row-major values, little-endian
//
// Only data and shape are stored; gradients and tape state are not.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "scgnet/tensor.hpp"

namespace scg {

enum class TsrDType : std::uint8_t { F32 = 1, F64 = 2 };

std::string encode_tsr(const Tensor& t, TsrDType dtype = TsrDType::F64);

// Throws CorruptFileError unless `bytes` is exactly one well-formed blob.
Tensor decode_tsr(std::string_view bytes);

void write_tsr(const std::filesystem::path& path, const Tensor& t, TsrDType dtype = TsrDType::F64);
Tensor read_tsr(const std::filesystem::path& path);

// Little-endian primitives shared with the checkpoint container.
namespace le {
void put_u8(std::string& out, std::uint8_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::string_view take(std::size_t n);
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};
}  // namespace le

std::string read_file_bytes(const std::filesystem::path& path);
// Writes through a temporary sibling and renames it into place.
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace scg
