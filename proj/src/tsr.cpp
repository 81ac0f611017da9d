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

#include "scgnet/tsr.hpp"

#include <bit>
#include <fstream>
#include <limits>
#include <sstream>

namespace scg {

namespace le {

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::string_view Reader::take(std::size_t n) {
  if (n > remaining()) {
    throw CorruptFileError("unexpected end of data: need " + std::to_string(n) + " bytes, have " +
                           std::to_string(remaining()));
  }
  auto out = bytes_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t Reader::u8() { return static_cast<std::uint8_t>(take(1)[0]); }

std::uint32_t Reader::u32() {
  auto b = take(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[static_cast<std::size_t>(i)]);
  return v;
}

std::uint64_t Reader::u64() {
  auto b = take(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[static_cast<std::size_t>(i)]);
  return v;
}

}  // namespace le

namespace {
constexpr std::string_view kMagic = "TSR1";
}

std::string encode_tsr(const Tensor& t, TsrDType dtype) {
  if (t.rank() > 255) throw ShapeError("TSR supports rank <= 255");
  std::string out;
  const std::size_t width = dtype == TsrDType::F32 ? 4 : 8;
  out.reserve(6 + 8 * t.rank() + width * t.numel());
  out.append(kMagic);
  le::put_u8(out, static_cast<std::uint8_t>(dtype));
  le::put_u8(out, static_cast<std::uint8_t>(t.rank()));
  for (auto e : t.shape()) le::put_u64(out, e);
  for (auto v : t.data()) {
    if (dtype == TsrDType::F32) {
      le::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      le::put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

Tensor decode_tsr(std::string_view bytes) {
  le::Reader in(bytes);
  if (in.remaining() < 6 || in.take(4) != kMagic) throw CorruptFileError("bad TSR magic");
  const auto code = in.u8();
  if (code != 1 && code != 2) throw CorruptFileError("unknown TSR dtype code " + std::to_string(code));
  const auto rank = in.u8();
  Shape shape(rank);
  std::size_t count = 1;
  for (auto& e : shape) {
    e = in.u64();
    if (e == 0) throw CorruptFileError("TSR extent of zero");
    if (count > std::numeric_limits<std::size_t>::max() / e) throw CorruptFileError("TSR extents overflow");
    count *= e;
  }
  const std::size_t width = code == 1 ? 4 : 8;
  if (in.remaining() != count * width) {
    throw CorruptFileError("TSR payload has " + std::to_string(in.remaining()) + " bytes, expected " +
                           std::to_string(count * width));
  }
  Buffer data(count);
  for (auto& v : data) {
    v = code == 1 ? static_cast<Real>(std::bit_cast<float>(in.u32())) : std::bit_cast<double>(in.u64());
  }
  return Tensor::from_data(std::move(shape), std::move(data));
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_tsr(const std::filesystem::path& path, const Tensor& t, TsrDType dtype) {
  write_file_bytes(path, encode_tsr(t, dtype));
}

Tensor read_tsr(const std::filesystem::path& path) { return decode_tsr(read_file_bytes(path)); }

}  // namespace scg
