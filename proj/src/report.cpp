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

#include "scgnet/report.hpp"

#include <algorithm>
#include <cmath>

#include "scgnet/config.hpp"
#include "scgnet/tsr.hpp"

namespace scg {

std::string format_metrics_text(const MetricsReport& r) {
  std::string out;
  out += "classes = " + std::to_string(r.classes) + "\n";
  out += "total = " + std::to_string(r.total()) + "\n";
  out += "oa = " + format_real(r.overall_accuracy) + "\n";
  out += "mf1 = " + format_real(r.mean_f1) + "\n";
  for (std::size_t k = 0; k < r.classes; ++k) out += "f1." + std::to_string(k) + " = " + format_real(r.f1[k]) + "\n";
  for (std::size_t t = 0; t < r.classes; ++t) {
    out += "confusion." + std::to_string(t) + " = ";
    for (std::size_t p = 0; p < r.classes; ++p) {
      if (p) out += ',';
      out += std::to_string(r.count(t, p));
    }
    out += '\n';
  }
  return out;
}

std::string format_metrics_csv(const MetricsReport& r) {
  std::string out = "class,f1\n";
  for (std::size_t k = 0; k < r.classes; ++k) out += std::to_string(k) + "," + format_real(r.f1[k]) + "\n";
  out += "oa," + format_real(r.overall_accuracy) + "\n";
  out += "mf1," + format_real(r.mean_f1) + "\n";
  return out;
}

void write_metrics(const std::filesystem::path& stem, const MetricsReport& r) {
  auto txt = stem;
  auto csv = stem;
  txt += ".txt";
  csv += ".csv";
  write_file_bytes(txt, format_metrics_text(r));
  write_file_bytes(csv, format_metrics_csv(r));
}

std::string encode_pgm(std::span<const std::int32_t> labels, std::size_t width, std::size_t height,
                       std::size_t classes) {
  if (labels.size() != width * height) throw ShapeError("label map size does not match width x height");
  if (classes < 2 || classes > 256) throw DomainError("PGM masks support 2 to 256 classes");
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
                    std::to_string(classes - 1) + "\n";
  for (auto v : labels) {
    if (v < 0 || static_cast<std::size_t>(v) >= classes) throw DomainError("label outside the class range");
    out.push_back(static_cast<char>(v));
  }
  return out;
}

std::string encode_ppm(std::span<const double> chw, std::size_t width, std::size_t height) {
  const std::size_t plane = width * height;
  if (chw.size() != 3 * plane) throw ShapeError("PPM expects a [3, H, W] image");
  std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double v = std::clamp(chw[ch * plane + i], 0.0, 1.0);
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
  return out;
}

}  // namespace scg
