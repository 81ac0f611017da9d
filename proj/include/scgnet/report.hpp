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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "scgnet/model.hpp"

namespace scg {

// "key = value" lines: classes, total, oa, mf1, f1.<k>, confusion.<truth>.
std::string format_metrics_text(const MetricsReport& r);
// class,f1 rows followed by oa and mf1 rows.
std::string format_metrics_csv(const MetricsReport& r);

void write_metrics(const std::filesystem::path& stem, const MetricsReport& r);  // <stem>.txt and <stem>.csv

// Binary PGM (P5) of a label map with maxval = classes - 1.
std::string encode_pgm(std::span<const std::int32_t> labels, std::size_t width, std::size_t height,
                       std::size_t classes);
// Binary PPM (P6) of a [3, H, W] image with values in [0, 1] (clamped).
std::string encode_ppm(std::span<const double> chw, std::size_t width, std::size_t height);

}  // namespace scg
