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
#include <map>
#include <string>
#include <vector>

#include "scgnet/config.hpp"
#include "scgnet/model.hpp"

namespace scg {

class Optimizer {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kAdamEps = 1e-8;

  Optimizer(OptimizerKind kind, double learning_rate, double momentum = 0.9);

  // Applies one update using each parameter's accumulated gradient.
  void step(const std::vector<NamedTensor>& params);

  std::uint64_t steps() const { return steps_; }
  OptimizerKind kind() const { return kind_; }

  // Moment buffers as named tensors ("adam.m/<param>", "adam.v/<param>" or
  // "sgd.velocity/<param>").
  std::vector<NamedTensor> state() const;
  void restore(std::uint64_t steps, const std::vector<NamedTensor>& entries);

 private:
  OptimizerKind kind_;
  double lr_;
  double momentum_;
  std::uint64_t steps_ = 0;
  std::map<std::string, Buffer> first_;
  std::map<std::string, Buffer> second_;
};

}  // namespace scg
