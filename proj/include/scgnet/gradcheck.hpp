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

// Central finite-difference checks of the tape gradients.
//
// Each scope builds a small random instance, reduces the output to a scalar
// with fixed random weights, and compares every input gradient with
// (L(x + h) - L(x - h)) / 2h. The error of a parameter group is
//
//   max_i |analytic_i - numeric_i| / max(max_i |analytic_i|, max_i |numeric_i|, floor)
//
// so tiny individual entries do not inflate it. The floor is 1e-3 times the
// largest gradient entry over all groups of the check: a group whose true
// gradient is exactly zero (a conv bias feeding a training-mode batch norm)
// is then measured against the scale of the loss instead of its own
// round-off.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scgnet/model.hpp"

namespace scg {

enum class GradTier { Elementary, Composite, Model };

double tier_tolerance(GradTier tier);  // 1e-6, 1e-5, 1e-3
const char* tier_name(GradTier tier);

struct GroupError {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
};

struct FdResult {
  std::vector<GroupError> groups;
  double max_rel_error = 0.0;
};

// `loss` must be deterministic and return a scalar. Detached values are
// recorded at the base point and replayed at every perturbed point.
FdResult finite_difference_check(const std::function<Tensor()>& loss, const std::vector<NamedTensor>& inputs,
                                 double step = 1e-6);

struct ScopeReport {
  std::string scope;
  GradTier tier = GradTier::Elementary;
  double tolerance = 0.0;
  std::size_t trials = 0;
  double max_rel_error = 0.0;
  std::vector<GroupError> groups;  // worst trial per group
  double seconds = 0.0;
  bool passed = false;
};

// Every registered scope, elementary first, "model" last.
std::vector<std::string> grad_check_scopes();
GradTier scope_tier(const std::string& scope);  // UnknownScopeError if unregistered

// trials = 0 picks the default (3, or 1 for "model"); tolerance defaults to the tier bound.
ScopeReport grad_check(const std::string& scope, std::size_t trials = 0, std::optional<double> tolerance = {},
                       std::uint64_t seed = 20240601);

std::vector<ScopeReport> grad_check_all(std::size_t trials = 0, std::optional<double> tolerance = {},
                                        std::uint64_t seed = 20240601,
                                        const std::function<void(const ScopeReport&)>& on_report = {});

// Small configuration used by the "model" scope: 16x16 input, three stages of
// widths (4, 8, 8), 2x2 node grid, three classes, batch of two.
ModelConfig micro_model_config();

}  // namespace scg
