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

#include "scgnet/optimizer.hpp"

#include <cmath>

namespace scg {

namespace {
const std::string kAdamM = "adam.m/";
const std::string kAdamV = "adam.v/";
const std::string kVelocity = "sgd.velocity/";
}  // namespace

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, double momentum)
    : kind_(kind), lr_(learning_rate), momentum_(momentum) {}

void Optimizer::step(const std::vector<NamedTensor>& params) {
  ++steps_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps_));
  for (const auto& [name, t] : params) {
    Tensor p = t;
    if (!p.has_grad()) continue;
    auto g = p.grad();
    auto w = p.mutable_data();
    auto& m = first_[name];
    if (m.empty()) m.assign(w.size(), 0.0);
    if (kind_ == OptimizerKind::Adam) {
      auto& v = second_[name];
      if (v.empty()) v.assign(w.size(), 0.0);
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= lr_ * mhat / (std::sqrt(vhat) + kAdamEps);
      }
    } else {
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = momentum_ * m[i] + g[i];
        w[i] -= lr_ * m[i];
      }
    }
  }
}

std::vector<NamedTensor> Optimizer::state() const {
  std::vector<NamedTensor> out;
  for (const auto& [name, m] : first_) {
    if (kind_ == OptimizerKind::Adam) {
      out.push_back({kAdamM + name, Tensor::from_data({m.size()}, m)});
      out.push_back({kAdamV + name, Tensor::from_data({m.size()}, second_.at(name))});
    } else {
      out.push_back({kVelocity + name, Tensor::from_data({m.size()}, m)});
    }
  }
  return out;
}

void Optimizer::restore(std::uint64_t steps, const std::vector<NamedTensor>& entries) {
  steps_ = steps;
  first_.clear();
  second_.clear();
  auto strip = [](const std::string& s, const std::string& prefix, std::string& rest) {
    if (s.rfind(prefix, 0) != 0) return false;
    rest = s.substr(prefix.size());
    return true;
  };
  for (const auto& [name, t] : entries) {
    std::string param;
    Buffer values(t.data().begin(), t.data().end());
    if (kind_ == OptimizerKind::Adam && strip(name, kAdamM, param)) {
      first_[param] = std::move(values);
    } else if (kind_ == OptimizerKind::Adam && strip(name, kAdamV, param)) {
      second_[param] = std::move(values);
    } else if (kind_ == OptimizerKind::SgdMomentum && strip(name, kVelocity, param)) {
      first_[param] = std::move(values);
    }
  }
  if (kind_ == OptimizerKind::Adam) {
    for (const auto& [name, m] : first_) {
      auto it = second_.find(name);
      if (it == second_.end() || it->second.size() != m.size()) {
        throw CorruptFileError("optimizer state for '" + name + "' is incomplete");
      }
    }
  }
}

}  // namespace scg
