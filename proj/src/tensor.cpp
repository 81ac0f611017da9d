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

#include "scgnet/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace scg {

namespace detail {
struct TensorImpl {
  Shape shape;
  Buffer data;
  Buffer grad;
  bool requires_grad = false;
  std::shared_ptr<TapeNode> node;
};
}  // namespace detail

namespace {

thread_local bool g_grad_enabled = true;

struct DetachState {
  FrozenDetachScope::Mode mode;
  std::vector<Buffer>* store;
  std::size_t cursor = 0;
};
thread_local DetachState* g_detach = nullptr;

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::from_data(Shape shape, Buffer data, bool requires_grad) {
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("shape " + shape_str(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, Real value, bool requires_grad) {
  Buffer data(shape_numel(shape), value);
  return from_data(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(Real value, bool requires_grad) {
  return from_data({}, Buffer{value}, requires_grad);
}

Tensor Tensor::eye(std::size_t n) {
  Buffer data(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) data[i * n + i] = 1.0;
  return from_data({n, n}, std::move(data));
}

const Shape& Tensor::shape() const { return impl_->shape; }
std::size_t Tensor::rank() const { return impl_->shape.size(); }
std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
  }
  return impl_->shape[axis];
}
std::size_t Tensor::numel() const { return impl_->data.size(); }

std::span<const Real> Tensor::data() const { return impl_->data; }

std::span<Real> Tensor::mutable_data() {
  if (impl_->node) throw Error("mutable_data() is only available on leaf tensors");
  return impl_->data;
}

Real Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

Real Tensor::at(std::initializer_list<std::size_t> index) const {
  if (index.size() != rank()) throw ShapeError("index rank mismatch for " + shape_str(shape()));
  std::size_t off = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= impl_->shape[axis]) throw ShapeError("index out of range for " + shape_str(shape()));
    off = off * impl_->shape[axis] + i;
    ++axis;
  }
  return impl_->data[off];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool value) {
  if (impl_->node && !value) throw Error("cannot clear requires_grad on a non-leaf tensor");
  impl_->requires_grad = value;
  return *this;
}

bool Tensor::is_leaf() const { return !impl_->node; }

bool Tensor::has_grad() const { return !impl_->grad.empty(); }

std::span<const Real> Tensor::grad() const { return impl_->grad; }

std::span<Real> Tensor::mutable_grad() {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

const TapeNode* Tensor::grad_fn() const { return impl_->node.get(); }

Tensor Tensor::detach() const {
  if (g_detach) {
    auto& st = *g_detach;
    if (st.mode == FrozenDetachScope::Mode::Record) {
      st.store->push_back(impl_->data);
    } else {
      if (st.cursor >= st.store->size() || (*st.store)[st.cursor].size() != numel()) {
        throw Error("detach replay out of sync with recorded values");
      }
      return from_data(shape(), (*st.store)[st.cursor++]);
    }
  }
  return from_data(shape(), impl_->data);
}

void Tensor::backward() const {
  if (numel() != 1 || rank() > 1) {
    throw ShapeError("backward() needs a scalar loss, got " + shape_str(shape()));
  }
  if (!impl_->requires_grad) return;

  // Iterative post-order DFS gives a topological order (inputs before users).
  std::vector<detail::TensorImpl*> order;
  std::unordered_set<detail::TensorImpl*> seen;
  std::vector<std::pair<detail::TensorImpl*, std::size_t>> stack;
  stack.emplace_back(impl_.get(), 0);
  seen.insert(impl_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (node->node && next < node->node->inputs.size()) {
      auto* child = node->node->inputs[next++].impl_.get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  std::unordered_map<detail::TensorImpl*, Buffer> grads;
  grads[impl_.get()] = Buffer{1.0};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto* t = *it;
    auto found = grads.find(t);
    if (found == grads.end()) continue;
    Buffer g = std::move(found->second);
    grads.erase(found);
    if (!t->node) {
      if (t->grad.empty()) t->grad.assign(t->data.size(), 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) t->grad[i] += g[i];
      continue;
    }
    auto input_grads = t->node->backward(g);
    for (std::size_t i = 0; i < t->node->inputs.size(); ++i) {
      auto* in = t->node->inputs[i].impl_.get();
      if (!in->requires_grad || i >= input_grads.size() || input_grads[i].empty()) continue;
      auto& dst = grads[in];
      if (dst.empty()) {
        dst = std::move(input_grads[i]);
      } else {
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += input_grads[i][k];
      }
    }
  }
}

Tensor make_result(std::string_view op, Shape shape, Buffer data, std::vector<Tensor> inputs,
                   BackwardFn backward) {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  if (g_grad_enabled) {
    bool any = std::any_of(inputs.begin(), inputs.end(),
                           [](const Tensor& t) { return t.requires_grad(); });
    if (any) {
      impl->requires_grad = true;
      impl->node = std::make_shared<TapeNode>(TapeNode{op, std::move(inputs), std::move(backward)});
    }
  }
  return Tensor(std::move(impl));
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

FrozenDetachScope::FrozenDetachScope(Mode mode, std::vector<Buffer>* store)
    : previous_(g_detach) {
  if (mode == Mode::Record) store->clear();
  g_detach = new DetachState{mode, store, 0};
}

FrozenDetachScope::~FrozenDetachScope() {
  delete g_detach;
  g_detach = static_cast<DetachState*>(previous_);
}

const std::vector<std::string_view>& differentiable_ops() {
  static const std::vector<std::string_view> ops = {
      "add",       "sub",        "mul",     "div",      "neg",
      "exp",       "log",        "relu",    "square",   "sqrt",
      "clamp",     "scale",      "add_scalar", "matmul", "transpose",
      "reshape",   "permute",    "diagonal", "diag_embed", "softmax",
      "sum",       "mean",       "conv2d",  "adaptive_avg_pool2d",
      "bilinear_upsample",       "batchnorm",
  };
  return ops;
}

}  // namespace scg
