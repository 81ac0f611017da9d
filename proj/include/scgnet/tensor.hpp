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

// Dense row-major tensors with a dynamic reverse-mode tape.
//
// Every operation returns a fresh Tensor. When gradient recording is enabled
// and at least one input requires a gradient, the result carries a TapeNode
// holding its inputs and a backward rule. Tensor::backward() walks the tape
// in reverse topological order and accumulates gradients into leaves.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scgnet/errors.hpp"

namespace scg {

using Real = double;
using Shape = std::vector<std::size_t>;
using Buffer = std::vector<Real>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TapeNode;

namespace detail {
struct TensorImpl;
}

class Tensor {
 public:
  Tensor() = default;

  static Tensor from_data(Shape shape, Buffer data, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real value, bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);
  static Tensor eye(std::size_t n);

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const Real> data() const;
  // In-place access for leaves only (parameter updates, finite differences).
  std::span<Real> mutable_data();
  Real item() const;
  Real at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool value);
  bool is_leaf() const;

  bool has_grad() const;
  std::span<const Real> grad() const;
  std::span<Real> mutable_grad();
  void zero_grad();

  const TapeNode* grad_fn() const;

  // Cuts the tape. Under FrozenDetachScope the value may be replayed.
  Tensor detach() const;

  // Seeds d(this)/d(this) = 1 and accumulates into every reachable leaf.
  void backward() const;

  const void* id() const { return impl_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;

  friend Tensor make_result(std::string_view, Shape, Buffer, std::vector<Tensor>,
                            std::function<std::vector<Buffer>(const Buffer&)>);
};

// Returns one gradient buffer per input; an empty buffer means "no contribution".
using BackwardFn = std::function<std::vector<Buffer>(const Buffer& grad_output)>;

struct TapeNode {
  std::string_view op;
  std::vector<Tensor> inputs;
  BackwardFn backward;
};

Tensor make_result(std::string_view op, Shape shape, Buffer data, std::vector<Tensor> inputs,
                   BackwardFn backward);

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Finite differences of a function containing detach() must hold the detached
// values fixed at the base point, exactly as the tape does. In Record mode
// every detach() stores its value; in Replay mode detach() returns the stored
// values in the same order.
class FrozenDetachScope {
 public:
  enum class Mode { Record, Replay };
  FrozenDetachScope(Mode mode, std::vector<Buffer>* store);
  ~FrozenDetachScope();
  FrozenDetachScope(const FrozenDetachScope&) = delete;
  FrozenDetachScope& operator=(const FrozenDetachScope&) = delete;

 private:
  void* previous_;
};

// ---- elementwise -----------------------------------------------------------

enum class ElementwiseOp { Add, Sub, Mul, Div, Exp, Log, Relu, Square, Sqrt, Neg };

// Dispatcher over the elementwise family; `b` is required for binary kinds.
Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b = {});

Shape broadcast_shapes(const Shape& a, const Shape& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor clamp(const Tensor& a, Real lo, Real hi);
Tensor scale(const Tensor& a, Real factor);
Tensor add_scalar(const Tensor& a, Real value);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator*(const Tensor& a, Real s) { return scale(a, s); }
inline Tensor operator*(Real s, const Tensor& a) { return scale(a, s); }
inline Tensor operator+(const Tensor& a, Real s) { return add_scalar(a, s); }

// ---- linear algebra and layout ---------------------------------------------

// [m,k]x[k,p], [b,m,k]x[b,k,p], or [b,m,k]x[k,p] (shared right operand).
Tensor matmul(const Tensor& a, const Tensor& b);
// Swaps the last two axes.
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes);

// [..., n, n] -> [..., n]
Tensor diagonal(const Tensor& a);
// [..., n] -> [..., n, n]
Tensor diag_embed(const Tensor& v);

Tensor softmax(const Tensor& a, std::size_t axis);

// ---- reductions ------------------------------------------------------------

enum class Reduction { Sum, Mean };

Tensor reduce(Reduction kind, const Tensor& a, const std::vector<std::size_t>& axes,
              bool keepdim = false);
Tensor sum(const Tensor& a, const std::vector<std::size_t>& axes, bool keepdim = false);
Tensor mean(const Tensor& a, const std::vector<std::size_t>& axes, bool keepdim = false);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

// Names of every tape operation the library can record.
const std::vector<std::string_view>& differentiable_ops();

}  // namespace scg
