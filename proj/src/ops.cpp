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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scgnet/tensor.hpp"

namespace scg {

namespace {

// Walks every output index of a broadcast and reports the matching flat
// offsets of both operands.
struct BroadcastPlan {
  Shape out;
  std::vector<std::size_t> stride_a, stride_b;
  bool same = false;
};

std::vector<std::size_t> aligned_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> strides(out.size(), 0);
  std::size_t step = 1;
  for (std::size_t k = 0; k < in.size(); ++k) {
    std::size_t src = in.size() - 1 - k;
    std::size_t dst = out.size() - 1 - k;
    strides[dst] = in[src] == 1 ? 0 : step;
    step *= in[src];
  }
  return strides;
}

BroadcastPlan make_plan(const Shape& a, const Shape& b) {
  BroadcastPlan p;
  p.out = broadcast_shapes(a, b);
  p.same = (a == b);
  p.stride_a = aligned_strides(a, p.out);
  p.stride_b = aligned_strides(b, p.out);
  return p;
}

template <class F>
void for_each_pair(const BroadcastPlan& p, F&& f) {
  const std::size_t total = shape_numel(p.out);
  if (p.same) {
    for (std::size_t o = 0; o < total; ++o) f(o, o, o);
    return;
  }
  const std::size_t r = p.out.size();
  std::vector<std::size_t> idx(r, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t o = 0; o < total; ++o) {
    f(o, ia, ib);
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      ia += p.stride_a[d];
      ib += p.stride_b[d];
      if (idx[d] < p.out[d]) break;
      ia -= p.stride_a[d] * p.out[d];
      ib -= p.stride_b[d] * p.out[d];
      idx[d] = 0;
    }
  }
}

template <class Fwd, class DA, class DB>
Tensor binary_op(std::string_view name, const Tensor& a, const Tensor& b, Fwd fwd, DA da, DB db) {
  auto plan = make_plan(a.shape(), b.shape());
  Buffer out(shape_numel(plan.out));
  auto av = a.data();
  auto bv = b.data();
  for_each_pair(plan, [&](std::size_t o, std::size_t i, std::size_t j) { out[o] = fwd(av[i], bv[j]); });
  auto backward = [a, b, plan, da, db](const Buffer& g) {
    std::vector<Buffer> grads(2);
    auto av = a.data();
    auto bv = b.data();
    if (a.requires_grad()) grads[0].assign(a.numel(), 0.0);
    if (b.requires_grad()) grads[1].assign(b.numel(), 0.0);
    for_each_pair(plan, [&](std::size_t o, std::size_t i, std::size_t j) {
      if (!grads[0].empty()) grads[0][i] += g[o] * da(av[i], bv[j]);
      if (!grads[1].empty()) grads[1][j] += g[o] * db(av[i], bv[j]);
    });
    return grads;
  };
  return make_result(name, plan.out, std::move(out), {a, b}, std::move(backward));
}

// dy/dx is expressed through x and y so rules like exp can reuse the output.
template <class Fwd, class D>
Tensor unary_op(std::string_view name, const Tensor& a, Fwd fwd, D deriv) {
  auto av = a.data();
  Buffer out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  if (!grad_enabled() || !a.requires_grad()) return make_result(name, a.shape(), std::move(out), {a}, {});
  auto backward = [a, y = out, deriv](const Buffer& g) {
    auto av = a.data();
    Buffer ga(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * deriv(av[i], y[i]);
    return std::vector<Buffer>{std::move(ga)};
  };
  return make_result(name, a.shape(), std::move(out), {a}, std::move(backward));
}

void check_axes(const Tensor& a, const std::vector<std::size_t>& axes) {
  for (auto ax : axes) {
    if (ax >= a.rank()) {
      throw ShapeError("invalid axis " + std::to_string(ax) + " for tensor of shape " +
                       shape_str(a.shape()));
    }
  }
}

// C[m,p] (+)= op(A) op(B) on raw row-major blocks.
void gemm(const Real* a, const Real* b, Real* c, std::size_t m, std::size_t k, std::size_t p,
          bool trans_a, bool trans_b) {
  for (std::size_t i = 0; i < m; ++i) {
    Real* crow = c + i * p;
    for (std::size_t l = 0; l < k; ++l) {
      Real av = trans_a ? a[l * m + i] : a[i * k + l];
      if (av == 0.0) continue;
      if (!trans_b) {
        const Real* brow = b + l * p;
        for (std::size_t j = 0; j < p; ++j) crow[j] += av * brow[j];
      } else {
        for (std::size_t j = 0; j < p; ++j) crow[j] += av * b[j * k + l];
      }
    }
  }
}

}  // namespace

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  Shape out(std::max(a.size(), b.size()), 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::size_t ea = k < a.size() ? a[a.size() - 1 - k] : 1;
    std::size_t eb = k < b.size() ? b[b.size() - 1 - k] : 1;
    if (ea != eb && ea != 1 && eb != 1) {
      throw ShapeError("shape mismatch: cannot broadcast " + shape_str(a) + " with " + shape_str(b));
    }
    out[out.size() - 1 - k] = std::max(ea, eb);
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, [](Real x, Real y) { return x + y; }, [](Real, Real) { return 1.0; },
      [](Real, Real) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, [](Real x, Real y) { return x - y; }, [](Real, Real) { return 1.0; },
      [](Real, Real) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, [](Real x, Real y) { return x * y; }, [](Real, Real y) { return y; },
      [](Real x, Real) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      "div", a, b, [](Real x, Real y) { return x / y; }, [](Real, Real y) { return 1.0 / y; },
      [](Real x, Real y) { return -x / (y * y); });
}

Tensor neg(const Tensor& a) {
  return unary_op("neg", a, [](Real x) { return -x; }, [](Real, Real) { return -1.0; });
}

Tensor exp(const Tensor& a) {
  return unary_op("exp", a, [](Real x) { return std::exp(x); }, [](Real, Real y) { return y; });
}

Tensor log(const Tensor& a) {
  for (auto v : a.data()) {
    if (v < 0.0 || std::isnan(v)) throw DomainError("log of negative value " + std::to_string(v));
  }
  return unary_op("log", a, [](Real x) { return std::log(x); }, [](Real x, Real) { return 1.0 / x; });
}

Tensor relu(const Tensor& a) {
  // Subgradient at exactly zero is zero.
  return unary_op(
      "relu", a, [](Real x) { return x > 0.0 ? x : 0.0; },
      [](Real x, Real) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor square(const Tensor& a) {
  return unary_op("square", a, [](Real x) { return x * x; }, [](Real x, Real) { return 2.0 * x; });
}

Tensor sqrt(const Tensor& a) {
  for (auto v : a.data()) {
    if (v < 0.0 || std::isnan(v)) throw DomainError("sqrt of negative value " + std::to_string(v));
  }
  return unary_op(
      "sqrt", a, [](Real x) { return std::sqrt(x); }, [](Real, Real y) { return 0.5 / y; });
}

Tensor clamp(const Tensor& a, Real lo, Real hi) {
  return unary_op(
      "clamp", a, [lo, hi](Real x) { return std::clamp(x, lo, hi); },
      [lo, hi](Real x, Real) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor scale(const Tensor& a, Real factor) {
  return unary_op(
      "scale", a, [factor](Real x) { return x * factor; }, [factor](Real, Real) { return factor; });
}

Tensor add_scalar(const Tensor& a, Real value) {
  return unary_op(
      "add_scalar", a, [value](Real x) { return x + value; }, [](Real, Real) { return 1.0; });
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  auto need_b = [&] {
    if (!b.defined()) throw Error("binary elementwise op needs a second operand");
  };
  switch (op) {
    case ElementwiseOp::Add: need_b(); return add(a, b);
    case ElementwiseOp::Sub: need_b(); return sub(a, b);
    case ElementwiseOp::Mul: need_b(); return mul(a, b);
    case ElementwiseOp::Div: need_b(); return div(a, b);
    case ElementwiseOp::Exp: return exp(a);
    case ElementwiseOp::Log: return log(a);
    case ElementwiseOp::Relu: return relu(a);
    case ElementwiseOp::Square: return square(a);
    case ElementwiseOp::Sqrt: return sqrt(a);
    case ElementwiseOp::Neg: return neg(a);
  }
  throw Error("unknown elementwise op");
}

// ---- matmul ----------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  const bool batched_a = a.rank() == 3;
  const bool batched_b = b.rank() == 3;
  if ((a.rank() != 2 && !batched_a) || (b.rank() != 2 && !batched_b) || (batched_b && !batched_a)) {
    throw ShapeError("matmul: unsupported ranks " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const std::size_t batch = batched_a ? a.dim(0) : 1;
  const std::size_t m = a.dim(a.rank() - 2), k = a.dim(a.rank() - 1);
  const std::size_t kb = b.dim(b.rank() - 2), p = b.dim(b.rank() - 1);
  if (k != kb || (batched_b && b.dim(0) != batch)) {
    throw ShapeError("matmul: shape mismatch " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  Buffer out(batch * m * p, 0.0);
  auto av = a.data();
  auto bv = b.data();
  const std::size_t b_step = batched_b ? k * p : 0;
  for (std::size_t s = 0; s < batch; ++s) {
    gemm(av.data() + s * m * k, bv.data() + s * b_step, out.data() + s * m * p, m, k, p, false, false);
  }
  Shape shape = batched_a ? Shape{batch, m, p} : Shape{m, p};
  auto backward = [a, b, batch, m, k, p, b_step](const Buffer& g) {
    std::vector<Buffer> grads(2);
    auto av = a.data();
    auto bv = b.data();
    if (a.requires_grad()) {
      grads[0].assign(a.numel(), 0.0);
      for (std::size_t s = 0; s < batch; ++s) {
        gemm(g.data() + s * m * p, bv.data() + s * b_step, grads[0].data() + s * m * k, m, p, k,
             false, true);
      }
    }
    if (b.requires_grad()) {
      grads[1].assign(b.numel(), 0.0);
      for (std::size_t s = 0; s < batch; ++s) {
        gemm(av.data() + s * m * k, g.data() + s * m * p, grads[1].data() + s * b_step, k, m, p,
             true, false);
      }
    }
    return grads;
  };
  return make_result("matmul", std::move(shape), std::move(out), {a, b}, std::move(backward));
}

// ---- layout ----------------------------------------------------------------

Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes) {
  const std::size_t r = a.rank();
  if (axes.size() != r) throw ShapeError("permute: axis count does not match " + shape_str(a.shape()));
  std::vector<bool> used(r, false);
  for (auto ax : axes) {
    if (ax >= r || used[ax]) throw ShapeError("permute: invalid axis list for " + shape_str(a.shape()));
    used[ax] = true;
  }
  Shape out_shape(r);
  for (std::size_t d = 0; d < r; ++d) out_shape[d] = a.dim(axes[d]);

  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t d = r; d-- > 1;) in_strides[d - 1] = in_strides[d] * a.dim(d);
  std::vector<std::size_t> src_stride(r);
  for (std::size_t d = 0; d < r; ++d) src_stride[d] = in_strides[axes[d]];

  // map[o] = flat input offset feeding output element o
  const std::size_t total = a.numel();
  std::vector<std::size_t> map(total);
  std::vector<std::size_t> idx(r, 0);
  std::size_t src = 0;
  for (std::size_t o = 0; o < total; ++o) {
    map[o] = src;
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      src += src_stride[d];
      if (idx[d] < out_shape[d]) break;
      src -= src_stride[d] * out_shape[d];
      idx[d] = 0;
    }
  }
  auto av = a.data();
  Buffer out(total);
  for (std::size_t o = 0; o < total; ++o) out[o] = av[map[o]];
  auto backward = [map = std::move(map)](const Buffer& g) {
    Buffer ga(g.size());
    for (std::size_t o = 0; o < g.size(); ++o) ga[map[o]] = g[o];
    return std::vector<Buffer>{std::move(ga)};
  };
  return make_result("permute", std::move(out_shape), std::move(out), {a}, std::move(backward));
}

Tensor transpose(const Tensor& a) {
  if (a.rank() < 2) throw ShapeError("transpose needs rank >= 2, got " + shape_str(a.shape()));
  std::vector<std::size_t> axes(a.rank());
  std::iota(axes.begin(), axes.end(), 0);
  std::swap(axes[a.rank() - 1], axes[a.rank() - 2]);
  Tensor t;
  {
    NoGradGuard guard;
    t = permute(a, axes);
  }
  Buffer data(t.data().begin(), t.data().end());
  auto backward = [n = a.rank(), shape = t.shape()](const Buffer& g) {
    // Transposing the gradient back is the same swap.
    auto gt = Tensor::from_data(shape, g);
    std::vector<std::size_t> axes(n);
    std::iota(axes.begin(), axes.end(), 0);
    std::swap(axes[n - 1], axes[n - 2]);
    NoGradGuard guard;
    auto back = permute(gt, axes);
    return std::vector<Buffer>{Buffer(back.data().begin(), back.data().end())};
  };
  return make_result("transpose", t.shape(), std::move(data), {a}, std::move(backward));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  Buffer out(a.data().begin(), a.data().end());
  auto backward = [](const Buffer& g) { return std::vector<Buffer>{g}; };
  return make_result("reshape", std::move(shape), std::move(out), {a}, std::move(backward));
}

Tensor diagonal(const Tensor& a) {
  if (a.rank() < 2 || a.dim(a.rank() - 1) != a.dim(a.rank() - 2)) {
    throw ShapeError("diagonal needs [..., n, n], got " + shape_str(a.shape()));
  }
  const std::size_t n = a.dim(a.rank() - 1);
  const std::size_t outer = a.numel() / (n * n);
  Shape shape(a.shape().begin(), a.shape().end() - 1);
  Buffer out(outer * n);
  auto av = a.data();
  for (std::size_t s = 0; s < outer; ++s)
    for (std::size_t i = 0; i < n; ++i) out[s * n + i] = av[s * n * n + i * n + i];
  auto backward = [n, outer](const Buffer& g) {
    Buffer ga(outer * n * n, 0.0);
    for (std::size_t s = 0; s < outer; ++s)
      for (std::size_t i = 0; i < n; ++i) ga[s * n * n + i * n + i] = g[s * n + i];
    return std::vector<Buffer>{std::move(ga)};
  };
  return make_result("diagonal", std::move(shape), std::move(out), {a}, std::move(backward));
}

Tensor diag_embed(const Tensor& v) {
  if (v.rank() < 1) throw ShapeError("diag_embed needs rank >= 1");
  const std::size_t n = v.dim(v.rank() - 1);
  const std::size_t outer = v.numel() / n;
  Shape shape = v.shape();
  shape.push_back(n);
  Buffer out(outer * n * n, 0.0);
  auto vv = v.data();
  for (std::size_t s = 0; s < outer; ++s)
    for (std::size_t i = 0; i < n; ++i) out[s * n * n + i * n + i] = vv[s * n + i];
  auto backward = [n, outer](const Buffer& g) {
    Buffer gv(outer * n);
    for (std::size_t s = 0; s < outer; ++s)
      for (std::size_t i = 0; i < n; ++i) gv[s * n + i] = g[s * n * n + i * n + i];
    return std::vector<Buffer>{std::move(gv)};
  };
  return make_result("diag_embed", std::move(shape), std::move(out), {v}, std::move(backward));
}

Tensor softmax(const Tensor& a, std::size_t axis) {
  check_axes(a, {axis});
  const std::size_t len = a.dim(axis);
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < a.rank(); ++d) inner *= a.dim(d);
  const std::size_t outer = a.numel() / (len * inner);
  auto av = a.data();
  Buffer out(a.numel());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      Real mx = av[base];
      for (std::size_t k = 1; k < len; ++k) mx = std::max(mx, av[base + k * inner]);
      Real z = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        out[base + k * inner] = std::exp(av[base + k * inner] - mx);
        z += out[base + k * inner];
      }
      for (std::size_t k = 0; k < len; ++k) out[base + k * inner] /= z;
    }
  }
  auto backward = [y = out, len, inner, outer](const Buffer& g) {
    Buffer ga(g.size());
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        const std::size_t base = o * len * inner + i;
        Real dot = 0.0;
        for (std::size_t k = 0; k < len; ++k) dot += g[base + k * inner] * y[base + k * inner];
        for (std::size_t k = 0; k < len; ++k)
          ga[base + k * inner] = y[base + k * inner] * (g[base + k * inner] - dot);
      }
    }
    return std::vector<Buffer>{std::move(ga)};
  };
  return make_result("softmax", a.shape(), std::move(out), {a}, std::move(backward));
}

// ---- reductions ------------------------------------------------------------

Tensor reduce(Reduction kind, const Tensor& a, const std::vector<std::size_t>& axes, bool keepdim) {
  check_axes(a, axes);
  const std::size_t r = a.rank();
  std::vector<bool> reduced(r, false);
  for (auto ax : axes) reduced[ax] = true;

  Shape keep_shape(r);
  Shape out_shape;
  std::size_t count = 1;
  for (std::size_t d = 0; d < r; ++d) {
    keep_shape[d] = reduced[d] ? 1 : a.dim(d);
    if (reduced[d]) count *= a.dim(d);
    if (!reduced[d] || keepdim) out_shape.push_back(keep_shape[d]);
  }
  // Output strides expressed over the input index space (0 on reduced axes).
  std::vector<std::size_t> ostride(r, 0);
  std::size_t step = 1;
  for (std::size_t d = r; d-- > 0;) {
    if (!reduced[d]) {
      ostride[d] = step;
      step *= a.dim(d);
    }
  }
  const std::size_t total = a.numel();
  std::vector<std::size_t> map(total);
  std::vector<std::size_t> idx(r, 0);
  std::size_t o = 0;
  for (std::size_t i = 0; i < total; ++i) {
    map[i] = o;
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      o += ostride[d];
      if (idx[d] < a.dim(d)) break;
      o -= ostride[d] * a.dim(d);
      idx[d] = 0;
    }
  }
  const Real factor = kind == Reduction::Mean ? 1.0 / static_cast<Real>(count) : 1.0;
  Buffer out(shape_numel(keep_shape), 0.0);
  auto av = a.data();
  for (std::size_t i = 0; i < total; ++i) out[map[i]] += av[i];
  if (factor != 1.0)
    for (auto& v : out) v *= factor;
  auto backward = [map = std::move(map), factor](const Buffer& g) {
    Buffer ga(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) ga[i] = g[map[i]] * factor;
    return std::vector<Buffer>{std::move(ga)};
  };
  return make_result(kind == Reduction::Sum ? "sum" : "mean", std::move(out_shape), std::move(out), {a},
                     std::move(backward));
}

Tensor sum(const Tensor& a, const std::vector<std::size_t>& axes, bool keepdim) {
  return reduce(Reduction::Sum, a, axes, keepdim);
}

Tensor mean(const Tensor& a, const std::vector<std::size_t>& axes, bool keepdim) {
  return reduce(Reduction::Mean, a, axes, keepdim);
}

static std::vector<std::size_t> all_axes(const Tensor& a) {
  std::vector<std::size_t> axes(a.rank());
  std::iota(axes.begin(), axes.end(), 0);
  return axes;
}

Tensor sum_all(const Tensor& a) { return sum(a, all_axes(a)); }
Tensor mean_all(const Tensor& a) { return mean(a, all_axes(a)); }

}  // namespace scg
