// scenecrnn/src/autodiff.cc

// Copyright 2026  The SceneCRNN Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "scenecrnn/autodiff.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "scenecrnn/kernels.h"

namespace scenecrnn::ad {

namespace {

template <typename T>
[[noreturn]] void shape_error(const char *op, const Shape &a, const Shape &b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                              shape_str(a) + " vs " + shape_str(b));
}

template <typename T>
Tape<T> *tape_of(const char *op, std::initializer_list<Node<T> *> nodes) {
  Tape<T> *tape = nullptr;
  for (Node<T> *n : nodes) {
    if (n == nullptr) continue;
    if (tape == nullptr) tape = n->tape;
    if (n->tape != tape)
      throw std::invalid_argument(std::string(op) + ": inputs from different tapes");
  }
  if (tape == nullptr)
    throw std::invalid_argument(std::string(op) + ": no inputs");
  return tape;
}

// outer * d * inner decomposition around one axis.
struct AxisDims {
  int64_t outer, d, inner;
};

inline AxisDims axis_dims(const Shape &shape, int axis) {
  AxisDims r{1, shape[static_cast<size_t>(axis)], 1};
  for (int i = 0; i < axis; ++i) r.outer *= shape[static_cast<size_t>(i)];
  for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i)
    r.inner *= shape[i];
  return r;
}

inline void check_axis(const char *op, const Shape &shape, int axis) {
  if (axis < 0 || axis >= static_cast<int>(shape.size()))
    throw std::invalid_argument(std::string(op) + ": axis " + std::to_string(axis) +
                                " out of range for " + shape_str(shape));
}

template <typename T>
Node<T> *unary_op(Node<T> *a, const char *name, T (*fwd)(T),
                  T (*dydx_from)(T value, T output)) {
  Tape<T> *tape = tape_of<T>(name, {a});
  Tensor<T> out(a->shape());
  const T *x = a->value.data();
  T *y = out.data();
  const int64_t n = a->numel();
#pragma omp parallel for schedule(static) if (n > (1 << 16))
  for (int64_t i = 0; i < n; ++i) y[i] = fwd(x[i]);
  return tape->record(
      std::move(out), {a},
      [a, dydx_from](Node<T> *self) {
        if (!a->requires_grad) return;
        T *ga = a->ensure_grad();
        const T *g = self->grad.data();
        const T *x = a->value.data();
        const T *y = self->value.data();
        const int64_t n = a->numel();
#pragma omp parallel for schedule(static) if (n > (1 << 16))
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * dydx_from(x[i], y[i]);
      },
      name);
}

}  // namespace

template <typename T>
void Node<T>::accumulate_grad(const T *src, int64_t n) {
  if (!requires_grad) return;
  T *g = ensure_grad();
  for (int64_t i = 0; i < n; ++i) g[i] += src[i];
}

template <typename T>
T *ensure_grad_impl(Node<T> *n) {
  if (n->grad.values.empty()) {
    n->grad.shape = n->value.shape;
    n->grad.values.assign(n->value.values.size(), T(0));
  }
  return n->grad.data();
}

template <typename T>
Node<T> *Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  auto node = std::make_unique<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->tape = this;
  nodes_.push_back(std::move(node));
  return nodes_.back().get();
}

template <typename T>
Node<T> *Tape<T>::record(Tensor<T> value, const std::vector<Node<T> *> &inputs,
                         std::function<void(Node<T> *)> backward_fn,
                         const char *op) {
  bool needs = false;
  for (const Node<T> *in : inputs) needs = needs || (in && in->requires_grad);
  auto node = std::make_unique<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = needs;
  node->tape = this;
  node->op = op;
  if (needs) node->backward_fn = std::move(backward_fn);
  nodes_.push_back(std::move(node));
  return nodes_.back().get();
}

template <typename T>
void Tape<T>::backward(Node<T> *loss) {
  if (nodes_.empty()) throw std::invalid_argument("backward: empty tape");
  if (loss == nullptr || loss->tape != this)
    throw std::invalid_argument("backward: loss not on this tape");
  if (loss->numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                shape_str(loss->shape()));
  if (!loss->requires_grad) return;
  loss->ensure_grad();
  loss->grad.values[0] = T(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node<T> *n = it->get();
    if (n->backward_fn && n->requires_grad && !n->grad.values.empty())
      n->backward_fn(n);
  }
}

// ---- arithmetic -----------------------------------------------------------

template <typename T>
Node<T> *add(Node<T> *a, Node<T> *b) {
  Tape<T> *tape = tape_of<T>("add", {a, b});
  const bool same = a->shape() == b->shape();
  bool suffix = false;
  if (!same && b->value.rank() < a->value.rank()) {
    suffix = std::equal(b->shape().begin(), b->shape().end(),
                        a->shape().end() - b->value.rank());
  }
  if (!same && !suffix) shape_error<T>("add", a->shape(), b->shape());

  Tensor<T> out(a->shape());
  const int64_t n = a->numel(), nb = b->numel();
  const T *pa = a->value.data(), *pb = b->value.data();
  T *po = out.data();
#pragma omp parallel for schedule(static) if (n > (1 << 16))
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i % nb];
  return tape->record(
      std::move(out), {a, b},
      [a, b](Node<T> *self) {
        const T *g = self->grad.data();
        const int64_t n = self->numel(), nb = b->numel();
        if (a->requires_grad) a->accumulate_grad(g, n);
        if (b->requires_grad) {
          T *gb = b->ensure_grad();
          for (int64_t i = 0; i < n; ++i) gb[i % nb] += g[i];
        }
      },
      "add");
}

template <typename T>
Node<T> *mul(Node<T> *a, Node<T> *b) {
  Tape<T> *tape = tape_of<T>("mul", {a, b});
  if (a->shape() != b->shape()) shape_error<T>("mul", a->shape(), b->shape());
  Tensor<T> out(a->shape());
  const int64_t n = a->numel();
  const T *pa = a->value.data(), *pb = b->value.data();
  T *po = out.data();
#pragma omp parallel for schedule(static) if (n > (1 << 16))
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
  return tape->record(
      std::move(out), {a, b},
      [a, b](Node<T> *self) {
        const T *g = self->grad.data();
        const int64_t n = self->numel();
        if (a->requires_grad) {
          T *ga = a->ensure_grad();
          const T *pb = b->value.data();
#pragma omp parallel for schedule(static) if (n > (1 << 16))
          for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * pb[i];
        }
        if (b->requires_grad) {
          T *gb = b->ensure_grad();
          const T *pa = a->value.data();
#pragma omp parallel for schedule(static) if (n > (1 << 16))
          for (int64_t i = 0; i < n; ++i) gb[i] += g[i] * pa[i];
        }
      },
      "mul");
}

template <typename T>
Node<T> *scale(Node<T> *a, T c) {
  Tape<T> *tape = tape_of<T>("scale", {a});
  Tensor<T> out(a->shape());
  const int64_t n = a->numel();
  for (int64_t i = 0; i < n; ++i) out[i] = a->value[i] * c;
  return tape->record(
      std::move(out), {a},
      [a, c](Node<T> *self) {
        if (!a->requires_grad) return;
        T *ga = a->ensure_grad();
        const T *g = self->grad.data();
        const int64_t n = a->numel();
        for (int64_t i = 0; i < n; ++i) ga[i] += g[i] * c;
      },
      "scale");
}

template <typename T>
Node<T> *sub(Node<T> *a, Node<T> *b) {
  return add(a, scale(b, T(-1)));
}

template <typename T>
Node<T> *matmul(Node<T> *a, Node<T> *b) {
  Tape<T> *tape = tape_of<T>("matmul", {a, b});
  if (a->value.rank() != 2 || b->value.rank() != 2 ||
      a->shape()[1] != b->shape()[0])
    shape_error<T>("matmul", a->shape(), b->shape());
  const int64_t m = a->shape()[0], k = a->shape()[1], n = b->shape()[1];
  Tensor<T> out(Shape{m, n});
  kernels::matmul_nn(a->value.data(), b->value.data(), out.data(), m, k, n,
                     false);
  return tape->record(
      std::move(out), {a, b},
      [a, b, m, k, n](Node<T> *self) {
        const T *g = self->grad.data();
        if (a->requires_grad)
          kernels::matmul_nt(g, b->value.data(), a->ensure_grad(), m, n, k,
                             true);
        if (b->requires_grad)
          kernels::matmul_tn(a->value.data(), g, b->ensure_grad(), k, m, n,
                             true);
      },
      "matmul");
}

// ---- shape ops ------------------------------------------------------------

template <typename T>
Node<T> *concat(const std::vector<Node<T> *> &xs, int axis) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  std::initializer_list<Node<T> *> dummy{xs[0]};
  Tape<T> *tape = tape_of<T>("concat", dummy);
  const Shape &s0 = xs[0]->shape();
  check_axis("concat", s0, axis);
  int64_t total = 0;
  for (Node<T> *x : xs) {
    if (x->tape != tape)
      throw std::invalid_argument("concat: inputs from different tapes");
    if (x->value.rank() != xs[0]->value.rank())
      shape_error<T>("concat", s0, x->shape());
    for (int i = 0; i < x->value.rank(); ++i)
      if (i != axis && x->shape()[static_cast<size_t>(i)] != s0[static_cast<size_t>(i)])
        shape_error<T>("concat", s0, x->shape());
    total += x->shape()[static_cast<size_t>(axis)];
  }
  Shape out_shape = s0;
  out_shape[static_cast<size_t>(axis)] = total;
  Tensor<T> out(out_shape);
  const AxisDims od = axis_dims(out_shape, axis);
  int64_t offset = 0;
  for (Node<T> *x : xs) {
    const AxisDims xd = axis_dims(x->shape(), axis);
    const T *px = x->value.data();
    T *po = out.data();
    for (int64_t o = 0; o < xd.outer; ++o)
      std::memcpy(po + (o * od.d + offset) * od.inner,
                  px + o * xd.d * xd.inner,
                  static_cast<size_t>(xd.d * xd.inner) * sizeof(T));
    offset += xd.d;
  }
  std::vector<Node<T> *> inputs = xs;
  return tape->record(
      std::move(out), inputs,
      [inputs, axis](Node<T> *self) {
        const AxisDims od = axis_dims(self->shape(), axis);
        const T *g = self->grad.data();
        int64_t offset = 0;
        for (Node<T> *x : inputs) {
          const AxisDims xd = axis_dims(x->shape(), axis);
          if (x->requires_grad) {
            T *gx = x->ensure_grad();
            for (int64_t o = 0; o < xd.outer; ++o) {
              const T *src = g + (o * od.d + offset) * od.inner;
              T *dst = gx + o * xd.d * xd.inner;
              for (int64_t i = 0; i < xd.d * xd.inner; ++i) dst[i] += src[i];
            }
          }
          offset += xd.d;
        }
      },
      "concat");
}

template <typename T>
Node<T> *reshape(Node<T> *a, Shape shape) {
  Tape<T> *tape = tape_of<T>("reshape", {a});
  if (shape_numel(shape) != a->numel())
    shape_error<T>("reshape", a->shape(), shape);
  Tensor<T> out(std::move(shape), a->value.values);
  return tape->record(
      std::move(out), {a},
      [a](Node<T> *self) {
        if (a->requires_grad)
          a->accumulate_grad(self->grad.data(), self->numel());
      },
      "reshape");
}

namespace {

// Maps every flat index of the permuted tensor to its source flat index.
template <typename T>
void permute_copy(const T *src, T *dst, const Shape &in_shape,
                  const std::vector<int> &perm, bool scatter_add) {
  const int rank = static_cast<int>(in_shape.size());
  Shape out_shape(static_cast<size_t>(rank));
  for (int i = 0; i < rank; ++i)
    out_shape[static_cast<size_t>(i)] = in_shape[static_cast<size_t>(perm[static_cast<size_t>(i)])];
  std::vector<int64_t> in_strides(static_cast<size_t>(rank), 1);
  for (int i = rank - 2; i >= 0; --i)
    in_strides[static_cast<size_t>(i)] =
        in_strides[static_cast<size_t>(i + 1)] * in_shape[static_cast<size_t>(i + 1)];
  std::vector<int64_t> src_stride_for_out(static_cast<size_t>(rank));
  for (int i = 0; i < rank; ++i)
    src_stride_for_out[static_cast<size_t>(i)] =
        in_strides[static_cast<size_t>(perm[static_cast<size_t>(i)])];
  const int64_t total = shape_numel(in_shape);
  std::vector<int64_t> idx(static_cast<size_t>(rank), 0);
  int64_t src_off = 0;
  for (int64_t flat = 0; flat < total; ++flat) {
    if (scatter_add)
      dst[src_off] += src[flat];
    else
      dst[flat] = src[src_off];
    for (int i = rank - 1; i >= 0; --i) {
      src_off += src_stride_for_out[static_cast<size_t>(i)];
      if (++idx[static_cast<size_t>(i)] < out_shape[static_cast<size_t>(i)]) break;
      src_off -= src_stride_for_out[static_cast<size_t>(i)] * out_shape[static_cast<size_t>(i)];
      idx[static_cast<size_t>(i)] = 0;
    }
  }
}

}  // namespace

template <typename T>
Node<T> *transpose(Node<T> *a, std::vector<int> perm) {
  Tape<T> *tape = tape_of<T>("transpose", {a});
  const int rank = a->value.rank();
  if (static_cast<int>(perm.size()) != rank)
    throw std::invalid_argument("transpose: perm size " + std::to_string(perm.size()) +
                                " does not match rank of " + shape_str(a->shape()));
  std::vector<bool> seen(static_cast<size_t>(rank), false);
  for (int p : perm) {
    if (p < 0 || p >= rank || seen[static_cast<size_t>(p)])
      throw std::invalid_argument("transpose: invalid permutation");
    seen[static_cast<size_t>(p)] = true;
  }
  Shape out_shape(static_cast<size_t>(rank));
  for (int i = 0; i < rank; ++i)
    out_shape[static_cast<size_t>(i)] = a->shape()[static_cast<size_t>(perm[static_cast<size_t>(i)])];
  Tensor<T> out(out_shape);
  permute_copy(a->value.data(), out.data(), a->shape(), perm, false);
  return tape->record(
      std::move(out), {a},
      [a, perm](Node<T> *self) {
        if (!a->requires_grad) return;
        permute_copy(self->grad.data(), a->ensure_grad(), a->shape(), perm,
                     true);
      },
      "transpose");
}

template <typename T>
Node<T> *slice(Node<T> *a, int axis, int64_t start, int64_t stop) {
  Tape<T> *tape = tape_of<T>("slice", {a});
  check_axis("slice", a->shape(), axis);
  const int64_t d = a->shape()[static_cast<size_t>(axis)];
  if (start < 0 || stop > d || start >= stop)
    throw std::invalid_argument("slice: range [" + std::to_string(start) + "," +
                                std::to_string(stop) + ") invalid for axis size " +
                                std::to_string(d));
  Shape out_shape = a->shape();
  out_shape[static_cast<size_t>(axis)] = stop - start;
  const AxisDims ad = axis_dims(a->shape(), axis);
  Tensor<T> out(out_shape);
  const T *pa = a->value.data();
  T *po = out.data();
  const int64_t len = (stop - start) * ad.inner;
  for (int64_t o = 0; o < ad.outer; ++o)
    std::memcpy(po + o * len, pa + (o * ad.d + start) * ad.inner,
                static_cast<size_t>(len) * sizeof(T));
  return tape->record(
      std::move(out), {a},
      [a, axis, start, stop](Node<T> *self) {
        if (!a->requires_grad) return;
        const AxisDims ad = axis_dims(a->shape(), axis);
        T *ga = a->ensure_grad();
        const T *g = self->grad.data();
        const int64_t len = (stop - start) * ad.inner;
        for (int64_t o = 0; o < ad.outer; ++o) {
          T *dst = ga + (o * ad.d + start) * ad.inner;
          const T *src = g + o * len;
          for (int64_t i = 0; i < len; ++i) dst[i] += src[i];
        }
      },
      "slice");
}

// ---- reductions -----------------------------------------------------------

template <typename T>
Node<T> *sum_over_axis(Node<T> *a, int axis) {
  Tape<T> *tape = tape_of<T>("sum_over_axis", {a});
  check_axis("sum_over_axis", a->shape(), axis);
  const AxisDims ad = axis_dims(a->shape(), axis);
  Shape out_shape;
  for (int i = 0; i < a->value.rank(); ++i)
    if (i != axis) out_shape.push_back(a->shape()[static_cast<size_t>(i)]);
  Tensor<T> out(out_shape);
  const T *pa = a->value.data();
  T *po = out.data();
#pragma omp parallel for collapse(2) schedule(static) if (a->numel() > (1 << 16))
  for (int64_t o = 0; o < ad.outer; ++o) {
    for (int64_t i = 0; i < ad.inner; ++i) {
      T s = T(0);
      for (int64_t j = 0; j < ad.d; ++j) s += pa[(o * ad.d + j) * ad.inner + i];
      po[o * ad.inner + i] = s;
    }
  }
  return tape->record(
      std::move(out), {a},
      [a, axis](Node<T> *self) {
        if (!a->requires_grad) return;
        const AxisDims ad = axis_dims(a->shape(), axis);
        T *ga = a->ensure_grad();
        const T *g = self->grad.data();
        for (int64_t o = 0; o < ad.outer; ++o)
          for (int64_t j = 0; j < ad.d; ++j)
            for (int64_t i = 0; i < ad.inner; ++i)
              ga[(o * ad.d + j) * ad.inner + i] += g[o * ad.inner + i];
      },
      "sum_over_axis");
}

template <typename T>
Node<T> *sum_all(Node<T> *a) {
  Tape<T> *tape = tape_of<T>("sum_all", {a});
  double s = 0.0;
  for (int64_t i = 0; i < a->numel(); ++i) s += static_cast<double>(a->value[i]);
  Tensor<T> out(Shape{}, std::vector<T>{static_cast<T>(s)});
  return tape->record(
      std::move(out), {a},
      [a](Node<T> *self) {
        if (!a->requires_grad) return;
        T *ga = a->ensure_grad();
        const T g = self->grad.values[0];
        for (int64_t i = 0; i < a->numel(); ++i) ga[i] += g;
      },
      "sum_all");
}

template <typename T>
Node<T> *mean_all(Node<T> *a) {
  return scale(sum_all(a), T(1) / static_cast<T>(a->numel()));
}

template <typename T>
Node<T> *outer_product(Node<T> *a, Node<T> *b) {
  Tape<T> *tape = tape_of<T>("outer_product", {a, b});
  const int ra = a->value.rank(), rb = b->value.rank();
  int64_t batch = 1, p = 0, q = 0;
  if (ra == 1 && rb == 1) {
    p = a->shape()[0];
    q = b->shape()[0];
  } else if (ra == 2 && rb == 2 && a->shape()[0] == b->shape()[0]) {
    batch = a->shape()[0];
    p = a->shape()[1];
    q = b->shape()[1];
  } else {
    shape_error<T>("outer_product", a->shape(), b->shape());
  }
  Shape out_shape = (ra == 1) ? Shape{p, q} : Shape{batch, p, q};
  Tensor<T> out(out_shape);
  const T *pa = a->value.data(), *pb = b->value.data();
  T *po = out.data();
  for (int64_t n = 0; n < batch; ++n)
    for (int64_t i = 0; i < p; ++i)
      for (int64_t j = 0; j < q; ++j)
        po[(n * p + i) * q + j] = pa[n * p + i] * pb[n * q + j];
  return tape->record(
      std::move(out), {a, b},
      [a, b, batch, p, q](Node<T> *self) {
        const T *g = self->grad.data();
        const T *pa = a->value.data(), *pb = b->value.data();
        if (a->requires_grad) {
          T *ga = a->ensure_grad();
          for (int64_t n = 0; n < batch; ++n)
            for (int64_t i = 0; i < p; ++i) {
              T s = T(0);
              for (int64_t j = 0; j < q; ++j)
                s += g[(n * p + i) * q + j] * pb[n * q + j];
              ga[n * p + i] += s;
            }
        }
        if (b->requires_grad) {
          T *gb = b->ensure_grad();
          for (int64_t n = 0; n < batch; ++n)
            for (int64_t j = 0; j < q; ++j) {
              T s = T(0);
              for (int64_t i = 0; i < p; ++i)
                s += g[(n * p + i) * q + j] * pa[n * p + i];
              gb[n * q + j] += s;
            }
        }
      },
      "outer_product");
}

// ---- elementwise nonlinearities --------------------------------------------

template <typename T>
Node<T> *tanh(Node<T> *a) {
  return unary_op<T>(
      a, "tanh", [](T x) { return std::tanh(x); },
      [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Node<T> *sigmoid(Node<T> *a) {
  return unary_op<T>(
      a, "sigmoid",
      [](T x) {
        if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
        const T e = std::exp(x);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Node<T> *relu(Node<T> *a) {
  return unary_op<T>(
      a, "relu", [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Node<T> *exp(Node<T> *a) {
  return unary_op<T>(
      a, "exp", [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Node<T> *log(Node<T> *a) {
  return unary_op<T>(
      a, "log", [](T x) { return std::log(x); },
      [](T x, T) { return T(1) / x; });
}

template <typename T>
Node<T> *softmax_over_axis(Node<T> *a, int axis) {
  Tape<T> *tape = tape_of<T>("softmax_over_axis", {a});
  check_axis("softmax_over_axis", a->shape(), axis);
  const AxisDims ad = axis_dims(a->shape(), axis);
  Tensor<T> out(a->shape());
  const T *px = a->value.data();
  T *py = out.data();
#pragma omp parallel for collapse(2) schedule(static) if (a->numel() > (1 << 15))
  for (int64_t o = 0; o < ad.outer; ++o) {
    for (int64_t i = 0; i < ad.inner; ++i) {
      const int64_t base = o * ad.d * ad.inner + i;
      T mx = px[base];
      for (int64_t j = 1; j < ad.d; ++j)
        mx = std::max(mx, px[base + j * ad.inner]);
      double denom = 0.0;
      for (int64_t j = 0; j < ad.d; ++j) {
        const T e = std::exp(px[base + j * ad.inner] - mx);
        py[base + j * ad.inner] = e;
        denom += static_cast<double>(e);
      }
      const T inv = static_cast<T>(1.0 / denom);
      for (int64_t j = 0; j < ad.d; ++j) py[base + j * ad.inner] *= inv;
    }
  }
  return tape->record(
      std::move(out), {a},
      [a, axis](Node<T> *self) {
        if (!a->requires_grad) return;
        const AxisDims ad = axis_dims(a->shape(), axis);
        T *ga = a->ensure_grad();
        const T *g = self->grad.data();
        const T *y = self->value.data();
        for (int64_t o = 0; o < ad.outer; ++o) {
          for (int64_t i = 0; i < ad.inner; ++i) {
            const int64_t base = o * ad.d * ad.inner + i;
            double dot = 0.0;
            for (int64_t j = 0; j < ad.d; ++j)
              dot += static_cast<double>(g[base + j * ad.inner]) *
                     static_cast<double>(y[base + j * ad.inner]);
            for (int64_t j = 0; j < ad.d; ++j)
              ga[base + j * ad.inner] +=
                  y[base + j * ad.inner] *
                  (g[base + j * ad.inner] - static_cast<T>(dot));
          }
        }
      },
      "softmax_over_axis");
}

template <typename T>
Node<T> *max_over_axis(Node<T> *a, int axis) {
  Tape<T> *tape = tape_of<T>("max_over_axis", {a});
  check_axis("max_over_axis", a->shape(), axis);
  const AxisDims ad = axis_dims(a->shape(), axis);
  Shape out_shape;
  for (int i = 0; i < a->value.rank(); ++i)
    if (i != axis) out_shape.push_back(a->shape()[static_cast<size_t>(i)]);
  Tensor<T> out(out_shape);
  auto argmax = std::make_shared<std::vector<int64_t>>(
      static_cast<size_t>(ad.outer * ad.inner));
  const T *px = a->value.data();
  T *py = out.data();
  for (int64_t o = 0; o < ad.outer; ++o) {
    for (int64_t i = 0; i < ad.inner; ++i) {
      const int64_t base = o * ad.d * ad.inner + i;
      int64_t best = base;
      T bv = px[base];
      for (int64_t j = 1; j < ad.d; ++j) {
        const int64_t idx = base + j * ad.inner;
        if (px[idx] > bv) {
          bv = px[idx];
          best = idx;
        }
      }
      py[o * ad.inner + i] = bv;
      (*argmax)[static_cast<size_t>(o * ad.inner + i)] = best;
    }
  }
  return tape->record(
      std::move(out), {a},
      [a, argmax](Node<T> *self) {
        if (!a->requires_grad) return;
        T *ga = a->ensure_grad();
        const T *g = self->grad.data();
        for (size_t i = 0; i < argmax->size(); ++i)
          ga[(*argmax)[i]] += g[static_cast<int64_t>(i)];
      },
      "max_over_axis");
}

// ---- structured ops --------------------------------------------------------

template <typename T>
Node<T> *max_pool_2d(Node<T> *a, int kh, int kw, int sh, int sw) {
  Tape<T> *tape = tape_of<T>("max_pool_2d", {a});
  if (a->value.rank() != 4)
    throw std::invalid_argument("max_pool_2d: expected rank-4 input, got " +
                                shape_str(a->shape()));
  if (kh != sh || kw != sw)
    throw std::invalid_argument("max_pool_2d: kernel must equal stride");
  const int64_t n = a->shape()[0], c = a->shape()[1], h = a->shape()[2],
                w = a->shape()[3];
  if (h % sh != 0 || w % sw != 0)
    throw std::invalid_argument("max_pool_2d: input " + shape_str(a->shape()) +
                                " not divisible by stride " + std::to_string(sh) +
                                "x" + std::to_string(sw));
  Tensor<T> out(Shape{n, c, h / sh, w / sw});
  auto argmax =
      std::make_shared<std::vector<int64_t>>(static_cast<size_t>(out.numel()));
  kernels::maxpool2d_fwd(a->value.data(), out.data(), argmax->data(), n, c, h,
                         w, kh, kw, sh, sw);
  const int64_t count = out.numel();
  return tape->record(
      std::move(out), {a},
      [a, argmax, count](Node<T> *self) {
        if (!a->requires_grad) return;
        kernels::maxpool2d_bwd(self->grad.data(), argmax->data(),
                               a->ensure_grad(), count);
      },
      "max_pool_2d");
}

template <typename T>
Node<T> *conv_2d_same(Node<T> *x, Node<T> *w, Node<T> *b) {
  Tape<T> *tape = tape_of<T>("conv_2d_same", {x, w});
  if (x->value.rank() != 4 || w->value.rank() != 4 ||
      x->shape()[1] != w->shape()[1])
    shape_error<T>("conv_2d_same", x->shape(), w->shape());
  const int64_t n = x->shape()[0], cin = x->shape()[1], h = x->shape()[2],
                wd = x->shape()[3];
  const int64_t cout = w->shape()[0], kh = w->shape()[2], kw = w->shape()[3];
  if (b != nullptr && (b->value.rank() != 1 || b->shape()[0] != cout))
    shape_error<T>("conv_2d_same", w->shape(), b->shape());
  Tensor<T> out(Shape{n, cout, h, wd});
  kernels::conv2d_same_fwd(x->value.data(), w->value.data(),
                           b ? b->value.data() : nullptr, out.data(), n, cin, h,
                           wd, cout, kh, kw);
  std::vector<Node<T> *> inputs{x, w};
  if (b) inputs.push_back(b);
  return tape->record(
      std::move(out), inputs,
      [x, w, b, n, cin, h, wd, cout, kh, kw](Node<T> *self) {
        const T *g = self->grad.data();
        if (x->requires_grad)
          kernels::conv2d_same_bwd_input(g, w->value.data(), x->ensure_grad(),
                                         n, cin, h, wd, cout, kh, kw);
        if (w->requires_grad)
          kernels::conv2d_same_bwd_weights(g, x->value.data(), w->ensure_grad(),
                                           n, cin, h, wd, cout, kh, kw);
        if (b && b->requires_grad)
          kernels::conv2d_same_bwd_bias(g, b->ensure_grad(), n, cout, h, wd);
      },
      "conv_2d_same");
}

template <typename T>
Node<T> *dropout_mask_apply(Node<T> *x, Node<T> *mask) {
  if (mask->requires_grad)
    throw std::invalid_argument("dropout_mask_apply: mask must not require grad");
  if (x->shape() != mask->shape())
    shape_error<T>("dropout_mask_apply", x->shape(), mask->shape());
  return mul(x, mask);
}

template <typename T>
Node<T> *batch_norm(Node<T> *x, Node<T> *gamma, Node<T> *beta,
                    Tensor<T> *running_mean, Tensor<T> *running_var,
                    bool training, T momentum, T eps) {
  Tape<T> *tape = tape_of<T>("batch_norm", {x, gamma, beta});
  if (x->value.rank() != 4)
    throw std::invalid_argument("batch_norm: expected rank-4 input, got " +
                                shape_str(x->shape()));
  const int64_t n = x->shape()[0], c = x->shape()[1], h = x->shape()[2],
                w = x->shape()[3];
  if (gamma->numel() != c || beta->numel() != c)
    shape_error<T>("batch_norm", x->shape(), gamma->shape());
  if (!training && (running_mean == nullptr || running_var == nullptr))
    throw std::invalid_argument("batch_norm: inference requires running stats");
  const int64_t plane = h * w, m = n * plane;

  auto mean = std::make_shared<std::vector<T>>(static_cast<size_t>(c));
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<size_t>(c));
  const T *px = x->value.data();
  if (training) {
#pragma omp parallel for schedule(static) if (x->numel() > (1 << 16))
    for (int64_t ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (int64_t ni = 0; ni < n; ++ni) {
        const T *p = px + (ni * c + ch) * plane;
        for (int64_t i = 0; i < plane; ++i) s += static_cast<double>(p[i]);
      }
      const double mu = s / static_cast<double>(m);
      double v = 0.0;
      for (int64_t ni = 0; ni < n; ++ni) {
        const T *p = px + (ni * c + ch) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          const double d = static_cast<double>(p[i]) - mu;
          v += d * d;
        }
      }
      const double var = v / static_cast<double>(m);
      (*mean)[static_cast<size_t>(ch)] = static_cast<T>(mu);
      (*inv_std)[static_cast<size_t>(ch)] =
          static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
      if (running_mean != nullptr && running_var != nullptr) {
        T &rm = (*running_mean)[ch];
        T &rv = (*running_var)[ch];
        rm = momentum * rm + (T(1) - momentum) * static_cast<T>(mu);
        rv = momentum * rv + (T(1) - momentum) * static_cast<T>(var);
      }
    }
  } else {
    for (int64_t ch = 0; ch < c; ++ch) {
      (*mean)[static_cast<size_t>(ch)] = (*running_mean)[ch];
      (*inv_std)[static_cast<size_t>(ch)] = static_cast<T>(
          1.0 / std::sqrt(static_cast<double>((*running_var)[ch]) +
                          static_cast<double>(eps)));
    }
  }

  Tensor<T> out(x->shape());
  T *py = out.data();
  const T *pg = gamma->value.data(), *pb = beta->value.data();
#pragma omp parallel for collapse(2) schedule(static) if (x->numel() > (1 << 16))
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const T mu = (*mean)[static_cast<size_t>(ch)];
      const T is = (*inv_std)[static_cast<size_t>(ch)];
      const T gm = pg[ch], bt = pb[ch];
      const T *p = px + (ni * c + ch) * plane;
      T *q = py + (ni * c + ch) * plane;
      for (int64_t i = 0; i < plane; ++i) q[i] = gm * (p[i] - mu) * is + bt;
    }
  }

  return tape->record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, mean, inv_std, training, n, c, plane,
       m](Node<T> *self) {
        const T *g = self->grad.data();
        const T *px = x->value.data();
        const T *pg = gamma->value.data();
        T *gx = x->requires_grad ? x->ensure_grad() : nullptr;
        T *gg = gamma->requires_grad ? gamma->ensure_grad() : nullptr;
        T *gb = beta->requires_grad ? beta->ensure_grad() : nullptr;
#pragma omp parallel for schedule(static) if (x->numel() > (1 << 16))
        for (int64_t ch = 0; ch < c; ++ch) {
          const T mu = (*mean)[static_cast<size_t>(ch)];
          const T is = (*inv_std)[static_cast<size_t>(ch)];
          const T gm = pg[ch];
          double sum_g = 0.0, sum_gx = 0.0;
          for (int64_t ni = 0; ni < n; ++ni) {
            const T *gp = g + (ni * c + ch) * plane;
            const T *xp = px + (ni * c + ch) * plane;
            for (int64_t i = 0; i < plane; ++i) {
              sum_g += static_cast<double>(gp[i]);
              sum_gx += static_cast<double>(gp[i]) *
                        static_cast<double>((xp[i] - mu) * is);
            }
          }
          if (gg != nullptr) gg[ch] += static_cast<T>(sum_gx);
          if (gb != nullptr) gb[ch] += static_cast<T>(sum_g);
          if (gx != nullptr) {
            if (training) {
              const T k1 = static_cast<T>(sum_g / static_cast<double>(m));
              const T k2 = static_cast<T>(sum_gx / static_cast<double>(m));
              for (int64_t ni = 0; ni < n; ++ni) {
                const T *gp = g + (ni * c + ch) * plane;
                const T *xp = px + (ni * c + ch) * plane;
                T *op = gx + (ni * c + ch) * plane;
                for (int64_t i = 0; i < plane; ++i) {
                  const T xhat = (xp[i] - mu) * is;
                  op[i] += gm * is * (gp[i] - k1 - xhat * k2);
                }
              }
            } else {
              for (int64_t ni = 0; ni < n; ++ni) {
                const T *gp = g + (ni * c + ch) * plane;
                T *op = gx + (ni * c + ch) * plane;
                for (int64_t i = 0; i < plane; ++i) op[i] += gm * is * gp[i];
              }
            }
          }
        }
      },
      "batch_norm");
}

template <typename T>
Node<T> *kl_loss_batch(const Tensor<T> &target, Node<T> *yhat) {
  Tape<T> *tape = tape_of<T>("kl_loss", {yhat});
  Shape ts = target.shape, ys = yhat->shape();
  if (ts.size() == 1) ts = Shape{1, ts[0]};
  if (ys.size() == 1) ys = Shape{1, ys[0]};
  if (ts != ys || ts.size() != 2) shape_error<T>("kl_loss", target.shape, yhat->shape());
  const int64_t n = ts[0], c = ts[1];
  constexpr double kClamp = 1e-12;
  double loss = 0.0;
  const T *pt = target.data();
  const T *py = yhat->value.data();
  for (int64_t i = 0; i < n * c; ++i) {
    const double t = static_cast<double>(pt[i]);
    if (t > 0.0) {
      const double q = std::max(static_cast<double>(py[i]), kClamp);
      loss += t * (std::log(t) - std::log(q));
    }
  }
  loss /= static_cast<double>(n);
  Tensor<T> out(Shape{}, std::vector<T>{static_cast<T>(loss)});
  auto tgt = std::make_shared<Tensor<T>>(target);
  return tape->record(
      std::move(out), {yhat},
      [yhat, tgt, n, c](Node<T> *self) {
        if (!yhat->requires_grad) return;
        T *gy = yhat->ensure_grad();
        const T g0 = self->grad.values[0];
        const T *pt = tgt->data();
        const T *py = yhat->value.data();
        for (int64_t i = 0; i < n * c; ++i) {
          const double t = static_cast<double>(pt[i]);
          const double q = static_cast<double>(py[i]);
          if (t > 0.0 && q >= kClamp)
            gy[i] -= static_cast<T>(static_cast<double>(g0) * t /
                                    (q * static_cast<double>(n)));
        }
      },
      "kl_loss");
}

// ---- explicit instantiations -----------------------------------------------

template <typename T>
T *Node<T>::ensure_grad() {
  return ensure_grad_impl(this);
}

#define SCENECRNN_INSTANTIATE_AD(T)                                           \
  template struct Node<T>;                                                    \
  template class Tape<T>;                                                     \
  template Node<T> *add<T>(Node<T> *, Node<T> *);                             \
  template Node<T> *mul<T>(Node<T> *, Node<T> *);                             \
  template Node<T> *scale<T>(Node<T> *, T);                                   \
  template Node<T> *sub<T>(Node<T> *, Node<T> *);                             \
  template Node<T> *matmul<T>(Node<T> *, Node<T> *);                          \
  template Node<T> *concat<T>(const std::vector<Node<T> *> &, int);           \
  template Node<T> *reshape<T>(Node<T> *, Shape);                             \
  template Node<T> *transpose<T>(Node<T> *, std::vector<int>);                \
  template Node<T> *slice<T>(Node<T> *, int, int64_t, int64_t);               \
  template Node<T> *sum_over_axis<T>(Node<T> *, int);                         \
  template Node<T> *sum_all<T>(Node<T> *);                                    \
  template Node<T> *mean_all<T>(Node<T> *);                                   \
  template Node<T> *outer_product<T>(Node<T> *, Node<T> *);                   \
  template Node<T> *tanh<T>(Node<T> *);                                       \
  template Node<T> *sigmoid<T>(Node<T> *);                                    \
  template Node<T> *relu<T>(Node<T> *);                                       \
  template Node<T> *exp<T>(Node<T> *);                                        \
  template Node<T> *log<T>(Node<T> *);                                        \
  template Node<T> *softmax_over_axis<T>(Node<T> *, int);                     \
  template Node<T> *max_over_axis<T>(Node<T> *, int);                         \
  template Node<T> *max_pool_2d<T>(Node<T> *, int, int, int, int);            \
  template Node<T> *conv_2d_same<T>(Node<T> *, Node<T> *, Node<T> *);         \
  template Node<T> *dropout_mask_apply<T>(Node<T> *, Node<T> *);              \
  template Node<T> *batch_norm<T>(Node<T> *, Node<T> *, Node<T> *,            \
                                  Tensor<T> *, Tensor<T> *, bool, T, T);      \
  template Node<T> *kl_loss_batch<T>(const Tensor<T> &, Node<T> *);

SCENECRNN_INSTANTIATE_AD(float)
SCENECRNN_INSTANTIATE_AD(double)

#undef SCENECRNN_INSTANTIATE_AD

}  // namespace scenecrnn::ad
