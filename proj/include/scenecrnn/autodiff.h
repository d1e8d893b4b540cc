// scenecrnn/include/scenecrnn/autodiff.h

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

#ifndef SCENECRNN_AUTODIFF_H_
#define SCENECRNN_AUTODIFF_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "scenecrnn/tensor.h"

// Reverse-mode automatic differentiation over dense tensors. A Tape owns the
// nodes of one trace in creation order (which is a topological order by
// construction); Tape::backward walks it in reverse. A tape and its nodes
// belong to one logical execution context; independent tapes may run in
// parallel.

namespace scenecrnn::ad {

template <typename T>
class Tape;

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until first accumulation during backward
  bool requires_grad = false;
  Tape<T> *tape = nullptr;
  const char *op = "leaf";
  std::function<void(Node<T> *)> backward_fn;  // null for leaves

  const Shape &shape() const { return value.shape; }
  int64_t numel() const { return value.numel(); }

  // Adds src (same numel as value) into grad, allocating it zeroed on first
  // touch. No-op when requires_grad is false.
  void accumulate_grad(const T *src, int64_t n);

  // Allocates grad zeroed if absent and returns its buffer. Backward rules
  // use this to accumulate with kernel calls directly.
  T *ensure_grad();
};

template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Node<T> *leaf(Tensor<T> value, bool requires_grad = false);
  Node<T> *constant(Tensor<T> value) { return leaf(std::move(value), false); }

  // Records an op result. requires_grad is inherited from the inputs;
  // backward_fn is dropped when no input needs gradients.
  Node<T> *record(Tensor<T> value, const std::vector<Node<T> *> &inputs,
                  std::function<void(Node<T> *)> backward_fn, const char *op);

  // Seeds d(loss)/d(loss) = 1 and runs all recorded backward rules in
  // reverse order. loss must be scalar (one element).
  void backward(Node<T> *loss);

  size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::unique_ptr<Node<T>>> nodes_;
};

// ---- Core ops. Shape mismatches throw std::invalid_argument naming the op
// ---- and the offending shapes.

// Elementwise sum. b may also have lower rank matching a trailing suffix of
// a's shape (bias broadcast); its gradient is then sum-reduced.
template <typename T>
Node<T> *add(Node<T> *a, Node<T> *b);

// Elementwise product of same-shape tensors.
template <typename T>
Node<T> *mul(Node<T> *a, Node<T> *b);

// Multiplication by a compile-time constant scalar.
template <typename T>
Node<T> *scale(Node<T> *a, T c);

template <typename T>
Node<T> *sub(Node<T> *a, Node<T> *b);

// (m x k) * (k x n) matrix product.
template <typename T>
Node<T> *matmul(Node<T> *a, Node<T> *b);

template <typename T>
Node<T> *concat(const std::vector<Node<T> *> &xs, int axis);

template <typename T>
Node<T> *reshape(Node<T> *a, Shape shape);

// Permutes axes; perm is a permutation of [0, rank).
template <typename T>
Node<T> *transpose(Node<T> *a, std::vector<int> perm);

// Keeps [start, stop) along axis.
template <typename T>
Node<T> *slice(Node<T> *a, int axis, int64_t start, int64_t stop);

// Sums out one axis (the result drops it).
template <typename T>
Node<T> *sum_over_axis(Node<T> *a, int axis);

template <typename T>
Node<T> *sum_all(Node<T> *a);

template <typename T>
Node<T> *mean_all(Node<T> *a);

// Vectors (p), (q) -> (p,q); batched (n,p), (n,q) -> (n,p,q).
template <typename T>
Node<T> *outer_product(Node<T> *a, Node<T> *b);

template <typename T>
Node<T> *tanh(Node<T> *a);
template <typename T>
Node<T> *sigmoid(Node<T> *a);
template <typename T>
Node<T> *relu(Node<T> *a);
template <typename T>
Node<T> *exp(Node<T> *a);
template <typename T>
Node<T> *log(Node<T> *a);

// Numerically stable softmax along one axis.
template <typename T>
Node<T> *softmax_over_axis(Node<T> *a, int axis);

// Maximum along one axis (the result drops it); subgradient routes to the
// first maximal element.
template <typename T>
Node<T> *max_over_axis(Node<T> *a, int axis);

// (n,c,h,w) max pooling; kernel sizes must equal the strides and divide the
// input extents exactly.
template <typename T>
Node<T> *max_pool_2d(Node<T> *a, int kh, int kw, int sh, int sw);

// SAME-padded stride-1 convolution of x (n,cin,h,w) with w (cout,cin,kh,kw)
// plus per-output-channel bias (cout).
template <typename T>
Node<T> *conv_2d_same(Node<T> *x, Node<T> *w, Node<T> *b);

// Elementwise product with a constant mask (no gradient into the mask). For
// inverted dropout the mask holds 0 or 1/(1-rate).
template <typename T>
Node<T> *dropout_mask_apply(Node<T> *x, Node<T> *mask);

// Per-channel batch normalization of x (n,c,h,w); gamma/beta are (c).
// Training mode normalizes by batch statistics over (n,h,w) and, when
// running_mean/running_var are non-null, folds them into the running
// estimates with the given momentum. Inference mode normalizes by the
// running statistics, which must then be provided.
template <typename T>
Node<T> *batch_norm(Node<T> *x, Node<T> *gamma, Node<T> *beta,
                    Tensor<T> *running_mean, Tensor<T> *running_var,
                    bool training, T momentum, T eps);

// Mean over batch rows of KL(target || yhat), both (n,c) with rows summing
// to 1. yhat is clamped at 1e-12 inside the log; target rows are constants.
template <typename T>
Node<T> *kl_loss_batch(const Tensor<T> &target, Node<T> *yhat);

}  // namespace scenecrnn::ad

#endif  // SCENECRNN_AUTODIFF_H_
