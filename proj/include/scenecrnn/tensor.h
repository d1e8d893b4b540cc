// scenecrnn/include/scenecrnn/tensor.h

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

#ifndef SCENECRNN_TENSOR_H_
#define SCENECRNN_TENSOR_H_

#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace scenecrnn {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape &shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape &shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

// Dense row-major n-dimensional array. Rank 0 (empty shape) is a scalar
// with one element.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> values;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), values(shape_numel(shape), T(0)) {
    check_shape();
  }
  Tensor(Shape s, T fill) : shape(std::move(s)), values(shape_numel(shape), fill) {
    check_shape();
  }
  Tensor(Shape s, std::vector<T> data) : shape(std::move(s)), values(std::move(data)) {
    check_shape();
    if (static_cast<int64_t>(values.size()) != shape_numel(shape))
      throw std::invalid_argument("Tensor: data size " + std::to_string(values.size()) +
                                  " does not match shape " + shape_str(shape));
  }

  int64_t numel() const { return static_cast<int64_t>(values.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int64_t dim(int axis) const { return shape[static_cast<size_t>(axis)]; }

  T *data() { return values.data(); }
  const T *data() const { return values.data(); }

  T &operator[](int64_t i) { return values[static_cast<size_t>(i)]; }
  const T &operator[](int64_t i) const { return values[static_cast<size_t>(i)]; }

  // Row-major strides, in elements.
  std::vector<int64_t> strides() const {
    std::vector<int64_t> st(shape.size());
    int64_t acc = 1;
    for (int i = rank() - 1; i >= 0; --i) {
      st[static_cast<size_t>(i)] = acc;
      acc *= shape[static_cast<size_t>(i)];
    }
    return st;
  }

  void fill(T v) { std::fill(values.begin(), values.end(), v); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.values.resize(values.size());
    for (size_t i = 0; i < values.size(); ++i) out.values[i] = static_cast<U>(values[i]);
    return out;
  }

 private:
  void check_shape() const {
    for (int64_t d : shape)
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension in " + shape_str(shape));
  }
};

}  // namespace scenecrnn

#endif  // SCENECRNN_TENSOR_H_
