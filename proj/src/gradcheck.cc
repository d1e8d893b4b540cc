// scenecrnn/src/gradcheck.cc

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

#include "scenecrnn/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace scenecrnn {

namespace {

template <typename T>
double eval_scalar(
    const std::function<ad::Node<T> *(ad::Tape<T> &, ad::Node<T> *)> &f,
    const Tensor<T> &x) {
  ad::Tape<T> tape;
  ad::Node<T> *leaf = tape.leaf(x, /*requires_grad=*/false);
  ad::Node<T> *out = f(tape, leaf);
  if (out->numel() != 1)
    throw std::invalid_argument("grad_check: function must be scalar-valued");
  return static_cast<double>(out->value.values[0]);
}

}  // namespace

template <typename T>
GradCheckReport grad_check(
    const std::function<ad::Node<T> *(ad::Tape<T> &, ad::Node<T> *)> &f,
    const Tensor<T> &x, T step, double tol, int64_t max_coords,
    std::mt19937 *rng) {
  Tensor<T> grad_ad;
  {
    ad::Tape<T> tape;
    ad::Node<T> *leaf = tape.leaf(x, /*requires_grad=*/true);
    ad::Node<T> *out = f(tape, leaf);
    if (out->numel() != 1)
      throw std::invalid_argument("grad_check: function must be scalar-valued");
    tape.backward(out);
    grad_ad = leaf->grad.values.empty() ? Tensor<T>(x.shape) : leaf->grad;
  }

  std::vector<int64_t> coords(static_cast<size_t>(x.numel()));
  std::iota(coords.begin(), coords.end(), int64_t{0});
  if (max_coords >= 0 && max_coords < x.numel()) {
    if (rng == nullptr)
      throw std::invalid_argument("grad_check: sampling coords requires an rng");
    for (int64_t i = 0; i < max_coords; ++i) {
      std::uniform_int_distribution<int64_t> pick(i, x.numel() - 1);
      std::swap(coords[static_cast<size_t>(i)],
                coords[static_cast<size_t>(pick(*rng))]);
    }
    coords.resize(static_cast<size_t>(max_coords));
  }

  GradCheckReport report;
  report.coords_checked = static_cast<int64_t>(coords.size());
  Tensor<T> probe = x;
  for (int64_t idx : coords) {
    const T saved = probe[idx];
    probe[idx] = saved + step;
    const double up = eval_scalar(f, probe);
    probe[idx] = saved - step;
    const double dn = eval_scalar(f, probe);
    probe[idx] = saved;
    const double fd = (up - dn) / (2.0 * static_cast<double>(step));
    const double adv = static_cast<double>(grad_ad[idx]);
    const double denom = std::max({1e-5, std::abs(adv), std::abs(fd)});
    report.max_rel_err = std::max(report.max_rel_err, std::abs(adv - fd) / denom);
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

template GradCheckReport grad_check<float>(
    const std::function<ad::Node<float> *(ad::Tape<float> &, ad::Node<float> *)> &,
    const Tensor<float> &, float, double, int64_t, std::mt19937 *);
template GradCheckReport grad_check<double>(
    const std::function<ad::Node<double> *(ad::Tape<double> &, ad::Node<double> *)> &,
    const Tensor<double> &, double, double, int64_t, std::mt19937 *);

}  // namespace scenecrnn
