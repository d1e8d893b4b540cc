// scenecrnn/src/augment.cc

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

#include "scenecrnn/augment.h"

#include <cmath>
#include <stdexcept>

namespace scenecrnn::augment {

Tensor<float> one_hot(int label, int64_t num_classes) {
  if (label < 0 || label >= num_classes)
    throw std::invalid_argument("one_hot: label " + std::to_string(label) +
                                " outside [0, " + std::to_string(num_classes) + ")");
  Tensor<float> y(Shape{num_classes});
  y[label] = 1.0f;
  return y;
}

BetweenClassSample mix_between_class(const Tensor<float> &s1,
                                     const Tensor<float> &y1,
                                     const Tensor<float> &s2,
                                     const Tensor<float> &y2, double r) {
  if (s1.shape != s2.shape)
    throw std::invalid_argument("mix_between_class: image shapes differ, " +
                                shape_str(s1.shape) + " vs " + shape_str(s2.shape));
  if (y1.shape != y2.shape)
    throw std::invalid_argument("mix_between_class: label shapes differ");
  if (r < 0.0 || r > 1.0)
    throw std::invalid_argument("mix_between_class: r must lie in [0, 1]");
  if (y1.values == y2.values)
    throw std::invalid_argument("mix_between_class: samples share a class");

  const double w1 = r, w2 = 1.0 - r;
  const double denom = std::sqrt(w1 * w1 + w2 * w2);

  BetweenClassSample out;
  out.r = r;
  out.image = Tensor<float>(s1.shape);
  for (int64_t i = 0; i < s1.numel(); ++i)
    out.image[i] = static_cast<float>(
        (w1 * static_cast<double>(s1[i]) + w2 * static_cast<double>(s2[i])) /
        denom);
  out.label = Tensor<float>(y1.shape);
  for (int64_t i = 0; i < y1.numel(); ++i)
    out.label[i] = static_cast<float>(w1 * static_cast<double>(y1[i]) +
                                      w2 * static_cast<double>(y2[i]));
  return out;
}

std::vector<BetweenClassSample> sample_bc_batch(const data::FeatureSet &set,
                                                int64_t batch_size,
                                                std::mt19937 &rng) {
  if (set.classes < 2)
    throw std::invalid_argument(
        "sample_bc_batch: between-class mixing needs at least two classes");
  if (set.items.empty())
    throw std::invalid_argument("sample_bc_batch: empty feature set");

  std::uniform_int_distribution<int64_t> pick(
      0, static_cast<int64_t>(set.items.size()) - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<BetweenClassSample> batch;
  batch.reserve(static_cast<size_t>(batch_size));
  for (int64_t b = 0; b < batch_size; ++b) {
    const int64_t i = pick(rng);
    int64_t j = pick(rng);
    while (set.items[static_cast<size_t>(j)].label ==
           set.items[static_cast<size_t>(i)].label)
      j = pick(rng);
    const double r = unit(rng);
    const auto &a = set.items[static_cast<size_t>(i)];
    const auto &c = set.items[static_cast<size_t>(j)];
    BetweenClassSample s = mix_between_class(
        a.image, one_hot(a.label, set.classes), c.image,
        one_hot(c.label, set.classes), r);
    s.source_a = i;
    s.source_b = j;
    batch.push_back(std::move(s));
  }
  return batch;
}

}  // namespace scenecrnn::augment
