// scenecrnn/src/metrics.cc

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

#include "scenecrnn/metrics.h"

#include <stdexcept>

namespace scenecrnn::metrics {

std::vector<std::vector<int64_t>> confusion_matrix(
    const std::vector<int> &truth, const std::vector<int> &predicted,
    int64_t classes) {
  if (truth.size() != predicted.size())
    throw std::invalid_argument("metrics: truth/prediction size mismatch");
  std::vector<std::vector<int64_t>> m(
      static_cast<size_t>(classes),
      std::vector<int64_t>(static_cast<size_t>(classes), 0));
  for (size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= classes || predicted[i] < 0 ||
        predicted[i] >= classes)
      throw std::invalid_argument("metrics: label out of range");
    m[static_cast<size_t>(truth[i])][static_cast<size_t>(predicted[i])] += 1;
  }
  return m;
}

Summary from_confusion(const std::vector<std::vector<int64_t>> &matrix) {
  const size_t classes = matrix.size();
  int64_t total = 0, correct = 0;
  Summary s;
  for (size_t c = 0; c < classes; ++c) {
    correct += matrix[c][c];
    for (size_t p = 0; p < classes; ++p) total += matrix[c][p];
  }
  s.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;

  double f1_sum = 0.0, precision_sum = 0.0;
  for (size_t c = 0; c < classes; ++c) {
    int64_t tp = matrix[c][c], fp = 0, fn = 0;
    for (size_t o = 0; o < classes; ++o) {
      if (o == c) continue;
      fp += matrix[o][c];
      fn += matrix[c][o];
    }
    const double precision =
        tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall =
        tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double f1 = precision + recall > 0.0
                          ? 2.0 * precision * recall / (precision + recall)
                          : 0.0;
    precision_sum += precision;
    f1_sum += f1;
  }
  s.macro_precision = precision_sum / static_cast<double>(classes);
  s.macro_f1 = f1_sum / static_cast<double>(classes);
  return s;
}

Summary evaluate(const std::vector<int> &truth, const std::vector<int> &predicted,
                 int64_t classes) {
  return from_confusion(confusion_matrix(truth, predicted, classes));
}

}  // namespace scenecrnn::metrics
