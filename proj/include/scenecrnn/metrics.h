// scenecrnn/include/scenecrnn/metrics.h

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

#ifndef SCENECRNN_METRICS_H_
#define SCENECRNN_METRICS_H_

#include <cstdint>
#include <vector>

namespace scenecrnn::metrics {

struct Summary {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double macro_precision = 0.0;
};

// Accuracy plus macro-averaged (unweighted over all classes) F1 and
// precision. Per-class ratios with zero denominators count as 0.
Summary evaluate(const std::vector<int> &truth, const std::vector<int> &predicted,
                 int64_t classes);

// Row = truth, column = prediction.
std::vector<std::vector<int64_t>> confusion_matrix(
    const std::vector<int> &truth, const std::vector<int> &predicted,
    int64_t classes);

Summary from_confusion(const std::vector<std::vector<int64_t>> &matrix);

}  // namespace scenecrnn::metrics

#endif  // SCENECRNN_METRICS_H_
