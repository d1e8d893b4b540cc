// scenecrnn/include/scenecrnn/augment.h

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

#ifndef SCENECRNN_AUGMENT_H_
#define SCENECRNN_AUGMENT_H_

#include <random>

#include "scenecrnn/data.h"
#include "scenecrnn/tensor.h"

// Between-class example generation: two samples of different classes are
// mixed as (r*S1 + (1-r)*S2) / sqrt(r^2 + (1-r)^2) and labeled r*y1 +
// (1-r)*y2. Mixing operates on the log-spectral images the network consumes.
// Training only; calibration and evaluation use genuine one-hot examples.

namespace scenecrnn::augment {

struct BetweenClassSample {
  Tensor<float> image;  // same shape as the sources
  Tensor<float> label;  // (C), two nonzero entries summing to 1
  double r = 0.0;
  int64_t source_a = -1;
  int64_t source_b = -1;
};

// One-hot vector of length num_classes.
Tensor<float> one_hot(int label, int64_t num_classes);

// The sources must have identical shapes and distinct one-hot labels;
// r lies in [0, 1]. Arithmetic runs in double so the mix is exactly
// symmetric under (S1, S2, r) -> (S2, S1, 1-r).
BetweenClassSample mix_between_class(const Tensor<float> &s1,
                                     const Tensor<float> &y1,
                                     const Tensor<float> &s2,
                                     const Tensor<float> &y2, double r);

// Draws batch_size mixes: each picks one sample uniformly, a second uniformly
// among items of any other class, and a fresh r ~ U(0,1). Deterministic for a
// given rng state. Requires at least two classes in the set.
std::vector<BetweenClassSample> sample_bc_batch(const data::FeatureSet &set,
                                                int64_t batch_size,
                                                std::mt19937 &rng);

}  // namespace scenecrnn::augment

#endif  // SCENECRNN_AUGMENT_H_
