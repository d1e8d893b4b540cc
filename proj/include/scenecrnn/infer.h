// scenecrnn/include/scenecrnn/infer.h

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

#ifndef SCENECRNN_INFER_H_
#define SCENECRNN_INFER_H_

#include <vector>

#include "scenecrnn/calibrate.h"
#include "scenecrnn/dsp.h"
#include "scenecrnn/train.h"
#include "scenecrnn/wav.h"

// Recording-level classification: every non-overlapping 2 s segment is
// classified on its own and the per-segment posteriors are combined by
// probabilistic multiplicative fusion (product in the log domain,
// renormalized), with argmax as the recording label.

namespace scenecrnn::infer {

// fused[c] is proportional to the product of p_i[c]; entries are clamped at
// 1e-12 before the log. Fusion runs in double precision and is
// permutation-invariant in the segment order.
Tensor<double> fuse_multiplicative(const std::vector<Tensor<double>> &posteriors);

// Multiplicative fusion of two models' posteriors for the same recording
// (the two feature kinds of the fused system). Class sets must agree.
Tensor<double> fuse_models(const Tensor<double> &a, const Tensor<double> &b);

struct RecordingPrediction {
  std::vector<Tensor<double>> segment_posteriors;
  Tensor<double> fused;
  int label = 0;
};

// Segment -> two-channel image -> posterior (SVM-calibrated when svm is
// non-null, softmax otherwise) -> multiplicative fusion.
RecordingPrediction classify_recording(train::Model &model,
                                       const calibrate::SvmModel *svm,
                                       const AudioClip &recording,
                                       const dsp::FeatureExtractor &extractor);

int argmax_label(const Tensor<double> &posterior);

}  // namespace scenecrnn::infer

#endif  // SCENECRNN_INFER_H_
