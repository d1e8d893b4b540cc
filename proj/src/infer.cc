// scenecrnn/src/infer.cc

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

#include "scenecrnn/infer.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scenecrnn::infer {

namespace {

constexpr double kProbClamp = 1e-12;

Tensor<double> normalize_log_scores(std::vector<double> &log_scores) {
  const double mx = *std::max_element(log_scores.begin(), log_scores.end());
  double total = 0.0;
  for (double &s : log_scores) {
    s = std::exp(s - mx);
    total += s;
  }
  Tensor<double> out(Shape{static_cast<int64_t>(log_scores.size())});
  for (size_t c = 0; c < log_scores.size(); ++c)
    out[static_cast<int64_t>(c)] = log_scores[c] / total;
  return out;
}

}  // namespace

int argmax_label(const Tensor<double> &posterior) {
  return static_cast<int>(std::max_element(posterior.values.begin(),
                                           posterior.values.end()) -
                          posterior.values.begin());
}

Tensor<double> fuse_multiplicative(
    const std::vector<Tensor<double>> &posteriors) {
  if (posteriors.empty())
    throw std::invalid_argument("fuse_multiplicative: no segment posteriors");
  const int64_t classes = posteriors[0].numel();
  std::vector<double> log_scores(static_cast<size_t>(classes), 0.0);
  for (const Tensor<double> &p : posteriors) {
    if (p.numel() != classes)
      throw std::invalid_argument("fuse_multiplicative: class count mismatch");
    for (int64_t c = 0; c < classes; ++c)
      log_scores[static_cast<size_t>(c)] += std::log(std::max(p[c], kProbClamp));
  }
  return normalize_log_scores(log_scores);
}

Tensor<double> fuse_models(const Tensor<double> &a, const Tensor<double> &b) {
  if (a.shape != b.shape)
    throw std::invalid_argument("fuse_models: class sets differ, " +
                                shape_str(a.shape) + " vs " + shape_str(b.shape));
  std::vector<double> log_scores(static_cast<size_t>(a.numel()));
  for (int64_t c = 0; c < a.numel(); ++c)
    log_scores[static_cast<size_t>(c)] = std::log(std::max(a[c], kProbClamp)) +
                                         std::log(std::max(b[c], kProbClamp));
  return normalize_log_scores(log_scores);
}

RecordingPrediction classify_recording(train::Model &model,
                                       const calibrate::SvmModel *svm,
                                       const AudioClip &recording,
                                       const dsp::FeatureExtractor &extractor) {
  const std::vector<dsp::SpectroImage> images =
      extractor.recording_images(recording);
  std::vector<const Tensor<float> *> refs;
  refs.reserve(images.size());
  for (const auto &img : images) refs.push_back(&img.data);
  const Tensor<float> batch =
      train::batch_images(refs, images.front().data.shape);

  RecordingPrediction pred;
  const int64_t n = static_cast<int64_t>(images.size());
  if (svm != nullptr) {
    const Tensor<float> features = model.extract_features_batch(batch);
    for (int64_t i = 0; i < n; ++i)
      pred.segment_posteriors.push_back(calibrate::svm_predict_proba(
          *svm, features.data() + i * features.shape[1], features.shape[1]));
  } else {
    const Tensor<float> posteriors = model.predict_posteriors(batch);
    const int64_t classes = posteriors.shape[1];
    for (int64_t i = 0; i < n; ++i) {
      Tensor<double> row(Shape{classes});
      for (int64_t c = 0; c < classes; ++c)
        row[c] = static_cast<double>(posteriors[i * classes + c]);
      pred.segment_posteriors.push_back(std::move(row));
    }
  }
  pred.fused = fuse_multiplicative(pred.segment_posteriors);
  pred.label = argmax_label(pred.fused);
  return pred;
}

}  // namespace scenecrnn::infer
