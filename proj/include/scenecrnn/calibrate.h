// scenecrnn/include/scenecrnn/calibrate.h

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

#ifndef SCENECRNN_CALIBRATE_H_
#define SCENECRNN_CALIBRATE_H_

#include <string>
#include <vector>

#include "scenecrnn/data.h"
#include "scenecrnn/tensor.h"
#include "scenecrnn/train.h"

// Post-hoc calibration: a one-vs-rest linear SVM trained on the network's
// pooled feature vectors replaces the softmax layer, with per-class Platt
// scaling turning raw margins into posterior probabilities.

namespace scenecrnn::calibrate {

inline constexpr double kDefaultTradeoff = 0.1;  // SVM C parameter
inline constexpr int64_t kSvmEpochs = 200;

struct SvmModel {
  int64_t classes = 0;
  int64_t dim = 0;
  Tensor<double> weights;  // (C, dim)
  Tensor<double> bias;     // (C)
  Tensor<double> platt_a;  // (C); negative for positively correlated scores
  Tensor<double> platt_b;  // (C)
  double tradeoff = kDefaultTradeoff;

  double decision(int64_t cls, const float *x) const;
};

struct LabeledFeatures {
  Tensor<float> x;  // (n, dim)
  std::vector<int> labels;
  int64_t classes = 0;
};

// Pooled feature vector and label for every item, deterministic
// (inference mode).
LabeledFeatures extract_features(train::Model &model,
                                 const data::FeatureSet &set);

// One-vs-rest L2-regularized hinge loss minimized by deterministic full-batch
// subgradient descent with step 1/(lambda*t), lambda = 1/(C*n), iterates
// averaged; then per-class Platt scaling fitted on the training scores by a
// regularized Newton logistic fit. objective_trace (optional) receives the
// primal objective of class 0 evaluated at the averaged iterate per epoch.
SvmModel train_svm(const LabeledFeatures &features, double tradeoff,
                   std::vector<double> *objective_trace = nullptr);

// Per-class Platt probabilities normalized to sum 1 (double precision).
Tensor<double> svm_predict_proba(const SvmModel &model, const float *x,
                                 int64_t dim);

// (n, C) probabilities for a feature matrix.
Tensor<double> svm_predict_proba_batch(const SvmModel &model,
                                       const Tensor<float> &x);

// Container I/O with entries svm.w.<c>, svm.b.<c>, platt.a.<c>, platt.b.<c>.
void save_svm(const std::string &path, const SvmModel &model);
SvmModel load_svm(const std::string &path);

// Fits sigmoid P(y=1|s) = 1/(1 + exp(a*s + b)) to decision scores by the
// standard robust Newton iteration with regularized targets.
void platt_fit(const std::vector<double> &scores, const std::vector<int> &is_positive,
               double &a, double &b);

}  // namespace scenecrnn::calibrate

#endif  // SCENECRNN_CALIBRATE_H_
