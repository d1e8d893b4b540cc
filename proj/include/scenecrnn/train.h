// scenecrnn/include/scenecrnn/train.h

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

#ifndef SCENECRNN_TRAIN_H_
#define SCENECRNN_TRAIN_H_

#include <optional>
#include <string>
#include <vector>

#include "scenecrnn/attention.h"
#include "scenecrnn/augment.h"
#include "scenecrnn/data.h"
#include "scenecrnn/layers.h"
#include "scenecrnn/serialize.h"

namespace scenecrnn::train {

enum class ModelKind { kAttCrnn, kCnnBaseline };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string &name);

// ---- model facade -----------------------------------------------------------

struct ModelDims {
  int64_t freq_bins = 64;   // M
  int64_t in_channels = 2;  // K
  int64_t steps = 80;       // T
  int64_t base_filters = 64;
  int64_t hidden = 128;     // H (Att-CRNN only)
  int64_t att_size = 64;    // attention layer size (Att-CRNN only)
  int64_t classes = 2;      // C
};

// Either an Att-CRNN or the CNN baseline, with one training/eval surface.
struct Model {
  ModelKind kind = ModelKind::kAttCrnn;
  ModelDims dims;
  std::optional<attention::AttCrnnParams<float>> att;
  std::optional<layers::CnnBaselineParams<float>> cnn;

  static Model init(ModelKind kind, const ModelDims &dims, unsigned seed);

  layers::NamedParams<float> trainables();
  layers::NamedParams<float> state();
  int64_t feature_dim() const;  // 2H for Att-CRNN, F for the baseline

  // Posterior node (N, C); features (optional) receives the pooled feature
  // node consumed by SVM calibration.
  ad::Node<float> *forward(layers::ParamBinding<float> &binding,
                           ad::Node<float> *input,
                           const layers::ForwardOptions<float> &opts,
                           ad::Node<float> **features = nullptr,
                           layers::ConvTrace *trace = nullptr,
                           attention::AttCrnnOutput<float> *diag = nullptr);

  // Inference-mode forward over raw image batches.
  Tensor<float> predict_posteriors(const Tensor<float> &batch);
  Tensor<float> extract_features_batch(const Tensor<float> &batch);
};

// ---- batching ---------------------------------------------------------------

// (N, K, M, T) batch from feature items / BC samples.
Tensor<float> batch_images(const std::vector<const Tensor<float> *> &images,
                           const Shape &image_shape);
Tensor<float> batch_from_items(const data::FeatureSet &set,
                               const std::vector<int64_t> &indices);
std::pair<Tensor<float>, Tensor<float>> batch_from_bc(
    const std::vector<augment::BetweenClassSample> &samples);

// ---- losses -----------------------------------------------------------------

// KL(y || yhat) with yhat clamped at 1e-12 and 0*log(0/.) = 0.
double kl_divergence(const Tensor<float> &y, const Tensor<float> &yhat);
double cross_entropy(const Tensor<float> &y, const Tensor<float> &yhat);
double entropy(const Tensor<float> &y);

// ---- optimizer ---------------------------------------------------------------

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  int64_t step = 0;
  std::vector<Tensor<float>> m, v;  // aligned with the parameter list

  static AdamState init(const layers::NamedParams<float> &params,
                        const AdamConfig &config = {});
};

// One bias-corrected Adam update; grads must align with params.
void adam_step(const layers::NamedParams<float> &params,
               const std::vector<Tensor<float>> &grads, AdamState &state,
               double lr);

// ---- training loop ------------------------------------------------------------

struct TrainConfig {
  int64_t epochs = 500;
  int64_t batch_size = 100;
  double learning_rate = 1e-4;
  double conv_dropout = layers::kConvDropout;
  double rnn_dropout = layers::kRnnDropout;
  unsigned seed = 1;
};

struct EpochStats {
  int64_t epoch = 0;
  double train_loss = 0.0;
  double seg_accuracy = 0.0;  // 2-second segment accuracy on the test split
};

struct History {
  std::vector<EpochStats> epochs;
  void write_csv(const std::string &path) const;
};

struct TrainResult {
  History history;
  double best_accuracy = 0.0;
  int64_t best_epoch = 0;
};

// Trains with freshly generated between-class batches (one pass covering the
// training set size per epoch) against the KL loss, evaluating segment
// accuracy on test_set each epoch. The model is left at the parameters of the
// best epoch. Aborts with a diagnostic if the loss turns non-finite.
TrainResult train(Model &model, const data::FeatureSet &train_set,
                  const data::FeatureSet &test_set, const TrainConfig &config);

// Argmax segment accuracy of the model on a feature set.
double segment_accuracy(Model &model, const data::FeatureSet &set,
                        int64_t batch_size = 64);

// ---- checkpoints ---------------------------------------------------------------

// A trained model plus everything needed to reproduce its inputs.
struct ModelBundle {
  Model model;
  dsp::DspConfig dsp;
  int sample_rate = 22050;
  std::vector<std::string> class_names;
};

void save_model_bundle(const std::string &path, ModelBundle &bundle);
ModelBundle load_model_bundle(const std::string &path);

}  // namespace scenecrnn::train

#endif  // SCENECRNN_TRAIN_H_
