// scenecrnn/src/train.cc

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

#include "scenecrnn/train.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace scenecrnn::train {

namespace {

constexpr int64_t kEvalChunk = 64;
constexpr double kYhatClamp = 1e-12;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string model_kind_name(ModelKind kind) {
  return kind == ModelKind::kAttCrnn ? "att_crnn" : "cnn_baseline";
}

ModelKind model_kind_from_name(const std::string &name) {
  if (name == "att_crnn") return ModelKind::kAttCrnn;
  if (name == "cnn_baseline") return ModelKind::kCnnBaseline;
  throw std::invalid_argument("unknown model kind '" + name + "'");
}

// ---- model facade -----------------------------------------------------------

Model Model::init(ModelKind kind, const ModelDims &dims, unsigned seed) {
  Model m;
  m.kind = kind;
  m.dims = dims;
  if (kind == ModelKind::kAttCrnn) {
    m.att = attention::AttCrnnParams<float>::init(
        dims.freq_bins, dims.in_channels, dims.steps, dims.base_filters,
        dims.hidden, dims.att_size, dims.classes, seed);
  } else {
    m.cnn = layers::CnnBaselineParams<float>::init(
        dims.freq_bins, dims.in_channels, dims.base_filters, dims.classes,
        seed);
  }
  return m;
}

layers::NamedParams<float> Model::trainables() {
  return kind == ModelKind::kAttCrnn ? att->trainables() : cnn->trainables();
}

layers::NamedParams<float> Model::state() {
  return kind == ModelKind::kAttCrnn ? att->state() : cnn->state();
}

int64_t Model::feature_dim() const {
  return kind == ModelKind::kAttCrnn ? 2 * dims.hidden
                                     : (dims.freq_bins / 64) * dims.base_filters * 4;
}

ad::Node<float> *Model::forward(layers::ParamBinding<float> &binding,
                                ad::Node<float> *input,
                                const layers::ForwardOptions<float> &opts,
                                ad::Node<float> **features,
                                layers::ConvTrace *trace,
                                attention::AttCrnnOutput<float> *diag) {
  if (kind == ModelKind::kAttCrnn) {
    attention::AttCrnnOutput<float> out =
        attention::att_crnn_forward(binding, *att, input, opts, trace);
    if (features) *features = out.pooled;
    if (diag) *diag = out;
    return out.posterior;
  }
  return layers::cnn_baseline_forward(binding, *cnn, input, opts, features,
                                      trace);
}

namespace {

// Runs the model in inference mode over chunks, collecting either posteriors
// or pooled features.
Tensor<float> run_inference(Model &model, const Tensor<float> &batch,
                            bool want_features) {
  if (batch.rank() != 4)
    throw std::invalid_argument("inference: expected (N, K, M, T) batch");
  const int64_t n = batch.shape[0];
  const int64_t item = batch.numel() / std::max<int64_t>(1, n);
  const int64_t out_dim = want_features
                              ? model.feature_dim()
                              : model.dims.classes;
  Tensor<float> out(Shape{n, out_dim});
  for (int64_t start = 0; start < n; start += kEvalChunk) {
    const int64_t stop = std::min(n, start + kEvalChunk);
    Tensor<float> chunk(
        Shape{stop - start, batch.shape[1], batch.shape[2], batch.shape[3]});
    std::memcpy(chunk.data(), batch.data() + start * item,
                static_cast<size_t>((stop - start) * item) * sizeof(float));
    ad::Tape<float> tape;
    layers::ParamBinding<float> binding(tape);
    ad::Node<float> *x = tape.constant(std::move(chunk));
    layers::ForwardOptions<float> opts;
    opts.training = false;
    ad::Node<float> *features = nullptr;
    ad::Node<float> *posterior = model.forward(binding, x, opts, &features);
    const ad::Node<float> *src = want_features ? features : posterior;
    std::memcpy(out.data() + start * out_dim, src->value.data(),
                static_cast<size_t>((stop - start) * out_dim) * sizeof(float));
  }
  return out;
}

}  // namespace

Tensor<float> Model::predict_posteriors(const Tensor<float> &batch) {
  return run_inference(*this, batch, /*want_features=*/false);
}

Tensor<float> Model::extract_features_batch(const Tensor<float> &batch) {
  return run_inference(*this, batch, /*want_features=*/true);
}

// ---- batching ---------------------------------------------------------------

Tensor<float> batch_images(const std::vector<const Tensor<float> *> &images,
                           const Shape &image_shape) {
  const int64_t n = static_cast<int64_t>(images.size());
  const int64_t item = shape_numel(image_shape);
  Shape batch_shape{n};
  for (int64_t d : image_shape) batch_shape.push_back(d);
  Tensor<float> out(batch_shape);
  for (int64_t i = 0; i < n; ++i) {
    const Tensor<float> *img = images[static_cast<size_t>(i)];
    if (img->shape != image_shape)
      throw std::invalid_argument("batch_images: image " + std::to_string(i) +
                                  " has " + shape_str(img->shape) +
                                  ", expected " + shape_str(image_shape));
    std::memcpy(out.data() + i * item, img->data(),
                static_cast<size_t>(item) * sizeof(float));
  }
  return out;
}

Tensor<float> batch_from_items(const data::FeatureSet &set,
                               const std::vector<int64_t> &indices) {
  std::vector<const Tensor<float> *> images;
  images.reserve(indices.size());
  for (int64_t i : indices) images.push_back(&set.items[static_cast<size_t>(i)].image);
  return batch_images(images, set.image_shape);
}

std::pair<Tensor<float>, Tensor<float>> batch_from_bc(
    const std::vector<augment::BetweenClassSample> &samples) {
  if (samples.empty()) throw std::invalid_argument("batch_from_bc: empty batch");
  std::vector<const Tensor<float> *> images;
  images.reserve(samples.size());
  for (const auto &s : samples) images.push_back(&s.image);
  Tensor<float> inputs = batch_images(images, samples[0].image.shape);
  const int64_t classes = samples[0].label.numel();
  Tensor<float> labels(Shape{static_cast<int64_t>(samples.size()), classes});
  for (size_t i = 0; i < samples.size(); ++i)
    std::memcpy(labels.data() + static_cast<int64_t>(i) * classes,
                samples[i].label.data(),
                static_cast<size_t>(classes) * sizeof(float));
  return {std::move(inputs), std::move(labels)};
}

// ---- losses -----------------------------------------------------------------

double kl_divergence(const Tensor<float> &y, const Tensor<float> &yhat) {
  if (y.shape != yhat.shape)
    throw std::invalid_argument("kl_divergence: shape mismatch");
  double acc = 0.0;
  for (int64_t i = 0; i < y.numel(); ++i) {
    const double t = y[i];
    if (t > 0.0) {
      const double q = std::max(static_cast<double>(yhat[i]), kYhatClamp);
      acc += t * (std::log(t) - std::log(q));
    }
  }
  return acc;
}

double cross_entropy(const Tensor<float> &y, const Tensor<float> &yhat) {
  if (y.shape != yhat.shape)
    throw std::invalid_argument("cross_entropy: shape mismatch");
  double acc = 0.0;
  for (int64_t i = 0; i < y.numel(); ++i) {
    const double t = y[i];
    if (t > 0.0)
      acc -= t * std::log(std::max(static_cast<double>(yhat[i]), kYhatClamp));
  }
  return acc;
}

double entropy(const Tensor<float> &y) {
  double acc = 0.0;
  for (int64_t i = 0; i < y.numel(); ++i) {
    const double t = y[i];
    if (t > 0.0) acc -= t * std::log(t);
  }
  return acc;
}

// ---- optimizer ---------------------------------------------------------------

AdamState AdamState::init(const layers::NamedParams<float> &params,
                          const AdamConfig &config) {
  AdamState s;
  s.config = config;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const auto &[name, tensor] : params) {
    s.m.emplace_back(tensor->shape);
    s.v.emplace_back(tensor->shape);
  }
  return s;
}

void adam_step(const layers::NamedParams<float> &params,
               const std::vector<Tensor<float>> &grads, AdamState &state,
               double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  state.step += 1;
  const double b1 = state.config.beta1, b2 = state.config.beta2;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (size_t p = 0; p < params.size(); ++p) {
    Tensor<float> &w = *params[p].second;
    const Tensor<float> &g = grads[p];
    if (g.shape != w.shape)
      throw std::invalid_argument("adam_step: gradient shape mismatch for " +
                                  params[p].first);
    Tensor<float> &m = state.m[p];
    Tensor<float> &v = state.v[p];
    for (int64_t i = 0; i < w.numel(); ++i) {
      const double gi = g[i];
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      w[i] -= static_cast<float>(lr * (mi / corr1) /
                                 (std::sqrt(vi / corr2) + state.config.eps));
    }
  }
}

// ---- training loop ------------------------------------------------------------

double segment_accuracy(Model &model, const data::FeatureSet &set,
                        int64_t batch_size) {
  if (set.items.empty()) throw std::invalid_argument("segment_accuracy: empty set");
  int64_t correct = 0;
  const int64_t n = static_cast<int64_t>(set.items.size());
  for (int64_t start = 0; start < n; start += batch_size) {
    const int64_t stop = std::min(n, start + batch_size);
    std::vector<int64_t> idx(static_cast<size_t>(stop - start));
    for (int64_t i = start; i < stop; ++i) idx[static_cast<size_t>(i - start)] = i;
    const Tensor<float> posteriors =
        model.predict_posteriors(batch_from_items(set, idx));
    const int64_t classes = posteriors.shape[1];
    for (int64_t i = 0; i < stop - start; ++i) {
      const float *row = posteriors.data() + i * classes;
      const int pred = static_cast<int>(
          std::max_element(row, row + classes) - row);
      if (pred == set.items[static_cast<size_t>(start + i)].label) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

void History::write_csv(const std::string &path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "epoch,train_loss,seg_accuracy\n";
  char buf[96];
  for (const EpochStats &e : epochs) {
    std::snprintf(buf, sizeof buf, "%lld,%.8f,%.6f\n",
                  static_cast<long long>(e.epoch), e.train_loss, e.seg_accuracy);
    os << buf;
  }
}

TrainResult train(Model &model, const data::FeatureSet &train_set,
                  const data::FeatureSet &test_set, const TrainConfig &config) {
  if (train_set.items.empty() || test_set.items.empty())
    throw std::invalid_argument("train: empty split");
  if (config.epochs < 1 || config.batch_size < 1)
    throw std::invalid_argument("train: epochs and batch size must be positive");

  const layers::NamedParams<float> params = model.trainables();
  const layers::NamedParams<float> state_tensors = model.state();
  AdamState adam = AdamState::init(params);
  std::mt19937 rng(config.seed);

  const int64_t train_size = static_cast<int64_t>(train_set.items.size());
  const int64_t batches_per_epoch =
      (train_size + config.batch_size - 1) / config.batch_size;

  TrainResult result;
  result.best_accuracy = -1.0;
  std::vector<Tensor<float>> best_params, best_state;

  for (int64_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (int64_t b = 0; b < batches_per_epoch; ++b) {
      const auto bc = augment::sample_bc_batch(train_set, config.batch_size, rng);
      auto [inputs, labels] = batch_from_bc(bc);

      ad::Tape<float> tape;
      layers::ParamBinding<float> binding(tape);
      ad::Node<float> *x = tape.constant(std::move(inputs));
      layers::ForwardOptions<float> opts;
      opts.training = true;
      opts.conv_dropout = static_cast<float>(config.conv_dropout);
      opts.rnn_dropout = static_cast<float>(config.rnn_dropout);
      opts.rng = &rng;
      ad::Node<float> *posterior = model.forward(binding, x, opts);
      ad::Node<float> *loss = ad::kl_loss_batch(labels, posterior);

      const double loss_value = loss->value.values[0];
      if (!std::isfinite(loss_value)) {
        std::ostringstream msg;
        msg << "training aborted: non-finite loss " << loss_value << " at epoch "
            << epoch << ", batch " << b;
        throw std::runtime_error(msg.str());
      }
      loss_sum += loss_value;

      tape.backward(loss);
      std::vector<Tensor<float>> grads;
      grads.reserve(params.size());
      for (const auto &[name, tensor] : params)
        grads.push_back(binding.grad_of(*tensor));
      adam_step(params, grads, adam, config.learning_rate);
    }

    const double acc = segment_accuracy(model, test_set);
    result.history.epochs.push_back(
        {epoch, loss_sum / static_cast<double>(batches_per_epoch), acc});

    if (acc > result.best_accuracy) {
      result.best_accuracy = acc;
      result.best_epoch = epoch;
      best_params.clear();
      best_state.clear();
      for (const auto &[name, tensor] : params) best_params.push_back(*tensor);
      for (const auto &[name, tensor] : state_tensors)
        best_state.push_back(*tensor);
    }
  }

  for (size_t i = 0; i < params.size(); ++i) *params[i].second = best_params[i];
  for (size_t i = 0; i < state_tensors.size(); ++i)
    *state_tensors[i].second = best_state[i];
  return result;
}

// ---- checkpoints ---------------------------------------------------------------

void save_model_bundle(const std::string &path, ModelBundle &bundle) {
  ConfigBlock config;
  config.emplace_back("kind", model_kind_name(bundle.model.kind));
  const ModelDims &d = bundle.model.dims;
  config.emplace_back("freq_bins", std::to_string(d.freq_bins));
  config.emplace_back("in_channels", std::to_string(d.in_channels));
  config.emplace_back("steps", std::to_string(d.steps));
  config.emplace_back("base_filters", std::to_string(d.base_filters));
  config.emplace_back("hidden", std::to_string(d.hidden));
  config.emplace_back("att_size", std::to_string(d.att_size));
  config.emplace_back("classes", std::to_string(d.classes));
  config.emplace_back("bn_momentum", format_double(layers::kBnMomentum));
  config.emplace_back("conv_dropout", format_double(layers::kConvDropout));
  config.emplace_back("rnn_dropout", format_double(layers::kRnnDropout));
  config.emplace_back("feature",
                      bundle.dsp.kind == dsp::FilterKind::kMel ? "logmel" : "loggam");
  config.emplace_back("frame_ms", format_double(bundle.dsp.frame_ms));
  config.emplace_back("overlap", format_double(bundle.dsp.overlap));
  config.emplace_back("fmin", format_double(bundle.dsp.fmin));
  config.emplace_back("fmax", format_double(bundle.dsp.fmax));
  config.emplace_back("seg_seconds", format_double(bundle.dsp.seg_seconds));
  config.emplace_back("sample_rate", std::to_string(bundle.sample_rate));
  std::string names;
  for (size_t i = 0; i < bundle.class_names.size(); ++i)
    names += (i ? "," : "") + bundle.class_names[i];
  config.emplace_back("class_names", names);

  NamedTensorRefs tensors;
  for (const auto &[name, tensor] : bundle.model.trainables())
    tensors.emplace_back(name, tensor);
  for (const auto &[name, tensor] : bundle.model.state())
    tensors.emplace_back(name, tensor);
  save_checkpoint(path, config, tensors);
}

ModelBundle load_model_bundle(const std::string &path) {
  const Checkpoint ckpt = load_checkpoint(path);
  ModelBundle bundle;
  ModelDims dims;
  dims.freq_bins = std::stoll(ckpt.get("freq_bins"));
  dims.in_channels = std::stoll(ckpt.get("in_channels"));
  dims.steps = std::stoll(ckpt.get("steps"));
  dims.base_filters = std::stoll(ckpt.get("base_filters"));
  dims.hidden = std::stoll(ckpt.get("hidden"));
  dims.att_size = std::stoll(ckpt.get("att_size"));
  dims.classes = std::stoll(ckpt.get("classes"));
  bundle.model = Model::init(model_kind_from_name(ckpt.get("kind")), dims, 0);

  bundle.dsp.kind = ckpt.get("feature") == "loggam" ? dsp::FilterKind::kGammatone
                                                    : dsp::FilterKind::kMel;
  bundle.dsp.bands = dims.freq_bins;
  bundle.dsp.frame_ms = std::stod(ckpt.get("frame_ms"));
  bundle.dsp.overlap = std::stod(ckpt.get("overlap"));
  bundle.dsp.fmin = std::stod(ckpt.get("fmin"));
  bundle.dsp.fmax = std::stod(ckpt.get("fmax"));
  bundle.dsp.seg_seconds = std::stod(ckpt.get("seg_seconds"));
  bundle.sample_rate = std::stoi(ckpt.get("sample_rate"));

  std::stringstream names(ckpt.get("class_names"));
  std::string item;
  while (std::getline(names, item, ',')) bundle.class_names.push_back(item);

  layers::NamedParams<float> all = bundle.model.trainables();
  for (auto &kv : bundle.model.state()) all.push_back(kv);
  for (auto &[name, tensor] : all) {
    bool found = false;
    for (const auto &[ckpt_name, value] : ckpt.tensors) {
      if (ckpt_name == name) {
        if (value.shape != tensor->shape)
          throw std::runtime_error("checkpoint tensor '" + name +
                                   "' has shape " + shape_str(value.shape) +
                                   ", expected " + shape_str(tensor->shape));
        *tensor = value;
        found = true;
        break;
      }
    }
    if (!found)
      throw std::runtime_error("checkpoint missing tensor '" + name + "'");
  }
  return bundle;
}

}  // namespace scenecrnn::train
