// scenecrnn/tests/train_test.cc

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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "scenecrnn/train.h"
#include "test_util.h"

using namespace scenecrnn;
using namespace scenecrnn::train;
using testutil::random_tensor;

namespace {

// Random feature set shaped like real inputs but tiny: M must stay 64 for the
// pooling chain, everything else is minimal.
data::FeatureSet tiny_features(int64_t classes, int64_t per_class, int64_t t,
                               unsigned seed) {
  data::FeatureSet set;
  set.classes = classes;
  set.image_shape = Shape{2, 64, t};
  std::mt19937 rng(seed);
  for (int64_t c = 0; c < classes; ++c) {
    set.class_names.push_back("class_" + std::to_string(c));
    for (int64_t i = 0; i < per_class; ++i) {
      data::FeatureItem item;
      item.image = random_tensor<float>(set.image_shape, rng, -1.0, 1.0);
      // Separable signal: shift one frequency block per class.
      for (int64_t m = c * 8; m < (c + 1) * 8; ++m)
        for (int64_t j = 0; j < t; ++j)
          item.image[(0 * 64 + m) * t + j] += 3.0f;
      item.label = static_cast<int>(c);
      item.recording = c * per_class + i;
      set.items.push_back(std::move(item));
    }
  }
  return set;
}

ModelDims tiny_dims(int64_t t, int64_t classes) {
  ModelDims dims;
  dims.freq_bins = 64;
  dims.in_channels = 2;
  dims.steps = t;
  dims.base_filters = 2;
  dims.hidden = 3;
  dims.att_size = 4;
  dims.classes = classes;
  return dims;
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("KL divergence of a distribution with itself is zero") {
  Tensor<float> y(Shape{3}, {0.2f, 0.5f, 0.3f});
  CHECK(kl_divergence(y, y) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("KL of one-hot vs uniform over two classes is log 2") {
  Tensor<float> y(Shape{2}, {1.0f, 0.0f});
  Tensor<float> q(Shape{2}, {0.5f, 0.5f});
  CHECK(kl_divergence(y, q) == doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("KL of (0.3, 0.7) vs uniform matches the hand evaluation") {
  Tensor<float> y(Shape{2}, {0.3f, 0.7f});
  Tensor<float> q(Shape{2}, {0.5f, 0.5f});
  // 0.3*log(0.6) + 0.7*log(1.4)
  CHECK(kl_divergence(y, q) == doctest::Approx(0.0822828).epsilon(1e-4));
}

TEST_CASE("KL equals cross-entropy minus entropy on random pairs") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Tensor<float> y(Shape{5}), q(Shape{5});
    double sy = 0.0, sq = 0.0;
    for (int64_t i = 0; i < 5; ++i) {
      y[i] = static_cast<float>(unit(rng));
      q[i] = static_cast<float>(unit(rng));
      sy += y[i];
      sq += q[i];
    }
    for (int64_t i = 0; i < 5; ++i) {
      y[i] = static_cast<float>(y[i] / sy);
      q[i] = static_cast<float>(q[i] / sq);
    }
    const double kl = kl_divergence(y, q);
    CHECK(kl >= -1e-12);
    CHECK(kl == doctest::Approx(cross_entropy(y, q) - entropy(y)).epsilon(1e-6));
  }
}

TEST_CASE("adam leaves parameters unchanged under zero gradients") {
  Tensor<float> w(Shape{4}, {1.0f, -2.0f, 3.0f, 0.5f});
  const Tensor<float> before = w;
  layers::NamedParams<float> params{{"w", &w}};
  AdamState state = AdamState::init(params);
  adam_step(params, {Tensor<float>(Shape{4})}, state, 1e-3);
  CHECK(w.values == before.values);
}

TEST_CASE("the first adam step moves by -lr * g / (|g| + eps)") {
  Tensor<float> w(Shape{3}, {1.0f, 1.0f, 1.0f});
  Tensor<float> g(Shape{3}, {0.5f, -2.0f, 1e-3f});
  layers::NamedParams<float> params{{"w", &w}};
  AdamState state = AdamState::init(params);
  adam_step(params, {g}, state, 1e-2);
  for (int64_t i = 0; i < 3; ++i) {
    const double expect =
        1.0 - 1e-2 * g[i] / (std::abs(static_cast<double>(g[i])) + 1e-8);
    CHECK(w[i] == doctest::Approx(expect).epsilon(1e-5));
  }
}

TEST_CASE("under a constant gradient the update magnitude approaches lr") {
  Tensor<float> w(Shape{1}, {10.0f});
  Tensor<float> g(Shape{1}, {0.37f});
  layers::NamedParams<float> params{{"w", &w}};
  AdamState state = AdamState::init(params);
  const double lr = 1e-3;
  float prev = w[0];
  double last_delta = 0.0;
  for (int step = 0; step < 500; ++step) {
    adam_step(params, {g}, state, lr);
    last_delta = static_cast<double>(prev) - static_cast<double>(w[0]);
    prev = w[0];
  }
  CHECK(last_delta == doctest::Approx(lr).epsilon(0.05));
}

TEST_CASE("training loss decreases over the first ten steps") {
  for (unsigned seed : {1u, 2u, 3u}) {
    const data::FeatureSet set = tiny_features(2, 4, 4, seed);
    Model model = Model::init(ModelKind::kAttCrnn, tiny_dims(4, 2), seed);
    const layers::NamedParams<float> params = model.trainables();
    AdamState adam = AdamState::init(params);
    std::mt19937 rng(seed);
    const auto bc = augment::sample_bc_batch(set, 8, rng);
    auto [inputs, labels] = batch_from_bc(bc);

    double first = 0.0, last = 0.0;
    for (int step = 0; step < 10; ++step) {
      ad::Tape<float> tape;
      layers::ParamBinding<float> binding(tape);
      ad::Node<float> *x = tape.constant(inputs);
      layers::ForwardOptions<float> opts;
      opts.training = true;
      opts.conv_dropout = 0.0f;
      opts.rnn_dropout = 0.0f;
      ad::Node<float> *posterior = model.forward(binding, x, opts);
      ad::Node<float> *loss = ad::kl_loss_batch(labels, posterior);
      if (step == 0) first = loss->value.values[0];
      last = loss->value.values[0];
      tape.backward(loss);
      std::vector<Tensor<float>> grads;
      for (const auto &[name, tensor] : params)
        grads.push_back(binding.grad_of(*tensor));
      adam_step(params, grads, adam, 1e-4);
    }
    INFO("seed ", seed, " first=", first, " last=", last);
    CHECK(last < first);
  }
}

TEST_CASE("train() runs, tracks history, and is deterministic per seed") {
  const data::FeatureSet train_set = tiny_features(2, 6, 4, 21);
  const data::FeatureSet test_set = tiny_features(2, 2, 4, 22);

  TrainConfig config;
  config.epochs = 2;
  config.batch_size = 4;
  config.learning_rate = 1e-3;
  config.seed = 7;

  Model m1 = Model::init(ModelKind::kAttCrnn, tiny_dims(4, 2), config.seed);
  const TrainResult r1 = train::train(m1, train_set, test_set, config);
  Model m2 = Model::init(ModelKind::kAttCrnn, tiny_dims(4, 2), config.seed);
  const TrainResult r2 = train::train(m2, train_set, test_set, config);

  REQUIRE(r1.history.epochs.size() == 2);
  CHECK(r1.best_epoch >= 1);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(r1.history.epochs[i].train_loss == r2.history.epochs[i].train_loss);
    CHECK(r1.history.epochs[i].seg_accuracy == r2.history.epochs[i].seg_accuracy);
  }

  const auto tmp = std::filesystem::temp_directory_path();
  const std::string p1 = (tmp / "scenecrnn_hist1.csv").string();
  const std::string p2 = (tmp / "scenecrnn_hist2.csv").string();
  r1.history.write_csv(p1);
  r2.history.write_csv(p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  const std::string c1((std::istreambuf_iterator<char>(f1)), {});
  const std::string c2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(c1 == c2);
  CHECK(c1.rfind("epoch,train_loss,seg_accuracy\n", 0) == 0);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("cnn baseline also trains through the shared loop") {
  const data::FeatureSet train_set = tiny_features(2, 4, 4, 31);
  const data::FeatureSet test_set = tiny_features(2, 2, 4, 32);
  TrainConfig config;
  config.epochs = 1;
  config.batch_size = 4;
  config.seed = 3;
  Model model = Model::init(ModelKind::kCnnBaseline, tiny_dims(4, 2), 3);
  const TrainResult result = train::train(model, train_set, test_set, config);
  CHECK(result.history.epochs.size() == 1);
  CHECK(std::isfinite(result.history.epochs[0].train_loss));
}

TEST_CASE("model bundles round-trip through checkpoint files") {
  Model model = Model::init(ModelKind::kAttCrnn, tiny_dims(5, 3), 17);
  ModelBundle bundle;
  bundle.model = model;
  bundle.dsp.kind = dsp::FilterKind::kGammatone;
  bundle.dsp.frame_ms = 50.0;
  bundle.sample_rate = 22050;
  bundle.class_names = {"alpha", "beta", "gamma"};

  const std::string path =
      (std::filesystem::temp_directory_path() / "scenecrnn_ckpt_test.ckpt").string();
  save_model_bundle(path, bundle);
  ModelBundle loaded = load_model_bundle(path);

  CHECK(loaded.model.kind == ModelKind::kAttCrnn);
  CHECK(loaded.model.dims.steps == 5);
  CHECK(loaded.model.dims.classes == 3);
  CHECK(loaded.dsp.kind == dsp::FilterKind::kGammatone);
  CHECK(loaded.class_names == bundle.class_names);

  auto a = bundle.model.trainables();
  auto b = loaded.model.trainables();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second->values == b[i].second->values);
  }

  // Same inputs, same outputs after the round trip.
  std::mt19937 rng(5);
  const Tensor<float> batch = random_tensor<float>({2, 2, 64, 5}, rng);
  CHECK(bundle.model.predict_posteriors(batch).values ==
        loaded.model.predict_posteriors(batch).values);
  std::filesystem::remove(path);
}

TEST_CASE("non-finite losses abort with a diagnostic") {
  data::FeatureSet set = tiny_features(2, 4, 4, 41);
  TrainConfig config;
  config.epochs = 1;
  config.batch_size = 4;
  Model model = Model::init(ModelKind::kAttCrnn, tiny_dims(4, 2), 1);
  // Poison the classifier bias so the posterior (and loss) turn NaN.
  model.att->out.b[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_WITH_AS(train::train(model, set, set, config),
                       doctest::Contains("non-finite loss"),
                       std::runtime_error);
}

}  // TEST_SUITE
