// scenecrnn/tests/calibrate_test.cc

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
#include <random>

#include "doctest.h"
#include "scenecrnn/calibrate.h"
#include "test_util.h"

using namespace scenecrnn;
using namespace scenecrnn::calibrate;
using testutil::random_tensor;

namespace {

// Two well-separated 2-D blobs.
LabeledFeatures blobs(int64_t per_class, double gap, unsigned seed) {
  LabeledFeatures f;
  f.classes = 2;
  f.x = Tensor<float>(Shape{2 * per_class, 2});
  std::mt19937 rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.3);
  for (int64_t i = 0; i < 2 * per_class; ++i) {
    const int label = i < per_class ? 0 : 1;
    const double cx = label == 0 ? -gap : gap;
    f.x[i * 2] = static_cast<float>(cx + jitter(rng));
    f.x[i * 2 + 1] = static_cast<float>(jitter(rng));
    f.labels.push_back(label);
  }
  return f;
}

int predicted_label(const SvmModel &model, const float *x) {
  const Tensor<double> p = svm_predict_proba(model, x, model.dim);
  int best = 0;
  for (int64_t c = 1; c < p.numel(); ++c)
    if (p[c] > p[best]) best = static_cast<int>(c);
  return best;
}

}  // namespace

TEST_SUITE("calibrate") {

TEST_CASE("a separable two-class toy problem reaches 100% training accuracy") {
  const LabeledFeatures f = blobs(10, 2.0, 1);
  const SvmModel model = train_svm(f, kDefaultTradeoff);
  for (int64_t i = 0; i < f.x.shape[0]; ++i)
    CHECK(predicted_label(model, f.x.data() + i * 2) ==
          f.labels[static_cast<size_t>(i)]);
}

TEST_CASE("jointly rescaling features and refitting keeps the labels") {
  const LabeledFeatures f = blobs(12, 2.0, 2);
  LabeledFeatures scaled = f;
  for (int64_t i = 0; i < scaled.x.numel(); ++i) scaled.x[i] *= 2.0f;
  const SvmModel a = train_svm(f, kDefaultTradeoff);
  const SvmModel b = train_svm(scaled, kDefaultTradeoff);
  for (int64_t i = 0; i < f.x.shape[0]; ++i) {
    const float *orig = f.x.data() + i * 2;
    const float doubled[2] = {orig[0] * 2.0f, orig[1] * 2.0f};
    CHECK(predicted_label(a, orig) == predicted_label(b, doubled));
  }
}

TEST_CASE("platt calibration is in (0,1), monotone, and oriented (a < 0)") {
  std::mt19937 rng(3);
  std::normal_distribution<double> jitter(0.0, 0.4);
  std::vector<double> scores;
  std::vector<int> positive;
  for (int i = 0; i < 40; ++i) {
    const bool pos = i % 2 == 0;
    scores.push_back((pos ? 1.5 : -1.5) + jitter(rng));
    positive.push_back(pos ? 1 : 0);
  }
  double a = 0.0, b = 0.0;
  platt_fit(scores, positive, a, b);
  CHECK(a < 0.0);  // probability increases with the decision score

  auto prob = [&](double s) { return 1.0 / (1.0 + std::exp(a * s + b)); };
  double prev = 0.0;
  for (double s = -4.0; s <= 4.0; s += 0.5) {
    const double p = prob(s);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("svm_predict_proba basics") {
  SvmModel model;
  model.classes = 2;
  model.dim = 2;
  model.weights = Tensor<double>(Shape{2, 2}, {1.0, 0.0, -1.0, 0.0});
  model.bias = Tensor<double>(Shape{2});
  model.platt_a = Tensor<double>(Shape{2}, {-2.0, -2.0});
  model.platt_b = Tensor<double>(Shape{2});

  SUBCASE("a point on the boundary of a symmetric model splits 50/50") {
    const float x[2] = {0.0f, 0.7f};
    const Tensor<double> p = svm_predict_proba(model, x, 2);
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("a point deep inside a class region wins the argmax") {
    const float x[2] = {3.5f, 0.0f};
    const Tensor<double> p = svm_predict_proba(model, x, 2);
    CHECK(p[0] > 0.9);
  }
  SUBCASE("probabilities normalize for random inputs") {
    std::mt19937 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      const Tensor<float> x = random_tensor<float>({2}, rng, -5.0, 5.0);
      const Tensor<double> p = svm_predict_proba(model, x.data(), 2);
      double sum = 0.0;
      for (int64_t c = 0; c < 2; ++c) {
        CHECK(p[c] >= 0.0);
        sum += p[c];
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("the averaged subgradient objective is non-increasing") {
  const LabeledFeatures f = blobs(15, 1.5, 5);
  std::vector<double> trace;
  train_svm(f, kDefaultTradeoff, &trace);
  REQUIRE(trace.size() == static_cast<size_t>(kSvmEpochs));
  for (size_t t = 1; t < trace.size(); ++t)
    CHECK(trace[t] <= trace[t - 1] + 1e-9);
}

TEST_CASE("degenerate class counts are rejected") {
  LabeledFeatures f;
  f.classes = 2;
  f.x = Tensor<float>(Shape{3, 2}, 0.5f);
  f.labels = {0, 0, 1};  // class 1 has a single sample
  CHECK_THROWS_AS(train_svm(f, 0.1), std::invalid_argument);
}

TEST_CASE("extract_features is deterministic with the right width") {
  train::ModelDims dims;
  dims.freq_bins = 64;
  dims.in_channels = 2;
  dims.steps = 4;
  dims.base_filters = 2;
  dims.hidden = 3;
  dims.att_size = 4;
  dims.classes = 2;
  train::Model model = train::Model::init(train::ModelKind::kAttCrnn, dims, 9);

  data::FeatureSet set;
  set.classes = 2;
  set.class_names = {"a", "b"};
  set.image_shape = Shape{2, 64, 4};
  std::mt19937 rng(10);
  for (int i = 0; i < 6; ++i) {
    data::FeatureItem item;
    item.image = random_tensor<float>(set.image_shape, rng);
    item.label = i % 2;
    item.recording = i;
    set.items.push_back(std::move(item));
  }

  const LabeledFeatures f1 = extract_features(model, set);
  const LabeledFeatures f2 = extract_features(model, set);
  CHECK(f1.x.shape == Shape{6, 6});  // 2H = 6
  CHECK(f1.x.values == f2.x.values);
  CHECK(f1.labels == std::vector<int>{0, 1, 0, 1, 0, 1});
}

TEST_CASE("svm models round-trip through the tensor container") {
  const LabeledFeatures f = blobs(8, 2.0, 6);
  const SvmModel model = train_svm(f, 0.1);
  const std::string path =
      (std::filesystem::temp_directory_path() / "scenecrnn_svm_test.svm").string();
  save_svm(path, model);
  const SvmModel loaded = load_svm(path);
  CHECK(loaded.classes == model.classes);
  CHECK(loaded.dim == model.dim);
  for (int64_t c = 0; c < model.classes; ++c) {
    CHECK(loaded.bias[c] == doctest::Approx(model.bias[c]).epsilon(1e-6));
    CHECK(loaded.platt_a[c] == doctest::Approx(model.platt_a[c]).epsilon(1e-6));
    for (int64_t j = 0; j < model.dim; ++j)
      CHECK(loaded.weights[c * model.dim + j] ==
            doctest::Approx(model.weights[c * model.dim + j]).epsilon(1e-6));
  }
  std::filesystem::remove(path);
}

}  // TEST_SUITE
