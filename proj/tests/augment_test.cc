// scenecrnn/tests/augment_test.cc

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
#include <map>
#include <random>

#include "doctest.h"
#include "scenecrnn/augment.h"
#include "test_util.h"

using namespace scenecrnn;
using namespace scenecrnn::augment;
using testutil::random_tensor;

namespace {

// Tiny in-memory feature set: `classes` classes, `per_class` items each.
data::FeatureSet tiny_set(int64_t classes, int64_t per_class, unsigned seed) {
  data::FeatureSet set;
  set.classes = classes;
  set.image_shape = Shape{1, 2, 3};
  std::mt19937 rng(seed);
  for (int64_t c = 0; c < classes; ++c) {
    set.class_names.push_back("class_" + std::to_string(c));
    for (int64_t i = 0; i < per_class; ++i) {
      data::FeatureItem item;
      item.image = random_tensor<float>(set.image_shape, rng);
      item.label = static_cast<int>(c);
      item.recording = c * per_class + i;
      set.items.push_back(std::move(item));
    }
  }
  return set;
}

}  // namespace

TEST_SUITE("augment") {

TEST_CASE("mixing restaurant and tubestation at r = 0.3 labels {0.3, 0.7}") {
  std::mt19937 rng(1);
  const Tensor<float> restaurant = random_tensor<float>({2, 3}, rng);
  const Tensor<float> tubestation = random_tensor<float>({2, 3}, rng);
  const BetweenClassSample mixed =
      mix_between_class(restaurant, one_hot(0, 2), tubestation, one_hot(1, 2), 0.3);
  CHECK(mixed.label[0] == 0.3f);
  CHECK(mixed.label[1] == 0.7f);
}

TEST_CASE("r = 1 returns the first sample exactly") {
  std::mt19937 rng(2);
  const Tensor<float> s1 = random_tensor<float>({2, 4}, rng);
  const Tensor<float> s2 = random_tensor<float>({2, 4}, rng);
  const BetweenClassSample mixed =
      mix_between_class(s1, one_hot(0, 3), s2, one_hot(2, 3), 1.0);
  CHECK(mixed.image.values == s1.values);
  CHECK(mixed.label.values == one_hot(0, 3).values);
}

TEST_CASE("r = 0.5 with equal images gives sqrt(2) times the image") {
  std::mt19937 rng(3);
  const Tensor<float> s = random_tensor<float>({3, 3}, rng);
  const BetweenClassSample mixed =
      mix_between_class(s, one_hot(0, 2), s, one_hot(1, 2), 0.5);
  for (int64_t i = 0; i < s.numel(); ++i)
    CHECK(mixed.image[i] ==
          doctest::Approx(std::sqrt(2.0) * s[i]).epsilon(1e-6));
  CHECK(mixed.label[0] == doctest::Approx(0.5f));
  CHECK(mixed.label[1] == doctest::Approx(0.5f));
}

TEST_CASE("same-class pairs and shape mismatches are rejected") {
  std::mt19937 rng(4);
  const Tensor<float> s1 = random_tensor<float>({2, 2}, rng);
  const Tensor<float> s2 = random_tensor<float>({2, 2}, rng);
  CHECK_THROWS_AS(mix_between_class(s1, one_hot(1, 3), s2, one_hot(1, 3), 0.4),
                  std::invalid_argument);
  CHECK_THROWS_AS(mix_between_class(s1, one_hot(0, 3),
                                    random_tensor<float>({2, 3}, rng),
                                    one_hot(1, 3), 0.4),
                  std::invalid_argument);
  CHECK_THROWS_AS(mix_between_class(s1, one_hot(0, 3), s2, one_hot(1, 3), 1.2),
                  std::invalid_argument);
}

TEST_CASE("mixing is exactly symmetric under (S1,S2,r) -> (S2,S1,1-r)") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> grid(0, 4096);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor<float> s1 = random_tensor<float>({2, 5}, rng);
    const Tensor<float> s2 = random_tensor<float>({2, 5}, rng);
    // r on the 1/4096 grid so 1-(1-r) reproduces r without rounding.
    const double r = grid(rng) / 4096.0;
    const BetweenClassSample a =
        mix_between_class(s1, one_hot(0, 2), s2, one_hot(1, 2), r);
    const BetweenClassSample b =
        mix_between_class(s2, one_hot(1, 2), s1, one_hot(0, 2), 1.0 - r);
    CHECK(a.image.values == b.image.values);
    CHECK(a.label.values == b.label.values);
  }
}

TEST_CASE("the energy normalizer stays within [1/sqrt(2), 1]") {
  const Tensor<float> ones(Shape{4}, 1.0f);
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double r = unit(rng);
    const BetweenClassSample mixed =
        mix_between_class(ones, one_hot(0, 2), ones, one_hot(1, 2), r);
    // With equal unit images the mix equals 1/denominator elementwise.
    for (int64_t i = 0; i < 4; ++i) {
      CHECK(mixed.image[i] >= 1.0f - 1e-6f);
      CHECK(mixed.image[i] <= static_cast<float>(std::sqrt(2.0)) + 1e-6f);
    }
  }
}

TEST_CASE("BC labels are valid distributions with two nonzero entries") {
  std::mt19937 rng(7);
  const data::FeatureSet set = tiny_set(4, 3, 8);
  const auto batch = sample_bc_batch(set, 64, rng);
  for (const auto &s : batch) {
    double sum = 0.0;
    int nonzero = 0;
    for (int64_t c = 0; c < s.label.numel(); ++c) {
      CHECK(s.label[c] >= 0.0f);
      sum += s.label[c];
      nonzero += s.label[c] > 0.0f ? 1 : 0;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(nonzero <= 2);
    CHECK(nonzero >= 1);  // r in {0,1} collapses to one entry
    CHECK(set.items[static_cast<size_t>(s.source_a)].label !=
          set.items[static_cast<size_t>(s.source_b)].label);
  }
}

TEST_CASE("a fixed seed reproduces the batch exactly") {
  const data::FeatureSet set = tiny_set(3, 4, 9);
  std::mt19937 rng1(123), rng2(123);
  const auto a = sample_bc_batch(set, 32, rng1);
  const auto b = sample_bc_batch(set, 32, rng2);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].r == b[i].r);
    CHECK(a[i].source_a == b[i].source_a);
    CHECK(a[i].source_b == b[i].source_b);
    CHECK(a[i].image.values == b[i].image.values);
  }
}

TEST_CASE("the mixing factor has mean 1/2 over many draws") {
  const data::FeatureSet set = tiny_set(2, 2, 10);
  std::mt19937 rng(321);
  double mean_r = 0.0;
  constexpr int kDraws = 10000;
  const auto batch = sample_bc_batch(set, kDraws, rng);
  for (const auto &s : batch) mean_r += s.r;
  mean_r /= kDraws;
  CHECK(std::abs(mean_r - 0.5) < 0.02);
}

TEST_CASE("class pairs are drawn approximately uniformly") {
  const data::FeatureSet set = tiny_set(4, 5, 11);
  std::mt19937 rng(7777);
  constexpr int kDraws = 10000;
  const auto batch = sample_bc_batch(set, kDraws, rng);
  std::map<std::pair<int, int>, int> counts;
  for (const auto &s : batch) {
    const int a = set.items[static_cast<size_t>(s.source_a)].label;
    const int b = set.items[static_cast<size_t>(s.source_b)].label;
    counts[{a, b}] += 1;
  }
  CHECK(counts.size() == 12);  // all ordered pairs of distinct classes
  const double expected = kDraws / 12.0;
  double chi2 = 0.0;
  for (const auto &[pair, count] : counts) {
    const double d = count - expected;
    chi2 += d * d / expected;
  }
  // 11 degrees of freedom; 35 is far beyond the 99.9th percentile only under
  // gross non-uniformity.
  CHECK(chi2 < 35.0);
}

TEST_CASE("single-class sets are rejected") {
  const data::FeatureSet set = tiny_set(1, 5, 12);
  std::mt19937 rng(1);
  CHECK_THROWS_AS(sample_bc_batch(set, 4, rng), std::invalid_argument);
}

}  // TEST_SUITE
