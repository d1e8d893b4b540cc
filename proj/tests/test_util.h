// scenecrnn/tests/test_util.h

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

#ifndef SCENECRNN_TESTS_TEST_UTIL_H_
#define SCENECRNN_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "scenecrnn/tensor.h"
#include "scenecrnn/wav.h"

namespace scenecrnn::testutil {

template <typename T>
Tensor<T> random_tensor(const Shape &shape, std::mt19937 &rng, double lo = -1.0,
                        double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor<T> t(shape);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(dist(rng));
  return t;
}

inline AudioClip sine_clip(double freq_hz, double seconds, int sample_rate,
                           double amplitude = 0.5) {
  AudioClip clip;
  clip.sample_rate = sample_rate;
  const int64_t n = static_cast<int64_t>(seconds * sample_rate);
  clip.samples.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    clip.samples[static_cast<size_t>(i)] = static_cast<float>(
        amplitude * std::sin(2.0 * std::numbers::pi * freq_hz *
                             static_cast<double>(i) / sample_rate));
  return clip;
}

inline AudioClip noise_clip(double seconds, int sample_rate, double stddev,
                            unsigned seed) {
  AudioClip clip;
  clip.sample_rate = sample_rate;
  const int64_t n = static_cast<int64_t>(seconds * sample_rate);
  clip.samples.resize(static_cast<size_t>(n));
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, stddev);
  for (auto &s : clip.samples) s = static_cast<float>(gauss(rng));
  return clip;
}

struct ParamCheckReport {
  double max_rel_err = 0.0;
  bool pass = false;
};

// Central finite differences against an already-computed analytic gradient of
// a persistent parameter tensor. loss() must rerun the (deterministic)
// forward pass reading the current contents of param.
inline ParamCheckReport check_param_gradient(
    Tensor<double> &param, const Tensor<double> &analytic,
    const std::function<double()> &loss, double step, double tol,
    int64_t max_coords, std::mt19937 &rng) {
  std::vector<int64_t> coords;
  if (max_coords < 0 || max_coords >= param.numel()) {
    coords.resize(static_cast<size_t>(param.numel()));
    for (size_t i = 0; i < coords.size(); ++i) coords[i] = static_cast<int64_t>(i);
  } else {
    std::uniform_int_distribution<int64_t> pick(0, param.numel() - 1);
    for (int64_t i = 0; i < max_coords; ++i) coords.push_back(pick(rng));
  }
  ParamCheckReport report;
  for (int64_t idx : coords) {
    const double saved = param[idx];
    param[idx] = saved + step;
    const double up = loss();
    param[idx] = saved - step;
    const double dn = loss();
    param[idx] = saved;
    const double fd = (up - dn) / (2.0 * step);
    const double adv = analytic[idx];
    const double denom = std::max({1e-5, std::abs(adv), std::abs(fd)});
    report.max_rel_err = std::max(report.max_rel_err, std::abs(adv - fd) / denom);
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

}  // namespace scenecrnn::testutil

#endif  // SCENECRNN_TESTS_TEST_UTIL_H_
