// scenecrnn/include/scenecrnn/data.h

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

#ifndef SCENECRNN_DATA_H_
#define SCENECRNN_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "scenecrnn/dsp.h"
#include "scenecrnn/tensor.h"
#include "scenecrnn/wav.h"

namespace scenecrnn::data {

// ---- manifest-level dataset --------------------------------------------------

struct DatasetItem {
  std::string id;
  std::string path;  // relative paths resolve against the manifest directory
  int label = 0;
  bool is_test = false;
};

struct Dataset {
  std::vector<std::string> class_names;  // sorted; label = index
  std::vector<DatasetItem> items;
};

// CSV manifest with header "id,path,class,split"; split is train or test.
// Validates per row (file exists, split valid, no duplicate ids) and that
// every class appears in both splits. When expected_classes is non-empty a
// class outside it is an error (used when evaluating against a trained
// model's label set).
Dataset load_manifest(const std::string &path,
                      const std::vector<std::string> &expected_classes = {});

void write_manifest(const std::string &path, const Dataset &dataset);

// ---- synthetic scenes ---------------------------------------------------------

// Per-class recipe: a colored-noise bed plus amplitude-modulated narrowband
// tones plus Poisson-timed transient bursts.
struct SynthSceneSpec {
  std::string name;
  std::vector<double> tone_hz;
  std::vector<double> mod_rate_hz;   // one per tone
  double noise_exponent = 1.0;       // noise power ~ f^-exponent
  double noise_level = 0.05;
  double tone_level = 0.1;
  double transient_rate = 1.0;       // events per second
  double transient_level = 0.3;
};

// Built-in palette of distinguishable recipes.
std::vector<SynthSceneSpec> default_scene_specs(int64_t classes);

// One deterministic scene recording (seed fully determines the samples).
AudioClip synth_scene_clip(const SynthSceneSpec &spec, double seconds,
                           int sample_rate, uint64_t seed);

struct GeneratedRecording {
  std::string id;
  int label = 0;
  bool is_test = false;
  AudioClip clip;
};

// per_class recordings per recipe, the last test_per_class of each class
// assigned to the test split (stratified by construction).
std::vector<GeneratedRecording> generate_synth_dataset(
    const std::vector<SynthSceneSpec> &specs, int64_t per_class,
    int64_t test_per_class, int sample_rate, double seconds, uint64_t seed);

// ---- materialized features ----------------------------------------------------

struct FeatureItem {
  Tensor<float> image;  // {K, M, T}
  int label = 0;
  int64_t recording = 0;  // index into recording_labels
};

struct FeatureSet {
  Shape image_shape;  // {K, M, T}
  int64_t classes = 0;
  std::vector<std::string> class_names;
  std::vector<FeatureItem> items;
  std::vector<int> recording_labels;
};

// Segments every recording and computes its two-channel images, with the
// noise floor estimated per recording. cache_dir (optional) stores one
// ".stfi" file per segment keyed by a hash of the decoded samples and the
// DSP configuration, so features are recomputed only when audio or
// parameters change. Audio must match expected_sample_rate.
std::pair<FeatureSet, FeatureSet> load_features(
    const Dataset &dataset, const std::string &manifest_dir,
    const dsp::DspConfig &config, int expected_sample_rate,
    const std::string &cache_dir = "");

// Same, over in-memory recordings (tests and the synthetic benchmark).
std::pair<FeatureSet, FeatureSet> features_from_recordings(
    const std::vector<GeneratedRecording> &recordings,
    const std::vector<std::string> &class_names, const dsp::DspConfig &config);

}  // namespace scenecrnn::data

#endif  // SCENECRNN_DATA_H_
