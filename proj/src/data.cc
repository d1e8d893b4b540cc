// scenecrnn/src/data.cc

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

#include "scenecrnn/data.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "scenecrnn/fft.h"

namespace scenecrnn::data {

namespace fs = std::filesystem;

// ---- manifest -----------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

[[noreturn]] void row_error(int64_t row, const std::string &id,
                            const std::string &what) {
  throw std::runtime_error("manifest row " + std::to_string(row) +
                           (id.empty() ? "" : " (id=" + id + ")") + ": " + what);
}

}  // namespace

Dataset load_manifest(const std::string &path,
                      const std::vector<std::string> &expected_classes) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("manifest not found: " + path);
  const std::string base_dir = fs::path(path).parent_path().string();

  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("manifest is empty: " + path);
  if (split_csv_line(line) != std::vector<std::string>{"id", "path", "class", "split"})
    throw std::runtime_error("manifest header must be 'id,path,class,split': " + path);

  struct Row {
    std::string id, file, cls;
    bool is_test;
  };
  std::vector<Row> rows;
  std::set<std::string> ids, classes;
  int64_t row_no = 1;
  while (std::getline(is, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) row_error(row_no, "", "expected 4 fields, got " +
                                                     std::to_string(fields.size()));
    const auto &[id, file, cls, split] = std::tie(fields[0], fields[1], fields[2], fields[3]);
    if (!ids.insert(id).second) row_error(row_no, id, "duplicate recording id");
    if (split != "train" && split != "test")
      row_error(row_no, id, "split must be 'train' or 'test', got '" + split + "'");
    if (cls.empty() || cls.find(',') != std::string::npos)
      row_error(row_no, id, "invalid class name '" + cls + "'");
    if (!expected_classes.empty() &&
        std::find(expected_classes.begin(), expected_classes.end(), cls) ==
            expected_classes.end())
      row_error(row_no, id, "unknown class '" + cls + "'");
    const fs::path resolved = fs::path(file).is_absolute()
                                  ? fs::path(file)
                                  : fs::path(base_dir) / file;
    if (!fs::exists(resolved))
      row_error(row_no, id, "file not found: " + resolved.string());
    classes.insert(cls);
    rows.push_back({id, file, cls, split == "test"});
  }
  if (rows.empty()) throw std::runtime_error("manifest has no data rows: " + path);

  Dataset ds;
  ds.class_names = expected_classes.empty()
                       ? std::vector<std::string>(classes.begin(), classes.end())
                       : expected_classes;
  std::map<std::string, int> label_of;
  for (size_t i = 0; i < ds.class_names.size(); ++i)
    label_of[ds.class_names[i]] = static_cast<int>(i);

  std::map<int, std::pair<bool, bool>> seen_split;  // label -> (train, test)
  for (const Row &r : rows) {
    DatasetItem item;
    item.id = r.id;
    item.path = r.file;
    item.label = label_of.at(r.cls);
    item.is_test = r.is_test;
    auto &flags = seen_split[item.label];
    (r.is_test ? flags.second : flags.first) = true;
    ds.items.push_back(std::move(item));
  }
  for (const auto &[label, flags] : seen_split)
    if (!flags.first || !flags.second)
      throw std::runtime_error("manifest: class '" + ds.class_names[static_cast<size_t>(label)] +
                               "' missing from the " +
                               (flags.first ? "test" : "train") + " split");
  return ds;
}

void write_manifest(const std::string &path, const Dataset &dataset) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "id,path,class,split\n";
  for (const DatasetItem &item : dataset.items)
    os << item.id << "," << item.path << ","
       << dataset.class_names[static_cast<size_t>(item.label)] << ","
       << (item.is_test ? "test" : "train") << "\n";
}

// ---- synthetic scenes -----------------------------------------------------------

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Noise bed with power spectral density ~ f^-exponent, via spectral shaping.
std::vector<double> colored_noise(int64_t n, double exponent, double level,
                                  std::mt19937_64 &rng) {
  const int64_t m = next_pow2(n);
  std::vector<std::complex<double>> spec(static_cast<size_t>(m), {0.0, 0.0});
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int64_t k = 1; k <= m / 2; ++k) {
    const double mag = std::pow(static_cast<double>(k), -exponent / 2.0);
    const std::complex<double> v(gauss(rng) * mag, gauss(rng) * mag);
    spec[static_cast<size_t>(k)] = v;
    if (k != m / 2) spec[static_cast<size_t>(m - k)] = std::conj(v);
  }
  fft_inplace(spec, /*inverse=*/true);
  std::vector<double> out(static_cast<size_t>(n));
  double rms = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    out[static_cast<size_t>(i)] = spec[static_cast<size_t>(i)].real();
    rms += out[static_cast<size_t>(i)] * out[static_cast<size_t>(i)];
  }
  rms = std::sqrt(rms / static_cast<double>(n));
  if (rms > 0.0)
    for (double &v : out) v *= level / rms;
  return out;
}

}  // namespace

std::vector<SynthSceneSpec> default_scene_specs(int64_t classes) {
  if (classes < 2)
    throw std::invalid_argument("synthetic dataset needs at least two classes");
  std::vector<SynthSceneSpec> specs;
  const double exponents[4] = {2.0, 1.0, 0.5, 1.5};
  for (int64_t i = 0; i < classes; ++i) {
    SynthSceneSpec s;
    s.name = "scene_" + std::string(1, static_cast<char>('a' + i % 26)) +
             (i >= 26 ? std::to_string(i / 26) : "");
    // Geometric spread of tone centers across the band.
    const double f0 =
        classes == 1 ? 1000.0
                     : 220.0 * std::pow(6000.0 / 220.0,
                                        static_cast<double>(i) /
                                            static_cast<double>(classes - 1));
    s.tone_hz = {f0, 1.5 * f0};
    s.mod_rate_hz = {2.0 + static_cast<double>(i),
                     3.0 + 1.5 * static_cast<double>(i)};
    s.noise_exponent = exponents[i % 4];
    s.noise_level = 0.05;
    s.tone_level = 0.12;
    s.transient_rate = 0.5 + 0.75 * static_cast<double>(i);
    s.transient_level = 0.25;
    specs.push_back(std::move(s));
  }
  return specs;
}

AudioClip synth_scene_clip(const SynthSceneSpec &spec, double seconds,
                           int sample_rate, uint64_t seed) {
  const int64_t n = static_cast<int64_t>(seconds * sample_rate);
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> mix =
      colored_noise(n, spec.noise_exponent, spec.noise_level, rng);

  const double dt = 1.0 / sample_rate;
  for (size_t j = 0; j < spec.tone_hz.size(); ++j) {
    const double f = spec.tone_hz[j];
    const double mod = j < spec.mod_rate_hz.size() ? spec.mod_rate_hz[j] : 2.0;
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    const double mod_phase = 2.0 * std::numbers::pi * unit(rng);
    const double amp =
        spec.tone_level / std::sqrt(static_cast<double>(spec.tone_hz.size()));
    for (int64_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * dt;
      mix[static_cast<size_t>(i)] +=
          amp * std::sin(2.0 * std::numbers::pi * f * t + phase) *
          (0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * mod * t + mod_phase));
    }
  }

  std::poisson_distribution<int> event_count(spec.transient_rate * seconds);
  const int events = event_count(rng);
  for (int e = 0; e < events; ++e) {
    const double t0 = unit(rng) * (seconds - 0.2);
    const double freq = 1000.0 + 7000.0 * unit(rng);
    const double amp = spec.transient_level * (0.5 + 0.5 * unit(rng));
    const int64_t start = static_cast<int64_t>(t0 * sample_rate);
    const int64_t len = static_cast<int64_t>(0.15 * sample_rate);
    constexpr double kDecay = 0.03;  // seconds
    for (int64_t i = 0; i < len && start + i < n; ++i) {
      const double t = static_cast<double>(i) * dt;
      mix[static_cast<size_t>(start + i)] +=
          amp * std::exp(-t / kDecay) *
          std::sin(2.0 * std::numbers::pi * freq * t);
    }
  }

  double peak = 0.0;
  for (double v : mix) peak = std::max(peak, std::abs(v));
  const double scale = peak > 0.9 ? 0.9 / peak : 1.0;

  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    clip.samples[static_cast<size_t>(i)] =
        static_cast<float>(mix[static_cast<size_t>(i)] * scale);
  return clip;
}

std::vector<GeneratedRecording> generate_synth_dataset(
    const std::vector<SynthSceneSpec> &specs, int64_t per_class,
    int64_t test_per_class, int sample_rate, double seconds, uint64_t seed) {
  if (specs.size() < 2)
    throw std::invalid_argument("synthetic dataset needs at least two classes");
  if (per_class < 2 || test_per_class < 1 || test_per_class >= per_class)
    throw std::invalid_argument(
        "synthetic dataset: need per_class >= 2 and 1 <= test_per_class < per_class");
  std::vector<GeneratedRecording> out;
  for (size_t c = 0; c < specs.size(); ++c) {
    for (int64_t i = 0; i < per_class; ++i) {
      GeneratedRecording rec;
      rec.id = specs[c].name + "_" + std::to_string(i);
      rec.label = static_cast<int>(c);
      rec.is_test = i >= per_class - test_per_class;
      const uint64_t item_seed =
          splitmix64(seed) ^ splitmix64(static_cast<uint64_t>(c) * 1000003ULL +
                                        static_cast<uint64_t>(i) + 1);
      rec.clip = synth_scene_clip(specs[c], seconds, sample_rate, item_seed);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

// ---- materialized features -------------------------------------------------------

namespace {

uint64_t fnv1a(const void *data, size_t bytes, uint64_t h = 1469598103934665603ULL) {
  const auto *p = static_cast<const unsigned char *>(data);
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct SetBuilder {
  FeatureSet set;

  void add_recording(const std::vector<dsp::SpectroImage> &images, int label) {
    const int64_t rec_index = static_cast<int64_t>(set.recording_labels.size());
    set.recording_labels.push_back(label);
    for (const dsp::SpectroImage &img : images) {
      if (set.image_shape.empty()) set.image_shape = img.data.shape;
      if (img.data.shape != set.image_shape)
        throw std::runtime_error("feature set: inconsistent image shape " +
                                 shape_str(img.data.shape) + " vs " +
                                 shape_str(set.image_shape));
      set.items.push_back({img.data, label, rec_index});
    }
  }
};

}  // namespace

std::pair<FeatureSet, FeatureSet> load_features(const Dataset &dataset,
                                                const std::string &manifest_dir,
                                                const dsp::DspConfig &config,
                                                int expected_sample_rate,
                                                const std::string &cache_dir) {
  dsp::FeatureExtractor extractor(config, expected_sample_rate);
  if (!cache_dir.empty()) fs::create_directories(cache_dir);

  const int64_t count = static_cast<int64_t>(dataset.items.size());
  std::vector<std::vector<dsp::SpectroImage>> images(static_cast<size_t>(count));
  std::vector<std::string> errors(static_cast<size_t>(count));

#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < count; ++i) {
    const DatasetItem &item = dataset.items[static_cast<size_t>(i)];
    try {
      const fs::path resolved = fs::path(item.path).is_absolute()
                                    ? fs::path(item.path)
                                    : fs::path(manifest_dir) / item.path;
      const AudioClip clip = read_wav(resolved.string());
      if (clip.sample_rate != expected_sample_rate)
        throw std::runtime_error(
            "sample rate " + std::to_string(clip.sample_rate) + ", expected " +
            std::to_string(expected_sample_rate) + " (no resampling): " +
            resolved.string());

      std::string prefix;
      bool cached = false;
      const int64_t segs = static_cast<int64_t>(clip.samples.size()) /
                           static_cast<int64_t>(config.seg_seconds *
                                                expected_sample_rate);
      if (!cache_dir.empty()) {
        const std::string key = config.cache_key() + "#" +
                                std::to_string(expected_sample_rate);
        uint64_t h = fnv1a(clip.samples.data(),
                           clip.samples.size() * sizeof(float));
        h = fnv1a(key.data(), key.size(), h);
        prefix = (fs::path(cache_dir) / hex64(h)).string();
        cached = true;
        for (int64_t s = 0; s < segs; ++s)
          if (!fs::exists(prefix + ".seg" + std::to_string(s) + ".stfi")) {
            cached = false;
            break;
          }
      }

      std::vector<dsp::SpectroImage> &imgs = images[static_cast<size_t>(i)];
      if (cached) {
        for (int64_t s = 0; s < segs; ++s)
          imgs.push_back(dsp::read_spectro_image(prefix + ".seg" +
                                                 std::to_string(s) + ".stfi"));
      } else {
        imgs = extractor.recording_images(clip);
        if (!cache_dir.empty())
          for (size_t s = 0; s < imgs.size(); ++s)
            dsp::write_spectro_image(
                prefix + ".seg" + std::to_string(s) + ".stfi", imgs[s]);
      }
    } catch (const std::exception &e) {
      errors[static_cast<size_t>(i)] =
          "item '" + item.id + "': " + e.what();
    }
  }
  for (const std::string &err : errors)
    if (!err.empty()) throw std::runtime_error(err);

  SetBuilder train_builder, test_builder;
  train_builder.set.classes = test_builder.set.classes =
      static_cast<int64_t>(dataset.class_names.size());
  train_builder.set.class_names = test_builder.set.class_names =
      dataset.class_names;
  for (int64_t i = 0; i < count; ++i) {
    const DatasetItem &item = dataset.items[static_cast<size_t>(i)];
    (item.is_test ? test_builder : train_builder)
        .add_recording(images[static_cast<size_t>(i)], item.label);
  }
  return {std::move(train_builder.set), std::move(test_builder.set)};
}

std::pair<FeatureSet, FeatureSet> features_from_recordings(
    const std::vector<GeneratedRecording> &recordings,
    const std::vector<std::string> &class_names, const dsp::DspConfig &config) {
  if (recordings.empty())
    throw std::invalid_argument("features_from_recordings: no recordings");
  dsp::FeatureExtractor extractor(config, recordings[0].clip.sample_rate);
  SetBuilder train_builder, test_builder;
  train_builder.set.classes = test_builder.set.classes =
      static_cast<int64_t>(class_names.size());
  train_builder.set.class_names = test_builder.set.class_names = class_names;

  const int64_t count = static_cast<int64_t>(recordings.size());
  std::vector<std::vector<dsp::SpectroImage>> images(static_cast<size_t>(count));
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < count; ++i)
    images[static_cast<size_t>(i)] =
        extractor.recording_images(recordings[static_cast<size_t>(i)].clip);

  for (int64_t i = 0; i < count; ++i) {
    const GeneratedRecording &rec = recordings[static_cast<size_t>(i)];
    (rec.is_test ? test_builder : train_builder)
        .add_recording(images[static_cast<size_t>(i)], rec.label);
  }
  return {std::move(train_builder.set), std::move(test_builder.set)};
}

}  // namespace scenecrnn::data
