// scenecrnn/include/scenecrnn/dsp.h

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

#ifndef SCENECRNN_DSP_H_
#define SCENECRNN_DSP_H_

#include <complex>
#include <string>
#include <vector>

#include "scenecrnn/tensor.h"
#include "scenecrnn/wav.h"

// Front end turning raw mono audio into two-channel log time-frequency
// images: channel 0 is the plain log filterbank spectrogram, channel 1 the
// same after spectral subtraction of an estimated stationary noise floor, so
// foreground events stand out.
//
// All functions here are pure; concurrent calls over different clips are
// safe.

namespace scenecrnn::dsp {

enum class FilterKind { kMel, kGammatone };

// Complex short-time spectrum, bins x frames, row-major by bin.
struct Stft {
  int64_t bins = 0;
  int64_t frames = 0;
  int64_t n_fft = 0;
  int64_t frame_len = 0;
  int64_t hop = 0;
  std::vector<std::complex<double>> values;

  std::complex<double> &at(int64_t bin, int64_t frame) {
    return values[static_cast<size_t>(bin * frames + frame)];
  }
  std::complex<double> at(int64_t bin, int64_t frame) const {
    return values[static_cast<size_t>(bin * frames + frame)];
  }
};

struct FilterBank {
  Tensor<double> weights;  // M x (n_fft/2 + 1), all entries >= 0
  FilterKind kind = FilterKind::kMel;
  double fmin = 0.0;
  double fmax = 0.0;
  int64_t n_fft = 0;
  int sample_rate = 0;
  std::vector<double> centers_hz;

  int64_t bands() const { return weights.shape[0]; }
};

// The M x T x K network input. Stored channel-major ({K, M, T}) which is also
// the on-disk order of the cache format.
struct SpectroImage {
  int64_t m = 0;
  int64_t t = 0;
  int64_t k = 0;
  Tensor<float> data;  // shape {K, M, T}

  float at(int64_t mi, int64_t ti, int64_t ki) const {
    return data[(ki * m + mi) * t + ti];
  }
  float &at(int64_t mi, int64_t ti, int64_t ki) {
    return data[(ki * m + mi) * t + ti];
  }
};

inline constexpr double kLogFloor = 1e-10;       // epsilon inside log()
inline constexpr double kSpectralFloor = 0.01;   // beta in spectral subtraction
inline constexpr double kNoiseAlpha = 0.85;      // power track smoothing
inline constexpr double kNoiseBias = 1.5;        // minimum-statistics bias factor
inline constexpr double kNoiseWindowSeconds = 1.5;

double mel_from_hz(double hz);
double hz_from_mel(double mel);

// Hann-windowed STFT. frame_ms must convert to at least one sample and not
// exceed the clip; n_fft is the next power of two >= frame length. The final
// frame is zero-padded when the hop does not divide the remaining length, so
// a 2 s clip at 22050 Hz with 50 ms frames and 50% overlap yields 80 frames.
Stft stft(const AudioClip &clip, double frame_ms, double overlap_fraction);

// Number of frames stft() produces for a given sample count.
int64_t stft_num_frames(int64_t num_samples, int64_t frame_len, int64_t hop);

// |X|^2, bins x frames.
Tensor<double> power_spectrum(const Stft &s);

// Mel: triangular filters on the mel-warped axis. Gammatone: peak-normalized
// magnitude responses of 4th-order gammatone filters with centers equally
// spaced on the ERB-rate scale.
FilterBank build_filterbank(FilterKind kind, int64_t bands, int sample_rate,
                            double fmin, double fmax, int64_t n_fft);

// log(bank * power + epsilon), M x T.
Tensor<double> apply_log_filterbank(const FilterBank &bank,
                                    const Tensor<double> &power);

Tensor<double> log_spectrogram(const AudioClip &clip, const FilterBank &bank,
                               double frame_ms, double overlap_fraction);

// Per-bin stationary noise power: the smoothed power track (first-order
// recursion, alpha = kNoiseAlpha) is min-filtered over a sliding window of
// window_frames, the window minima averaged over time, and the result scaled
// by kNoiseBias. Windows longer than the track collapse to the global
// minimum.
std::vector<double> estimate_noise_floor(const Tensor<double> &power_spec,
                                         int64_t window_frames);

// max(power - noise, kSpectralFloor * power), elementwise over frames.
Tensor<double> subtract_noise(const Tensor<double> &power_spec,
                              const std::vector<double> &noise);

// Two-channel input image for one segment. When noise is null the floor is
// estimated from the segment itself; the recording-level pipeline passes the
// estimate from the whole recording instead.
SpectroImage make_input(const AudioClip &clip, const FilterBank &bank,
                        double frame_ms, double overlap_fraction,
                        const std::vector<double> *noise = nullptr);

// Non-overlapping segments of exactly seg_seconds; the remainder is dropped.
std::vector<AudioClip> segment(const AudioClip &recording, double seg_seconds);

// Cache file format: magic "STFI", u32 M, u32 T, u32 K, then M*T*K float32
// values channel-major then frequency-major (i.e. [k][m][t]), little-endian.
void write_spectro_image(const std::string &path, const SpectroImage &img);
SpectroImage read_spectro_image(const std::string &path);

// Everything above wired together with one configuration.
struct DspConfig {
  double frame_ms = 50.0;
  double overlap = 0.5;
  int64_t bands = 64;
  double fmin = 50.0;
  double fmax = 0.0;  // 0 = Nyquist
  double seg_seconds = 2.0;
  FilterKind kind = FilterKind::kMel;

  std::string cache_key() const;
};

class FeatureExtractor {
 public:
  FeatureExtractor(const DspConfig &config, int sample_rate);

  const FilterBank &bank() const { return bank_; }
  const DspConfig &config() const { return config_; }
  int64_t noise_window_frames() const { return noise_window_frames_; }

  // Per-bin noise floor over the whole recording (more context for the
  // minimum than a single 2 s segment).
  std::vector<double> recording_noise(const AudioClip &recording) const;

  SpectroImage segment_image(const AudioClip &seg,
                             const std::vector<double> *noise) const;

  // Segments the recording and computes one image per segment, subtracting
  // the recording-level noise floor.
  std::vector<SpectroImage> recording_images(const AudioClip &recording) const;

 private:
  DspConfig config_;
  int sample_rate_;
  FilterBank bank_;
  int64_t noise_window_frames_;
};

}  // namespace scenecrnn::dsp

#endif  // SCENECRNN_DSP_H_
