// scenecrnn/src/dsp.cc

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

#include "scenecrnn/dsp.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <numbers>
#include <sstream>

#include "scenecrnn/fft.h"

namespace scenecrnn::dsp {

double mel_from_hz(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double hz_from_mel(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

namespace {

double erb_rate_from_hz(double hz) {
  return 21.4 * std::log10(1.0 + 0.00437 * hz);
}
double hz_from_erb_rate(double erb) {
  return (std::pow(10.0, erb / 21.4) - 1.0) / 0.00437;
}
double erb_bandwidth(double hz) { return 24.7 * (4.37 * hz / 1000.0 + 1.0); }

}  // namespace

int64_t stft_num_frames(int64_t num_samples, int64_t frame_len, int64_t hop) {
  if (num_samples < frame_len) return 0;
  // Last partial frame is zero-padded, hence the rounding up.
  return 1 + (num_samples - frame_len + hop - 1) / hop;
}

Stft stft(const AudioClip &clip, double frame_ms, double overlap_fraction) {
  if (clip.sample_rate <= 0 || clip.samples.empty())
    throw std::invalid_argument("stft: empty clip");
  if (overlap_fraction < 0.0 || overlap_fraction >= 1.0)
    throw std::invalid_argument("stft: overlap must lie in [0, 1)");
  const int64_t frame_len =
      static_cast<int64_t>(frame_ms * clip.sample_rate / 1000.0);
  if (frame_len < 1) throw std::invalid_argument("stft: frame too short");
  if (frame_len > static_cast<int64_t>(clip.samples.size()))
    throw std::invalid_argument("stft: clip too short");
  const int64_t hop = std::max<int64_t>(
      1, static_cast<int64_t>(static_cast<double>(frame_len) *
                              (1.0 - overlap_fraction)));

  Stft out;
  out.frame_len = frame_len;
  out.hop = hop;
  out.n_fft = next_pow2(frame_len);
  out.bins = out.n_fft / 2 + 1;
  out.frames = stft_num_frames(static_cast<int64_t>(clip.samples.size()),
                               frame_len, hop);
  out.values.assign(static_cast<size_t>(out.bins * out.frames), {0.0, 0.0});

  // Periodic Hann window.
  std::vector<double> window(static_cast<size_t>(frame_len));
  for (int64_t i = 0; i < frame_len; ++i)
    window[static_cast<size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                             static_cast<double>(frame_len));

  std::vector<double> buf(static_cast<size_t>(frame_len));
  const int64_t n = static_cast<int64_t>(clip.samples.size());
  for (int64_t f = 0; f < out.frames; ++f) {
    const int64_t start = f * hop;
    const int64_t avail = std::min(frame_len, n - start);
    for (int64_t i = 0; i < avail; ++i)
      buf[static_cast<size_t>(i)] =
          static_cast<double>(clip.samples[static_cast<size_t>(start + i)]) *
          window[static_cast<size_t>(i)];
    std::fill(buf.begin() + avail, buf.end(), 0.0);
    const auto spec = fft_real(buf.data(), frame_len, out.n_fft);
    for (int64_t b = 0; b < out.bins; ++b)
      out.at(b, f) = spec[static_cast<size_t>(b)];
  }
  return out;
}

Tensor<double> power_spectrum(const Stft &s) {
  Tensor<double> p(Shape{s.bins, s.frames});
  for (int64_t i = 0; i < p.numel(); ++i) p[i] = std::norm(s.values[static_cast<size_t>(i)]);
  return p;
}

FilterBank build_filterbank(FilterKind kind, int64_t bands, int sample_rate,
                            double fmin, double fmax, int64_t n_fft) {
  if (bands < 1) throw std::invalid_argument("filterbank: need at least one band");
  const double nyquist = sample_rate / 2.0;
  if (!(fmin > 0.0) || !(fmin < fmax))
    throw std::invalid_argument("filterbank: need 0 < fmin < fmax");
  if (fmax > nyquist + 1e-9)
    throw std::invalid_argument("filterbank: fmax " + std::to_string(fmax) +
                                " above Nyquist " + std::to_string(nyquist));

  const int64_t bins = n_fft / 2 + 1;
  FilterBank bank;
  bank.kind = kind;
  bank.fmin = fmin;
  bank.fmax = fmax;
  bank.n_fft = n_fft;
  bank.sample_rate = sample_rate;
  bank.weights = Tensor<double>(Shape{bands, bins});
  bank.centers_hz.resize(static_cast<size_t>(bands));

  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(n_fft);

  if (kind == FilterKind::kMel) {
    std::vector<double> edges(static_cast<size_t>(bands) + 2);
    const double lo = mel_from_hz(fmin), hi = mel_from_hz(fmax);
    for (int64_t i = 0; i < bands + 2; ++i)
      edges[static_cast<size_t>(i)] =
          hz_from_mel(lo + (hi - lo) * static_cast<double>(i) /
                               static_cast<double>(bands + 1));
    for (int64_t b = 0; b < bands; ++b) {
      const double fl = edges[static_cast<size_t>(b)];
      const double fc = edges[static_cast<size_t>(b) + 1];
      const double fr = edges[static_cast<size_t>(b) + 2];
      bank.centers_hz[static_cast<size_t>(b)] = fc;
      bool any = false;
      for (int64_t k = 0; k < bins; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        double w = 0.0;
        if (f > fl && f < fr)
          w = std::min((f - fl) / (fc - fl), (fr - f) / (fr - fc));
        bank.weights[b * bins + k] = std::max(0.0, w);
        any = any || w > 0.0;
      }
      if (!any)
        throw std::invalid_argument(
            "filterbank: band " + std::to_string(b) +
            " covers no FFT bin; fewer bands or larger n_fft needed");
    }
  } else {
    const double lo = erb_rate_from_hz(fmin), hi = erb_rate_from_hz(fmax);
    for (int64_t b = 0; b < bands; ++b) {
      const double fc =
          bands == 1 ? hz_from_erb_rate(0.5 * (lo + hi))
                     : hz_from_erb_rate(lo + (hi - lo) * static_cast<double>(b) /
                                                 static_cast<double>(bands - 1));
      bank.centers_hz[static_cast<size_t>(b)] = fc;
      const double bw = 1.019 * erb_bandwidth(fc);
      double peak = 0.0;
      for (int64_t k = 0; k < bins; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        const double r = (f - fc) / bw;
        // 4th-order gammatone magnitude response.
        const double w = std::pow(1.0 + r * r, -2.0);
        bank.weights[b * bins + k] = w;
        peak = std::max(peak, w);
      }
      for (int64_t k = 0; k < bins; ++k) bank.weights[b * bins + k] /= peak;
    }
  }
  return bank;
}

Tensor<double> apply_log_filterbank(const FilterBank &bank,
                                    const Tensor<double> &power) {
  const int64_t bands = bank.bands();
  const int64_t bins = bank.weights.shape[1];
  if (power.rank() != 2 || power.shape[0] != bins)
    throw std::invalid_argument("filterbank: power spectrum has " +
                                shape_str(power.shape) + ", expected " +
                                std::to_string(bins) + " bins");
  const int64_t frames = power.shape[1];
  Tensor<double> out(Shape{bands, frames});
#pragma omp parallel for schedule(static) if (bands * frames * bins > (1 << 16))
  for (int64_t b = 0; b < bands; ++b) {
    std::vector<double> acc(static_cast<size_t>(frames), 0.0);
    for (int64_t k = 0; k < bins; ++k) {
      const double w = bank.weights[b * bins + k];
      if (w == 0.0) continue;  // mel rows are mostly zero
      const double *row = power.data() + k * frames;
      double *dst = acc.data();
#pragma omp simd
      for (int64_t t = 0; t < frames; ++t) dst[t] += w * row[t];
    }
    for (int64_t t = 0; t < frames; ++t)
      out[b * frames + t] = std::log(acc[static_cast<size_t>(t)] + kLogFloor);
  }
  return out;
}

Tensor<double> log_spectrogram(const AudioClip &clip, const FilterBank &bank,
                               double frame_ms, double overlap_fraction) {
  const Stft s = stft(clip, frame_ms, overlap_fraction);
  if (s.n_fft != bank.n_fft)
    throw std::invalid_argument("log_spectrogram: bank built for n_fft " +
                                std::to_string(bank.n_fft) + ", stft uses " +
                                std::to_string(s.n_fft));
  return apply_log_filterbank(bank, power_spectrum(s));
}

std::vector<double> estimate_noise_floor(const Tensor<double> &power_spec,
                                         int64_t window_frames) {
  if (power_spec.rank() != 2)
    throw std::invalid_argument("noise floor: expected bins x frames matrix");
  if (window_frames < 1)
    throw std::invalid_argument("noise floor: window must be positive");
  const int64_t bins = power_spec.shape[0], frames = power_spec.shape[1];
  std::vector<double> noise(static_cast<size_t>(bins), 0.0);
  const int64_t win = std::min(window_frames, frames);

#pragma omp parallel for schedule(static) if (bins * frames > (1 << 14))
  for (int64_t b = 0; b < bins; ++b) {
    std::vector<double> smoothed(static_cast<size_t>(frames));
    double s = power_spec[b * frames];
    smoothed[0] = s;
    for (int64_t t = 1; t < frames; ++t) {
      s = kNoiseAlpha * s + (1.0 - kNoiseAlpha) * power_spec[b * frames + t];
      smoothed[static_cast<size_t>(t)] = s;
    }
    // Sliding-window minima via monotonic deque, averaged over positions.
    std::deque<int64_t> q;
    double acc = 0.0;
    int64_t count = 0;
    for (int64_t t = 0; t < frames; ++t) {
      while (!q.empty() && smoothed[static_cast<size_t>(q.back())] >=
                               smoothed[static_cast<size_t>(t)])
        q.pop_back();
      q.push_back(t);
      if (q.front() <= t - win) q.pop_front();
      if (t >= win - 1) {
        acc += smoothed[static_cast<size_t>(q.front())];
        ++count;
      }
    }
    noise[static_cast<size_t>(b)] = kNoiseBias * acc / static_cast<double>(count);
  }
  return noise;
}

Tensor<double> subtract_noise(const Tensor<double> &power_spec,
                              const std::vector<double> &noise) {
  if (power_spec.rank() != 2 ||
      power_spec.shape[0] != static_cast<int64_t>(noise.size()))
    throw std::invalid_argument("subtract_noise: shape mismatch " +
                                shape_str(power_spec.shape) + " vs " +
                                std::to_string(noise.size()) + " noise bins");
  const int64_t bins = power_spec.shape[0], frames = power_spec.shape[1];
  Tensor<double> out(power_spec.shape);
  for (int64_t b = 0; b < bins; ++b) {
    const double nb = noise[static_cast<size_t>(b)];
    for (int64_t t = 0; t < frames; ++t) {
      const double p = power_spec[b * frames + t];
      out[b * frames + t] = std::max(p - nb, kSpectralFloor * p);
    }
  }
  return out;
}

SpectroImage make_input(const AudioClip &clip, const FilterBank &bank,
                        double frame_ms, double overlap_fraction,
                        const std::vector<double> *noise) {
  const Stft s = stft(clip, frame_ms, overlap_fraction);
  if (s.n_fft != bank.n_fft)
    throw std::invalid_argument("make_input: bank built for n_fft " +
                                std::to_string(bank.n_fft) + ", stft uses " +
                                std::to_string(s.n_fft));
  const Tensor<double> power = power_spectrum(s);

  std::vector<double> floor_est;
  if (noise == nullptr) {
    const double hop_seconds =
        static_cast<double>(s.hop) / static_cast<double>(clip.sample_rate);
    const int64_t win = std::max<int64_t>(
        1, static_cast<int64_t>(std::llround(kNoiseWindowSeconds / hop_seconds)));
    floor_est = estimate_noise_floor(power, win);
    noise = &floor_est;
  }

  const Tensor<double> main = apply_log_filterbank(bank, power);
  const Tensor<double> aux =
      apply_log_filterbank(bank, subtract_noise(power, *noise));

  SpectroImage img;
  img.m = bank.bands();
  img.t = s.frames;
  img.k = 2;
  img.data = Tensor<float>(Shape{img.k, img.m, img.t});
  for (int64_t i = 0; i < img.m * img.t; ++i) {
    img.data[i] = static_cast<float>(main[i]);
    img.data[img.m * img.t + i] = static_cast<float>(aux[i]);
  }
  return img;
}

std::vector<AudioClip> segment(const AudioClip &recording, double seg_seconds) {
  if (recording.sample_rate <= 0 || recording.samples.empty())
    throw std::invalid_argument("segment: empty recording");
  const int64_t seg_len =
      static_cast<int64_t>(seg_seconds * recording.sample_rate);
  if (seg_len < 1) throw std::invalid_argument("segment: segment too short");
  const int64_t n = static_cast<int64_t>(recording.samples.size());
  if (n < seg_len)
    throw std::invalid_argument("segment: recording shorter than one segment");
  const int64_t count = n / seg_len;
  std::vector<AudioClip> out(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    out[static_cast<size_t>(i)].sample_rate = recording.sample_rate;
    out[static_cast<size_t>(i)].samples.assign(
        recording.samples.begin() + i * seg_len,
        recording.samples.begin() + (i + 1) * seg_len);
  }
  return out;
}

void write_spectro_image(const std::string &path, const SpectroImage &img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write("STFI", 4);
  const uint32_t dims[3] = {static_cast<uint32_t>(img.m),
                            static_cast<uint32_t>(img.t),
                            static_cast<uint32_t>(img.k)};
  os.write(reinterpret_cast<const char *>(dims), sizeof dims);
  os.write(reinterpret_cast<const char *>(img.data.data()),
           static_cast<std::streamsize>(img.data.numel() * sizeof(float)));
  if (!os) throw std::runtime_error("write failed: " + path);
}

SpectroImage read_spectro_image(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "STFI", 4) != 0)
    throw std::runtime_error("spectro image: bad magic in " + path);
  uint32_t dims[3];
  is.read(reinterpret_cast<char *>(dims), sizeof dims);
  if (!is) throw std::runtime_error("spectro image: truncated header in " + path);
  SpectroImage img;
  img.m = dims[0];
  img.t = dims[1];
  img.k = dims[2];
  img.data = Tensor<float>(Shape{img.k, img.m, img.t});
  is.read(reinterpret_cast<char *>(img.data.data()),
          static_cast<std::streamsize>(img.data.numel() * sizeof(float)));
  if (!is) throw std::runtime_error("spectro image: truncated data in " + path);
  return img;
}

std::string DspConfig::cache_key() const {
  std::ostringstream os;
  os << (kind == FilterKind::kMel ? "logmel" : "loggam") << ",M=" << bands
     << ",frame=" << frame_ms << ",ov=" << overlap << ",fmin=" << fmin
     << ",fmax=" << fmax << ",seg=" << seg_seconds;
  return os.str();
}

FeatureExtractor::FeatureExtractor(const DspConfig &config, int sample_rate)
    : config_(config), sample_rate_(sample_rate) {
  const int64_t frame_len =
      static_cast<int64_t>(config.frame_ms * sample_rate / 1000.0);
  if (frame_len < 1)
    throw std::invalid_argument("feature extractor: frame too short");
  const int64_t hop = std::max<int64_t>(
      1, static_cast<int64_t>(static_cast<double>(frame_len) *
                              (1.0 - config.overlap)));
  const double fmax = config.fmax > 0.0 ? config.fmax : sample_rate / 2.0;
  bank_ = build_filterbank(config.kind, config.bands, sample_rate, config.fmin,
                           fmax, next_pow2(frame_len));
  const double hop_seconds =
      static_cast<double>(hop) / static_cast<double>(sample_rate);
  noise_window_frames_ = std::max<int64_t>(
      1, static_cast<int64_t>(std::llround(kNoiseWindowSeconds / hop_seconds)));
}

std::vector<double> FeatureExtractor::recording_noise(
    const AudioClip &recording) const {
  const Stft s = stft(recording, config_.frame_ms, config_.overlap);
  return estimate_noise_floor(power_spectrum(s), noise_window_frames_);
}

SpectroImage FeatureExtractor::segment_image(
    const AudioClip &seg, const std::vector<double> *noise) const {
  return make_input(seg, bank_, config_.frame_ms, config_.overlap, noise);
}

std::vector<SpectroImage> FeatureExtractor::recording_images(
    const AudioClip &recording) const {
  const std::vector<double> noise = recording_noise(recording);
  const std::vector<AudioClip> segs = segment(recording, config_.seg_seconds);
  std::vector<SpectroImage> out;
  out.reserve(segs.size());
  for (const AudioClip &s : segs) out.push_back(segment_image(s, &noise));
  return out;
}

}  // namespace scenecrnn::dsp
