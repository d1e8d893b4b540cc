// scenecrnn/tests/dsp_test.cc

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
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "scenecrnn/dsp.h"
#include "scenecrnn/fft.h"
#include "scenecrnn/wav.h"
#include "test_util.h"

using namespace scenecrnn;
using namespace scenecrnn::dsp;
using testutil::noise_clip;
using testutil::sine_clip;

namespace {

constexpr int kRate = 22050;

// 3 dB as a natural-log power-ratio bound: ln(10^(3/10)).
constexpr double kLn3Db = 0.69077552789821368;

// Direct O(N^2) DFT of one windowed frame, the independent STFT oracle.
std::vector<std::complex<double>> dft_frame(const AudioClip &clip,
                                            int64_t start, int64_t frame_len,
                                            int64_t n_fft) {
  std::vector<double> buf(static_cast<size_t>(n_fft), 0.0);
  for (int64_t i = 0; i < frame_len; ++i) {
    const double w =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                             static_cast<double>(frame_len));
    buf[static_cast<size_t>(i)] =
        static_cast<double>(clip.samples[static_cast<size_t>(start + i)]) * w;
  }
  std::vector<std::complex<double>> out(static_cast<size_t>(n_fft / 2 + 1));
  for (int64_t k = 0; k <= n_fft / 2; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int64_t n = 0; n < n_fft; ++n) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(n) / static_cast<double>(n_fft);
      acc += buf[static_cast<size_t>(n)] *
             std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[static_cast<size_t>(k)] = acc;
  }
  return out;
}

std::string temp_path(const std::string &name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("dsp") {

TEST_CASE("2 s at 22050 Hz with 50 ms frames and 50% overlap gives 80 frames") {
  const AudioClip clip = sine_clip(440.0, 2.0, kRate);
  REQUIRE(clip.samples.size() == 44100);  // 2-second segment invariant
  const Stft s = stft(clip, 50.0, 0.5);
  CHECK(s.frames == 80);
  CHECK(s.n_fft == 2048);
  CHECK(s.bins == 1025);
}

TEST_CASE("stft frame count follows the closed-form frame formula") {
  // Exact cover: len = frame + k * hop gives floor((len - frame)/hop) + 1.
  for (int64_t k : {0, 1, 5, 17}) {
    AudioClip clip;
    clip.sample_rate = 1000;
    const int64_t frame = 100, hop = 50;
    clip.samples.assign(static_cast<size_t>(frame + k * hop), 0.1f);
    CHECK(stft(clip, 100.0, 0.5).frames == k + 1);
    // A trailing remainder shorter than a hop adds one zero-padded frame.
    clip.samples.resize(clip.samples.size() + 20, 0.1f);
    CHECK(stft(clip, 100.0, 0.5).frames == k + 2);
  }
}

TEST_CASE("stft of silence is identically zero") {
  AudioClip clip;
  clip.sample_rate = kRate;
  clip.samples.assign(44100, 0.0f);
  const Stft s = stft(clip, 50.0, 0.5);
  for (const auto &v : s.values) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("stft rejects clips shorter than one frame") {
  AudioClip clip;
  clip.sample_rate = kRate;
  clip.samples.assign(500, 0.1f);  // a 50 ms frame needs 1102 samples
  CHECK_THROWS_WITH_AS(stft(clip, 50.0, 0.5), "stft: clip too short",
                       std::invalid_argument);
}

TEST_CASE("1 kHz sine peaks at the right bin and matches the direct DFT") {
  const AudioClip clip = sine_clip(1000.0, 2.0, kRate);
  const Stft s = stft(clip, 50.0, 0.5);
  const int64_t expect_bin =
      static_cast<int64_t>(std::llround(1000.0 * s.n_fft / kRate));
  for (int64_t f = 0; f < s.frames; f += 7) {
    int64_t best = 0;
    double best_mag = -1.0;
    for (int64_t b = 0; b < s.bins; ++b) {
      if (std::abs(s.at(b, f)) > best_mag) {
        best_mag = std::abs(s.at(b, f));
        best = b;
      }
    }
    CHECK(best == expect_bin);
  }
  // Full-precision check of one interior frame against the O(N^2) oracle.
  const auto oracle = dft_frame(clip, 10 * s.hop, s.frame_len, s.n_fft);
  for (int64_t b = 0; b < s.bins; ++b)
    CHECK(std::abs(s.at(b, 10) - oracle[static_cast<size_t>(b)]) <
          1e-6 * (1.0 + std::abs(oracle[static_cast<size_t>(b)])));
}

TEST_CASE("mel filterbank has the requested bands with increasing centers") {
  const FilterBank bank =
      build_filterbank(FilterKind::kMel, 64, kRate, 50.0, 11025.0, 2048);
  CHECK(bank.bands() == 64);
  CHECK(bank.weights.shape == Shape{64, 1025});
  for (size_t i = 1; i < bank.centers_hz.size(); ++i)
    CHECK(bank.centers_hz[i] > bank.centers_hz[i - 1]);
  for (int64_t i = 0; i < bank.weights.numel(); ++i)
    CHECK(bank.weights[i] >= 0.0);
  for (int64_t b = 0; b < 64; ++b) {
    double row_max = 0.0;
    for (int64_t k = 0; k < 1025; ++k)
      row_max = std::max(row_max, bank.weights[b * 1025 + k]);
    CHECK(row_max > 0.0);  // every row has a strictly positive entry
  }
}

TEST_CASE("single-band filterbank spans [fmin, fmax]") {
  const FilterBank bank =
      build_filterbank(FilterKind::kMel, 1, kRate, 100.0, 2000.0, 1024);
  const double bin_hz = static_cast<double>(kRate) / 1024.0;
  for (int64_t k = 0; k < bank.weights.numel(); ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f <= 100.0 || f >= 2000.0) CHECK(bank.weights[k] == 0.0);
  }
  double total = 0.0;
  for (int64_t k = 0; k < bank.weights.numel(); ++k) total += bank.weights[k];
  CHECK(total > 0.0);
}

TEST_CASE("adjacent mel triangles overlap so interior bins stay covered") {
  const FilterBank bank =
      build_filterbank(FilterKind::kMel, 3, kRate, 100.0, 4000.0, 1024);
  const double bin_hz = static_cast<double>(kRate) / 1024.0;
  for (int64_t k = 0; k < bank.weights.shape[1]; ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f > bank.centers_hz.front() && f < bank.centers_hz.back()) {
      double colsum = 0.0;
      for (int64_t b = 0; b < 3; ++b)
        colsum += bank.weights[b * bank.weights.shape[1] + k];
      CHECK(colsum > 0.0);
    }
  }
}

TEST_CASE("filterbank rejects fmax above Nyquist") {
  CHECK_THROWS_AS(
      build_filterbank(FilterKind::kMel, 64, kRate, 50.0, 12000.0, 2048),
      std::invalid_argument);
}

TEST_CASE("gammatone rows are peak-normalized with increasing ERB centers") {
  const FilterBank bank =
      build_filterbank(FilterKind::kGammatone, 64, kRate, 50.0, 11025.0, 2048);
  for (size_t i = 1; i < bank.centers_hz.size(); ++i)
    CHECK(bank.centers_hz[i] > bank.centers_hz[i - 1]);
  for (int64_t b = 0; b < 64; ++b) {
    double row_max = 0.0;
    for (int64_t k = 0; k < 1025; ++k) {
      CHECK(bank.weights[b * 1025 + k] >= 0.0);
      row_max = std::max(row_max, bank.weights[b * 1025 + k]);
    }
    CHECK(row_max == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("log spectrogram of silence is exactly log(epsilon)") {
  AudioClip clip;
  clip.sample_rate = kRate;
  clip.samples.assign(44100, 0.0f);
  const FilterBank bank =
      build_filterbank(FilterKind::kMel, 64, kRate, 50.0, 11025.0, 2048);
  const Tensor<double> spec = log_spectrogram(clip, bank, 50.0, 0.5);
  for (int64_t i = 0; i < spec.numel(); ++i)
    CHECK(spec[i] == doctest::Approx(std::log(1e-10)).epsilon(1e-12));
}

TEST_CASE("doubling the waveform amplitude adds log(4) everywhere") {
  AudioClip clip = noise_clip(2.0, kRate, 0.1, 99);
  AudioClip doubled = clip;
  for (auto &s : doubled.samples) s *= 2.0f;
  const FilterBank bank =
      build_filterbank(FilterKind::kMel, 64, kRate, 50.0, 11025.0, 2048);
  const Tensor<double> a = log_spectrogram(clip, bank, 50.0, 0.5);
  const Tensor<double> b = log_spectrogram(doubled, bank, 50.0, 0.5);
  for (int64_t i = 0; i < a.numel(); ++i)
    CHECK(b[i] - a[i] == doctest::Approx(std::log(4.0)).epsilon(1e-3));
}

TEST_CASE("log spectrogram grows everywhere under amplitude scaling > 1") {
  AudioClip clip = noise_clip(2.0, kRate, 0.05, 123);
  AudioClip scaled = clip;
  for (auto &s : scaled.samples) s *= 1.7f;
  const FilterBank bank =
      build_filterbank(FilterKind::kMel, 64, kRate, 50.0, 11025.0, 2048);
  const Tensor<double> a = log_spectrogram(clip, bank, 50.0, 0.5);
  const Tensor<double> b = log_spectrogram(scaled, bank, 50.0, 0.5);
  for (int64_t i = 0; i < a.numel(); ++i) CHECK(b[i] > a[i]);
}

TEST_CASE("white-noise row means track log of per-band weight sums") {
  // Monte-Carlo oracle: for white noise the expected band energy is the flat
  // per-bin power times the band's weight sum, so mean log-energy minus
  // log(weight sum) should be one shared constant across bands (up to the
  // small-band log bias).
  const FilterBank bank =
      build_filterbank(FilterKind::kMel, 64, kRate, 50.0, 11025.0, 2048);
  std::vector<double> row_mean(64, 0.0);
  constexpr int kRealizations = 100;
  for (int r = 0; r < kRealizations; ++r) {
    const AudioClip clip = noise_clip(2.0, kRate, 0.05, 3000u + r);
    const Tensor<double> spec = log_spectrogram(clip, bank, 50.0, 0.5);
    const int64_t frames = spec.shape[1];
    for (int64_t b = 0; b < 64; ++b) {
      double acc = 0.0;
      for (int64_t t = 0; t < frames; ++t) acc += spec[b * frames + t];
      row_mean[static_cast<size_t>(b)] +=
          acc / static_cast<double>(frames) / kRealizations;
    }
  }
  std::vector<double> centered(64);
  for (int64_t b = 0; b < 64; ++b) {
    double wsum = 0.0;
    for (int64_t k = 0; k < 1025; ++k) wsum += bank.weights[b * 1025 + k];
    centered[static_cast<size_t>(b)] =
        row_mean[static_cast<size_t>(b)] - std::log(wsum);
  }
  const double mid = centered[32];
  for (int64_t b = 0; b < 64; ++b)
    CHECK(std::abs(centered[static_cast<size_t>(b)] - mid) < 0.35);
}

TEST_CASE("noise floor of stationary white noise sits near bias * power") {
  double log_ratio_sum = 0.0;
  int64_t count = 0;
  constexpr int kRealizations = 50;
  for (int r = 0; r < kRealizations; ++r) {
    const AudioClip clip = noise_clip(4.0, kRate, 0.1, 4000u + r);
    const Stft s = stft(clip, 50.0, 0.5);
    const Tensor<double> power = power_spectrum(s);
    const std::vector<double> est = estimate_noise_floor(power, 60);
    const int64_t frames = power.shape[1];
    for (int64_t b = 10; b < s.bins - 10; b += 25) {
      double truth = 0.0;
      for (int64_t t = 0; t < frames; ++t) truth += power[b * frames + t];
      truth /= static_cast<double>(frames);
      log_ratio_sum += std::log(est[static_cast<size_t>(b)] / (kNoiseBias * truth));
      ++count;
    }
  }
  const double mean_log_ratio = log_ratio_sum / static_cast<double>(count);
  CHECK(std::abs(mean_log_ratio) < kLn3Db);  // within +-3 dB of 1.5 * p
}

TEST_CASE("noise floor of all-zero input is zero") {
  Tensor<double> power(Shape{16, 200});
  const std::vector<double> est = estimate_noise_floor(power, 60);
  for (double v : est) CHECK(v == 0.0);
}

TEST_CASE("noise floor rejects a 10% duty-cycle transient 20 dB up") {
  const AudioClip noise = noise_clip(8.0, kRate, 0.05, 777);
  AudioClip with_bursts = noise;
  // A 200 ms burst every 2 s (10% duty), sigma 10x the bed (20 dB power).
  // The gaps are long enough for the smoothed track to decay back to the
  // floor, which is what the minimum needs to reject the events.
  const int64_t period = 2 * kRate, burst = kRate / 5;
  std::mt19937 rng(778);
  std::normal_distribution<double> gauss(0.0, 0.5);
  for (int64_t start = 0;
       start + burst < static_cast<int64_t>(with_bursts.samples.size());
       start += period)
    for (int64_t i = 0; i < burst; ++i)
      with_bursts.samples[static_cast<size_t>(start + i)] +=
          static_cast<float>(gauss(rng));

  const Tensor<double> clean_power = power_spectrum(stft(noise, 50.0, 0.5));
  const Tensor<double> burst_power =
      power_spectrum(stft(with_bursts, 50.0, 0.5));
  const std::vector<double> clean_est = estimate_noise_floor(clean_power, 60);
  const std::vector<double> burst_est = estimate_noise_floor(burst_power, 60);

  double log_ratio = 0.0;
  int64_t count = 0;
  for (size_t b = 10; b < clean_est.size() - 10; b += 25) {
    log_ratio += std::log(burst_est[b] / clean_est[b]);
    ++count;
  }
  CHECK(std::abs(log_ratio / static_cast<double>(count)) < kLn3Db);
}

TEST_CASE("noise floor never exceeds bias times the max smoothed power") {
  const AudioClip clip = noise_clip(3.0, kRate, 0.08, 55);
  const Tensor<double> power = power_spectrum(stft(clip, 50.0, 0.5));
  const std::vector<double> est = estimate_noise_floor(power, 60);
  const int64_t frames = power.shape[1];
  for (int64_t b = 0; b < power.shape[0]; ++b) {
    double peak = 0.0;
    for (int64_t t = 0; t < frames; ++t)
      peak = std::max(peak, power[b * frames + t]);
    CHECK(est[static_cast<size_t>(b)] <= kNoiseBias * peak + 1e-18);
  }
}

TEST_CASE("subtract_noise basics") {
  Tensor<double> power(Shape{2, 3}, {2.0, 2.0, 2.0, 0.4, 0.4, 0.4});

  SUBCASE("zero noise is the identity") {
    const Tensor<double> out = subtract_noise(power, {0.0, 0.0});
    CHECK(out.values == power.values);
  }
  SUBCASE("noise above the signal floors at beta * power") {
    const Tensor<double> out = subtract_noise(power, {5.0, 5.0});
    for (int64_t i = 0; i < out.numel(); ++i)
      CHECK(out[i] == doctest::Approx(kSpectralFloor * power[i]));
  }
  SUBCASE("plain subtraction when above the floor") {
    const Tensor<double> out = subtract_noise(power, {0.5, 0.1});
    CHECK(out[0] == doctest::Approx(1.5));
    CHECK(out[3] == doctest::Approx(0.3));
  }
  SUBCASE("output is non-negative and bounded by the input") {
    const Tensor<double> out = subtract_noise(power, {1.0, 0.2});
    for (int64_t i = 0; i < out.numel(); ++i) {
      CHECK(out[i] >= 0.0);
      CHECK(out[i] <= power[i]);
    }
  }
}

TEST_CASE("make_input produces the 64x80x2 default image") {
  const AudioClip clip = sine_clip(500.0, 2.0, kRate);
  const FilterBank bank =
      build_filterbank(FilterKind::kMel, 64, kRate, 50.0, 11025.0, 2048);
  const SpectroImage img = make_input(clip, bank, 50.0, 0.5);
  CHECK(img.m == 64);
  CHECK(img.t == 80);
  CHECK(img.k == 2);
  for (int64_t i = 0; i < img.data.numel(); ++i)
    CHECK(std::isfinite(img.data[i]));
}

TEST_CASE("make_input of silence is log(epsilon) in both channels") {
  AudioClip clip;
  clip.sample_rate = kRate;
  clip.samples.assign(44100, 0.0f);
  const FilterBank bank =
      build_filterbank(FilterKind::kMel, 64, kRate, 50.0, 11025.0, 2048);
  const SpectroImage img = make_input(clip, bank, 50.0, 0.5);
  for (int64_t i = 0; i < img.data.numel(); ++i)
    CHECK(img.data[i] == doctest::Approx(std::log(1e-10)).epsilon(1e-6));
}

TEST_CASE("auxiliary channel keeps a gated tone within 1 dB on its band") {
  // 1 Hz on/off gating leaves quiet gaps, so the estimated floor sits far
  // below the tone power and subtraction barely touches the active frames.
  AudioClip clip;
  clip.sample_rate = kRate;
  clip.samples.resize(44100);
  for (int64_t i = 0; i < 44100; ++i) {
    const double t = static_cast<double>(i) / kRate;
    const bool on = std::fmod(t, 1.0) < 0.5;
    clip.samples[static_cast<size_t>(i)] = static_cast<float>(
        on ? 0.4 * std::sin(2.0 * std::numbers::pi * 1000.0 * t) : 0.0);
  }
  const FilterBank bank =
      build_filterbank(FilterKind::kMel, 64, kRate, 50.0, 11025.0, 2048);
  const SpectroImage img = make_input(clip, bank, 50.0, 0.5);

  int64_t band = 0;  // band whose center is nearest 1 kHz
  for (size_t b = 0; b < bank.centers_hz.size(); ++b)
    if (std::abs(bank.centers_hz[b] - 1000.0) <
        std::abs(bank.centers_hz[static_cast<size_t>(band)] - 1000.0))
      band = static_cast<int64_t>(b);

  double band_peak = -1e30;
  for (int64_t t = 0; t < img.t; ++t)
    band_peak = std::max(band_peak, static_cast<double>(img.at(band, t, 0)));
  double max_gap_on_frames = 0.0;
  for (int64_t t = 0; t < img.t; ++t) {
    const double main = img.at(band, t, 0);
    if (main < band_peak - std::log(2.0)) continue;  // gate to solid on-frames
    max_gap_on_frames =
        std::max(max_gap_on_frames, std::abs(main - img.at(band, t, 1)));
  }
  CHECK(max_gap_on_frames < 0.11512925464970229);  // 1 dB in nats
}

TEST_CASE("segment splits a 30 s recording into 15 pieces") {
  AudioClip rec;
  rec.sample_rate = kRate;
  rec.samples.assign(static_cast<size_t>(30 * kRate), 0.25f);
  const auto segs = segment(rec, 2.0);
  CHECK(segs.size() == 15);
  for (const auto &s : segs) CHECK(s.samples.size() == 44100);
}

TEST_CASE("segment of an exact-length clip returns it unchanged") {
  const AudioClip clip = sine_clip(330.0, 2.0, kRate);
  const auto segs = segment(clip, 2.0);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].samples == clip.samples);
}

TEST_CASE("segment drops the remainder") {
  AudioClip rec;
  rec.sample_rate = kRate;
  rec.samples.assign(static_cast<size_t>(5 * kRate), 0.1f);
  const auto segs = segment(rec, 2.0);
  CHECK(segs.size() == 2);
}

TEST_CASE("segment rejects recordings shorter than one segment") {
  AudioClip rec;
  rec.sample_rate = kRate;
  rec.samples.assign(static_cast<size_t>(kRate), 0.1f);
  CHECK_THROWS_AS(segment(rec, 2.0), std::invalid_argument);
}

TEST_CASE("float32 wav round-trips exactly") {
  const AudioClip clip = testutil::noise_clip(0.5, kRate, 0.2, 9);
  const std::string path = temp_path("scenecrnn_wav_test.wav");
  write_wav_float32(path, clip);
  const AudioClip loaded = read_wav(path);
  CHECK(loaded.sample_rate == clip.sample_rate);
  CHECK(loaded.samples == clip.samples);
  std::filesystem::remove(path);
}

TEST_CASE("16-bit PCM wav reads and stereo is averaged to mono") {
  const std::string path = temp_path("scenecrnn_pcm16_test.wav");
  {
    std::ofstream os(path, std::ios::binary);
    auto w16 = [&os](uint16_t v) { os.write(reinterpret_cast<char *>(&v), 2); };
    auto w32 = [&os](uint32_t v) { os.write(reinterpret_cast<char *>(&v), 4); };
    const int16_t frames[4][2] = {
        {16384, -16384}, {8192, 8192}, {0, 0}, {-32768, -32768}};
    os.write("RIFF", 4);
    w32(36 + sizeof frames);
    os.write("WAVE", 4);
    os.write("fmt ", 4);
    w32(16);
    w16(1);  // PCM
    w16(2);  // stereo
    w32(8000);
    w32(8000 * 4);
    w16(4);
    w16(16);
    os.write("data", 4);
    w32(sizeof frames);
    os.write(reinterpret_cast<const char *>(frames), sizeof frames);
  }
  const AudioClip clip = read_wav(path);
  REQUIRE(clip.samples.size() == 4);
  CHECK(clip.sample_rate == 8000);
  CHECK(clip.samples[0] == doctest::Approx(0.0f));
  CHECK(clip.samples[1] == doctest::Approx(0.25f));
  CHECK(clip.samples[3] == doctest::Approx(-1.0f));
  std::filesystem::remove(path);
}

TEST_CASE("spectro image cache file round-trips with the STFI magic") {
  std::mt19937 rng(15);
  SpectroImage img;
  img.m = 8;
  img.t = 5;
  img.k = 2;
  img.data = testutil::random_tensor<float>({2, 8, 5}, rng);
  const std::string path = temp_path("scenecrnn_stfi_test.stfi");
  write_spectro_image(path, img);
  {
    std::ifstream is(path, std::ios::binary);
    char magic[4];
    is.read(magic, 4);
    CHECK(std::string(magic, 4) == "STFI");
  }
  const SpectroImage loaded = read_spectro_image(path);
  CHECK(loaded.m == img.m);
  CHECK(loaded.t == img.t);
  CHECK(loaded.k == img.k);
  CHECK(loaded.data.values == img.data.values);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
