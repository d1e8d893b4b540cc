// scenecrnn/src/wav.cc

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

#include "scenecrnn/wav.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

namespace scenecrnn {

namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;

template <typename T>
T read_le(std::istream &is) {
  T v{};
  is.read(reinterpret_cast<char *>(&v), sizeof v);
  return v;
}

template <typename T>
void write_le(std::ostream &os, T v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof v);
}

}  // namespace

AudioClip read_wav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("wav: cannot open " + path);

  char tag[4];
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "RIFF", 4) != 0)
    throw std::runtime_error("wav: not a RIFF file: " + path);
  read_le<uint32_t>(is);  // riff size
  is.read(tag, 4);
  if (!is || std::memcmp(tag, "WAVE", 4) != 0)
    throw std::runtime_error("wav: not a WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::vector<char> payload;

  while (is.read(tag, 4)) {
    const uint32_t chunk_size = read_le<uint32_t>(is);
    if (!is) break;
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = read_le<uint16_t>(is);
      channels = read_le<uint16_t>(is);
      sample_rate = read_le<uint32_t>(is);
      read_le<uint32_t>(is);  // byte rate
      read_le<uint16_t>(is);  // block align
      bits = read_le<uint16_t>(is);
      if (chunk_size > 16)
        is.seekg(chunk_size - 16 + (chunk_size & 1), std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      payload.resize(chunk_size);
      is.read(payload.data(), chunk_size);
      if (!is) throw std::runtime_error("wav: truncated data chunk: " + path);
      if (chunk_size & 1) is.seekg(1, std::ios::cur);
    } else {
      is.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }

  if (!have_fmt) throw std::runtime_error("wav: missing fmt chunk: " + path);
  if (payload.empty()) throw std::runtime_error("wav: missing or empty data chunk: " + path);
  if (channels != 1 && channels != 2)
    throw std::runtime_error("wav: unsupported channel count " +
                             std::to_string(channels) + ": " + path);

  const size_t bytes_per_sample = bits / 8u;
  const size_t total = payload.size() / (bytes_per_sample * channels);
  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.samples.resize(total);

  if (format == kFormatPcm && bits == 16) {
    const int16_t *p = reinterpret_cast<const int16_t *>(payload.data());
    for (size_t i = 0; i < total; ++i) {
      if (channels == 1) {
        clip.samples[i] = static_cast<float>(p[i]) / 32768.0f;
      } else {
        const float l = static_cast<float>(p[2 * i]) / 32768.0f;
        const float r = static_cast<float>(p[2 * i + 1]) / 32768.0f;
        clip.samples[i] = 0.5f * (l + r);
      }
    }
  } else if (format == kFormatFloat && bits == 32) {
    const float *p = reinterpret_cast<const float *>(payload.data());
    for (size_t i = 0; i < total; ++i) {
      clip.samples[i] =
          channels == 1 ? p[i] : 0.5f * (p[2 * i] + p[2 * i + 1]);
    }
  } else {
    throw std::runtime_error("wav: unsupported encoding (format " +
                             std::to_string(format) + ", " + std::to_string(bits) +
                             " bits): " + path);
  }
  if (clip.sample_rate <= 0 || clip.samples.empty())
    throw std::runtime_error("wav: empty or invalid audio: " + path);
  return clip;
}

void write_wav_float32(const std::string &path, const AudioClip &clip) {
  if (clip.sample_rate <= 0 || clip.samples.empty())
    throw std::invalid_argument("wav: refusing to write empty clip");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("wav: cannot open for writing: " + path);

  const uint32_t data_bytes =
      static_cast<uint32_t>(clip.samples.size() * sizeof(float));
  os.write("RIFF", 4);
  write_le<uint32_t>(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  write_le<uint32_t>(os, 16);
  write_le<uint16_t>(os, kFormatFloat);
  write_le<uint16_t>(os, 1);
  write_le<uint32_t>(os, static_cast<uint32_t>(clip.sample_rate));
  write_le<uint32_t>(os, static_cast<uint32_t>(clip.sample_rate) * sizeof(float));
  write_le<uint16_t>(os, sizeof(float));
  write_le<uint16_t>(os, 32);
  os.write("data", 4);
  write_le<uint32_t>(os, data_bytes);
  os.write(reinterpret_cast<const char *>(clip.samples.data()), data_bytes);
  if (!os) throw std::runtime_error("wav: write failed: " + path);
}

}  // namespace scenecrnn
