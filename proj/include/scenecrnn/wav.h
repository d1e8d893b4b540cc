// scenecrnn/include/scenecrnn/wav.h

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

#ifndef SCENECRNN_WAV_H_
#define SCENECRNN_WAV_H_

#include <string>
#include <vector>

namespace scenecrnn {

// Mono audio in [-1, 1] nominal range.
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;

  double seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Reads a PCM WAV file. Supported encodings: 16-bit signed integer and 32-bit
// IEEE float; stereo input is averaged down to mono. Anything else is an
// error.
AudioClip read_wav(const std::string &path);

// Writes mono 32-bit float WAV (lossless for our generated audio).
void write_wav_float32(const std::string &path, const AudioClip &clip);

}  // namespace scenecrnn

#endif  // SCENECRNN_WAV_H_
