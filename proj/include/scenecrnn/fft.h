// scenecrnn/include/scenecrnn/fft.h

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

#ifndef SCENECRNN_FFT_H_
#define SCENECRNN_FFT_H_

#include <complex>
#include <cstdint>
#include <vector>

namespace scenecrnn {

// In-place iterative radix-2 Cooley-Tukey transform. The length must be a
// power of two (the STFT rounds its FFT size up to one, so nothing more
// general is needed here). The inverse includes the 1/n factor.
void fft_inplace(std::vector<std::complex<double>> &a, bool inverse = false);

// Forward transform of a real signal zero-padded to n_fft; returns all n_fft
// bins.
std::vector<std::complex<double>> fft_real(const double *x, int64_t n,
                                           int64_t n_fft);

inline int64_t next_pow2(int64_t n) {
  int64_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace scenecrnn

#endif  // SCENECRNN_FFT_H_
