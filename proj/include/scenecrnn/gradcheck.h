// scenecrnn/include/scenecrnn/gradcheck.h

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

#ifndef SCENECRNN_GRADCHECK_H_
#define SCENECRNN_GRADCHECK_H_

#include <functional>
#include <random>

#include "scenecrnn/autodiff.h"
#include "scenecrnn/tensor.h"

namespace scenecrnn {

struct GradCheckReport {
  double max_rel_err = 0.0;
  bool pass = false;
  int64_t coords_checked = 0;
};

// Compares reverse-mode gradients of a scalar-valued function against central
// finite differences. f receives a fresh tape and the input leaf and must
// return a scalar node. When max_coords >= 0 and the input is larger, only
// that many coordinates are probed (drawn without replacement from rng, which
// is then required); gradients run over the full tensor either way.
//
// The per-coordinate error is |ad - fd| / max(1e-5, |ad|, |fd|). Meant to be
// instantiated with T = double; float rounding drowns the difference quotient
// at the step sizes used here.
template <typename T>
GradCheckReport grad_check(
    const std::function<ad::Node<T> *(ad::Tape<T> &, ad::Node<T> *)> &f,
    const Tensor<T> &x, T step, double tol, int64_t max_coords = -1,
    std::mt19937 *rng = nullptr);

}  // namespace scenecrnn

#endif  // SCENECRNN_GRADCHECK_H_
