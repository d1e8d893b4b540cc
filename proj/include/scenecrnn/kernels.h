// scenecrnn/include/scenecrnn/kernels.h

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

#ifndef SCENECRNN_KERNELS_H_
#define SCENECRNN_KERNELS_H_

#include <cstdint>

// Dense compute kernels behind the autodiff ops. The default entry points are
// OpenMP-parallel; kernels::serial holds plain reference loops with the same
// contracts. Both variants accumulate each output element in the same index
// order, so their results are bit-identical (asserted in tests and exercised
// by the kernel benchmark). Parallelism is only ever over independent output
// elements, which keeps every kernel deterministic regardless of thread
// count.
//
// Convolutions use SAME zero padding (stride 1): for kernel size k the total
// padding is k-1, split as floor((k-1)/2) before and the remainder after.

namespace scenecrnn::kernels {

// C (m x n) = A (m x k) * B (k x n); accumulate adds into C instead.
template <typename T>
void matmul_nn(const T *a, const T *b, T *c, int64_t m, int64_t k, int64_t n,
               bool accumulate);

// C (m x n) = A (m x k) * B^T where bt is stored (n x k).
template <typename T>
void matmul_nt(const T *a, const T *bt, T *c, int64_t m, int64_t k, int64_t n,
               bool accumulate);

// C (m x n) = A^T * B where at is stored (k x m), B is (k x n).
template <typename T>
void matmul_tn(const T *at, const T *b, T *c, int64_t m, int64_t k, int64_t n,
               bool accumulate);

// y (n,cout,h,w) = conv2d_same(x (n,cin,h,w), weights (cout,cin,kh,kw)) + bias.
// bias may be null.
template <typename T>
void conv2d_same_fwd(const T *x, const T *w, const T *bias, T *y, int64_t n,
                     int64_t cin, int64_t h, int64_t wd, int64_t cout,
                     int64_t kh, int64_t kw);

// gx (n,cin,h,w) += dL/dx given gy (n,cout,h,w).
template <typename T>
void conv2d_same_bwd_input(const T *gy, const T *w, T *gx, int64_t n,
                           int64_t cin, int64_t h, int64_t wd, int64_t cout,
                           int64_t kh, int64_t kw);

// gw (cout,cin,kh,kw) += dL/dw given gy and the forward input x.
template <typename T>
void conv2d_same_bwd_weights(const T *gy, const T *x, T *gw, int64_t n,
                             int64_t cin, int64_t h, int64_t wd, int64_t cout,
                             int64_t kh, int64_t kw);

// gb (cout) += sum of gy over batch and spatial positions.
template <typename T>
void conv2d_same_bwd_bias(const T *gy, T *gb, int64_t n, int64_t cout,
                          int64_t h, int64_t wd);

// Max pooling over (h,w) with window (kh,kw) and stride (sh,sw); the pooled
// extents must divide exactly. argmax records the flat input offset of each
// maximum for the backward pass.
template <typename T>
void maxpool2d_fwd(const T *x, T *y, int64_t *argmax, int64_t n, int64_t c,
                   int64_t h, int64_t wd, int64_t kh, int64_t kw, int64_t sh,
                   int64_t sw);

template <typename T>
void maxpool2d_bwd(const T *gy, const int64_t *argmax, T *gx, int64_t count);

namespace serial {

template <typename T>
void matmul_nn(const T *a, const T *b, T *c, int64_t m, int64_t k, int64_t n,
               bool accumulate);
template <typename T>
void matmul_nt(const T *a, const T *bt, T *c, int64_t m, int64_t k, int64_t n,
               bool accumulate);
template <typename T>
void matmul_tn(const T *at, const T *b, T *c, int64_t m, int64_t k, int64_t n,
               bool accumulate);
template <typename T>
void conv2d_same_fwd(const T *x, const T *w, const T *bias, T *y, int64_t n,
                     int64_t cin, int64_t h, int64_t wd, int64_t cout,
                     int64_t kh, int64_t kw);
template <typename T>
void conv2d_same_bwd_input(const T *gy, const T *w, T *gx, int64_t n,
                           int64_t cin, int64_t h, int64_t wd, int64_t cout,
                           int64_t kh, int64_t kw);
template <typename T>
void conv2d_same_bwd_weights(const T *gy, const T *x, T *gw, int64_t n,
                             int64_t cin, int64_t h, int64_t wd, int64_t cout,
                             int64_t kh, int64_t kw);
template <typename T>
void conv2d_same_bwd_bias(const T *gy, T *gb, int64_t n, int64_t cout,
                          int64_t h, int64_t wd);
template <typename T>
void maxpool2d_fwd(const T *x, T *y, int64_t *argmax, int64_t n, int64_t c,
                   int64_t h, int64_t wd, int64_t kh, int64_t kw, int64_t sh,
                   int64_t sw);
template <typename T>
void maxpool2d_bwd(const T *gy, const int64_t *argmax, T *gx, int64_t count);

}  // namespace serial

}  // namespace scenecrnn::kernels

#endif  // SCENECRNN_KERNELS_H_
