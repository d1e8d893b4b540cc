// scenecrnn/src/kernels.cc

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

#include "scenecrnn/kernels.h"

#include <algorithm>
#include <cstring>

namespace scenecrnn::kernels {

namespace {

// Work size (in multiply-adds) below which a parallel region is not worth
// spawning.
constexpr int64_t kParGrain = 1 << 15;

// Both kernel variants funnel every reduction through these two helpers, so
// per-output accumulation order is identical and results compare bit-equal.
template <typename T>
inline T dot(const T *a, const T *b, int64_t len) {
  T s = T(0);
#pragma omp simd reduction(+ : s)
  for (int64_t i = 0; i < len; ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
inline void axpy(T alpha, const T *x, T *y, int64_t len) {
#pragma omp simd
  for (int64_t i = 0; i < len; ++i) y[i] += alpha * x[i];
}

template <bool Par, typename T>
void matmul_nn_impl(const T *a, const T *b, T *c, int64_t m, int64_t k,
                    int64_t n, bool accumulate) {
#pragma omp parallel for schedule(static) if (Par && m * k * n > kParGrain)
  for (int64_t i = 0; i < m; ++i) {
    T *crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, T(0));
    const T *arow = a + i * k;
    for (int64_t kk = 0; kk < k; ++kk) axpy(arow[kk], b + kk * n, crow, n);
  }
}

template <bool Par, typename T>
void matmul_nt_impl(const T *a, const T *bt, T *c, int64_t m, int64_t k,
                    int64_t n, bool accumulate) {
#pragma omp parallel for schedule(static) if (Par && m * k * n > kParGrain)
  for (int64_t i = 0; i < m; ++i) {
    const T *arow = a + i * k;
    T *crow = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      T s = dot(arow, bt + j * k, k);
      crow[j] = accumulate ? crow[j] + s : s;
    }
  }
}

template <bool Par, typename T>
void matmul_tn_impl(const T *at, const T *b, T *c, int64_t m, int64_t k,
                    int64_t n, bool accumulate) {
#pragma omp parallel for schedule(static) if (Par && m * k * n > kParGrain)
  for (int64_t i = 0; i < m; ++i) {
    T *crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, T(0));
    for (int64_t kk = 0; kk < k; ++kk) axpy(at[kk * m + i], b + kk * n, crow, n);
  }
}

template <bool Par, typename T>
void conv2d_same_fwd_impl(const T *x, const T *w, const T *bias, T *y,
                          int64_t n, int64_t cin, int64_t h, int64_t wd,
                          int64_t cout, int64_t kh, int64_t kw) {
  const int64_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  const int64_t plane = h * wd;
#pragma omp parallel for collapse(2) schedule(static) \
    if (Par && n * cout * plane * cin * kh * kw > kParGrain)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t co = 0; co < cout; ++co) {
      T *yp = y + (ni * cout + co) * plane;
      std::fill(yp, yp + plane, bias ? bias[co] : T(0));
      for (int64_t ci = 0; ci < cin; ++ci) {
        const T *xp = x + (ni * cin + ci) * plane;
        for (int64_t dh = 0; dh < kh; ++dh) {
          const int64_t oh_lo = std::max<int64_t>(0, ph - dh);
          const int64_t oh_hi = std::min(h, h + ph - dh);
          for (int64_t dw = 0; dw < kw; ++dw) {
            const T wval = w[((co * cin + ci) * kh + dh) * kw + dw];
            const int64_t ow_lo = std::max<int64_t>(0, pw - dw);
            const int64_t ow_hi = std::min(wd, wd + pw - dw);
            for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
              const T *xrow = xp + (oh + dh - ph) * wd + (dw - pw);
              T *yrow = yp + oh * wd;
              axpy(wval, xrow + ow_lo, yrow + ow_lo, ow_hi - ow_lo);
            }
          }
        }
      }
    }
  }
}

template <bool Par, typename T>
void conv2d_same_bwd_input_impl(const T *gy, const T *w, T *gx, int64_t n,
                                int64_t cin, int64_t h, int64_t wd,
                                int64_t cout, int64_t kh, int64_t kw) {
  const int64_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  const int64_t plane = h * wd;
#pragma omp parallel for collapse(2) schedule(static) \
    if (Par && n * cout * plane * cin * kh * kw > kParGrain)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t ci = 0; ci < cin; ++ci) {
      T *gxp = gx + (ni * cin + ci) * plane;
      for (int64_t co = 0; co < cout; ++co) {
        const T *gyp = gy + (ni * cout + co) * plane;
        for (int64_t dh = 0; dh < kh; ++dh) {
          // oh = ih + ph - dh must lie in [0, h)
          const int64_t ih_lo = std::max<int64_t>(0, dh - ph);
          const int64_t ih_hi = std::min(h, h + dh - ph);
          for (int64_t dw = 0; dw < kw; ++dw) {
            const T wval = w[((co * cin + ci) * kh + dh) * kw + dw];
            const int64_t iw_lo = std::max<int64_t>(0, dw - pw);
            const int64_t iw_hi = std::min(wd, wd + dw - pw);
            for (int64_t ih = ih_lo; ih < ih_hi; ++ih) {
              const T *gyrow = gyp + (ih + ph - dh) * wd + (pw - dw);
              T *gxrow = gxp + ih * wd;
              axpy(wval, gyrow + iw_lo, gxrow + iw_lo, iw_hi - iw_lo);
            }
          }
        }
      }
    }
  }
}

template <bool Par, typename T>
void conv2d_same_bwd_weights_impl(const T *gy, const T *x, T *gw, int64_t n,
                                  int64_t cin, int64_t h, int64_t wd,
                                  int64_t cout, int64_t kh, int64_t kw) {
  const int64_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  const int64_t plane = h * wd;
#pragma omp parallel for collapse(2) schedule(static) \
    if (Par && n * cout * plane * cin * kh * kw > kParGrain)
  for (int64_t co = 0; co < cout; ++co) {
    for (int64_t ci = 0; ci < cin; ++ci) {
      for (int64_t dh = 0; dh < kh; ++dh) {
        const int64_t oh_lo = std::max<int64_t>(0, ph - dh);
        const int64_t oh_hi = std::min(h, h + ph - dh);
        for (int64_t dw = 0; dw < kw; ++dw) {
          const int64_t ow_lo = std::max<int64_t>(0, pw - dw);
          const int64_t ow_hi = std::min(wd, wd + pw - dw);
          T s = T(0);
          for (int64_t ni = 0; ni < n; ++ni) {
            const T *gyp = gy + (ni * cout + co) * plane;
            const T *xp = x + (ni * cin + ci) * plane;
            for (int64_t oh = oh_lo; oh < oh_hi; ++oh) {
              s += dot(gyp + oh * wd + ow_lo,
                       xp + (oh + dh - ph) * wd + (dw - pw) + ow_lo,
                       ow_hi - ow_lo);
            }
          }
          gw[((co * cin + ci) * kh + dh) * kw + dw] += s;
        }
      }
    }
  }
}

template <bool Par, typename T>
void conv2d_same_bwd_bias_impl(const T *gy, T *gb, int64_t n, int64_t cout,
                               int64_t h, int64_t wd) {
  const int64_t plane = h * wd;
#pragma omp parallel for schedule(static) if (Par && n * cout * plane > kParGrain)
  for (int64_t co = 0; co < cout; ++co) {
    T s = T(0);
    for (int64_t ni = 0; ni < n; ++ni) {
      const T *gyp = gy + (ni * cout + co) * plane;
      for (int64_t i = 0; i < plane; ++i) s += gyp[i];
    }
    gb[co] += s;
  }
}

template <bool Par, typename T>
void maxpool2d_fwd_impl(const T *x, T *y, int64_t *argmax, int64_t n,
                        int64_t c, int64_t h, int64_t wd, int64_t kh,
                        int64_t kw, int64_t sh, int64_t sw) {
  const int64_t oh = h / sh, ow = wd / sw;
  const int64_t in_plane = h * wd, out_plane = oh * ow;
#pragma omp parallel for schedule(static) if (Par && n * c * h * wd > kParGrain)
  for (int64_t pc = 0; pc < n * c; ++pc) {
    const T *xp = x + pc * in_plane;
    T *yp = y + pc * out_plane;
    int64_t *ap = argmax + pc * out_plane;
    for (int64_t i = 0; i < oh; ++i) {
      for (int64_t j = 0; j < ow; ++j) {
        int64_t best = (i * sh) * wd + j * sw;
        T bv = xp[best];
        for (int64_t di = 0; di < kh; ++di) {
          for (int64_t dj = 0; dj < kw; ++dj) {
            const int64_t idx = (i * sh + di) * wd + j * sw + dj;
            if (xp[idx] > bv) {
              bv = xp[idx];
              best = idx;
            }
          }
        }
        yp[i * ow + j] = bv;
        ap[i * ow + j] = pc * in_plane + best;
      }
    }
  }
}

template <bool Par, typename T>
void maxpool2d_bwd_impl(const T *gy, const int64_t *argmax, T *gx,
                        int64_t count) {
  // Pool windows are disjoint (stride == kernel in this project), so the
  // scatter below has no write collisions.
#pragma omp parallel for schedule(static) if (Par && count > kParGrain)
  for (int64_t i = 0; i < count; ++i) gx[argmax[i]] += gy[i];
}

}  // namespace

#define SCENECRNN_DEFINE_KERNELS(PAR, NS)                                      \
  template <typename T>                                                        \
  void NS matmul_nn(const T *a, const T *b, T *c, int64_t m, int64_t k,        \
                    int64_t n, bool acc) {                                     \
    matmul_nn_impl<PAR>(a, b, c, m, k, n, acc);                                \
  }                                                                            \
  template <typename T>                                                        \
  void NS matmul_nt(const T *a, const T *bt, T *c, int64_t m, int64_t k,       \
                    int64_t n, bool acc) {                                     \
    matmul_nt_impl<PAR>(a, bt, c, m, k, n, acc);                               \
  }                                                                            \
  template <typename T>                                                        \
  void NS matmul_tn(const T *at, const T *b, T *c, int64_t m, int64_t k,       \
                    int64_t n, bool acc) {                                     \
    matmul_tn_impl<PAR>(at, b, c, m, k, n, acc);                               \
  }                                                                            \
  template <typename T>                                                        \
  void NS conv2d_same_fwd(const T *x, const T *w, const T *bias, T *y,         \
                          int64_t n, int64_t cin, int64_t h, int64_t wd,       \
                          int64_t cout, int64_t kh, int64_t kw) {              \
    conv2d_same_fwd_impl<PAR>(x, w, bias, y, n, cin, h, wd, cout, kh, kw);     \
  }                                                                            \
  template <typename T>                                                        \
  void NS conv2d_same_bwd_input(const T *gy, const T *w, T *gx, int64_t n,     \
                                int64_t cin, int64_t h, int64_t wd,            \
                                int64_t cout, int64_t kh, int64_t kw) {        \
    conv2d_same_bwd_input_impl<PAR>(gy, w, gx, n, cin, h, wd, cout, kh, kw);   \
  }                                                                            \
  template <typename T>                                                        \
  void NS conv2d_same_bwd_weights(const T *gy, const T *x, T *gw, int64_t n,   \
                                  int64_t cin, int64_t h, int64_t wd,          \
                                  int64_t cout, int64_t kh, int64_t kw) {      \
    conv2d_same_bwd_weights_impl<PAR>(gy, x, gw, n, cin, h, wd, cout, kh, kw); \
  }                                                                            \
  template <typename T>                                                        \
  void NS conv2d_same_bwd_bias(const T *gy, T *gb, int64_t n, int64_t cout,    \
                               int64_t h, int64_t wd) {                        \
    conv2d_same_bwd_bias_impl<PAR>(gy, gb, n, cout, h, wd);                    \
  }                                                                            \
  template <typename T>                                                        \
  void NS maxpool2d_fwd(const T *x, T *y, int64_t *argmax, int64_t n,          \
                        int64_t c, int64_t h, int64_t wd, int64_t kh,          \
                        int64_t kw, int64_t sh, int64_t sw) {                  \
    maxpool2d_fwd_impl<PAR>(x, y, argmax, n, c, h, wd, kh, kw, sh, sw);        \
  }                                                                            \
  template <typename T>                                                        \
  void NS maxpool2d_bwd(const T *gy, const int64_t *argmax, T *gx,             \
                        int64_t count) {                                       \
    maxpool2d_bwd_impl<PAR>(gy, argmax, gx, count);                            \
  }

SCENECRNN_DEFINE_KERNELS(true, )
SCENECRNN_DEFINE_KERNELS(false, serial::)

#undef SCENECRNN_DEFINE_KERNELS

#define SCENECRNN_INSTANTIATE(T, NS)                                           \
  template void NS matmul_nn<T>(const T *, const T *, T *, int64_t, int64_t,   \
                                int64_t, bool);                                \
  template void NS matmul_nt<T>(const T *, const T *, T *, int64_t, int64_t,   \
                                int64_t, bool);                                \
  template void NS matmul_tn<T>(const T *, const T *, T *, int64_t, int64_t,   \
                                int64_t, bool);                                \
  template void NS conv2d_same_fwd<T>(const T *, const T *, const T *, T *,    \
                                      int64_t, int64_t, int64_t, int64_t,      \
                                      int64_t, int64_t, int64_t);              \
  template void NS conv2d_same_bwd_input<T>(const T *, const T *, T *,         \
                                            int64_t, int64_t, int64_t,         \
                                            int64_t, int64_t, int64_t,         \
                                            int64_t);                          \
  template void NS conv2d_same_bwd_weights<T>(const T *, const T *, T *,       \
                                              int64_t, int64_t, int64_t,       \
                                              int64_t, int64_t, int64_t,       \
                                              int64_t);                        \
  template void NS conv2d_same_bwd_bias<T>(const T *, T *, int64_t, int64_t,   \
                                           int64_t, int64_t);                  \
  template void NS maxpool2d_fwd<T>(const T *, T *, int64_t *, int64_t,        \
                                    int64_t, int64_t, int64_t, int64_t,        \
                                    int64_t, int64_t, int64_t);                \
  template void NS maxpool2d_bwd<T>(const T *, const int64_t *, T *, int64_t);

SCENECRNN_INSTANTIATE(float, )
SCENECRNN_INSTANTIATE(double, )
SCENECRNN_INSTANTIATE(float, serial::)
SCENECRNN_INSTANTIATE(double, serial::)

#undef SCENECRNN_INSTANTIATE

}  // namespace scenecrnn::kernels
