// scenecrnn/include/scenecrnn/layers.h

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

#ifndef SCENECRNN_LAYERS_H_
#define SCENECRNN_LAYERS_H_

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "scenecrnn/autodiff.h"
#include "scenecrnn/tensor.h"

namespace scenecrnn::layers {

inline constexpr double kBnMomentum = 0.99;
inline constexpr double kBnEps = 1e-5;
inline constexpr double kConvDropout = 0.25;
inline constexpr double kRnnDropout = 0.1;

template <typename T>
using NamedParams = std::vector<std::pair<std::string, Tensor<T> *>>;

// Leaf bindings of persistent parameter tensors for one trace. Values are
// copied in; gradients are read back out after Tape::backward.
template <typename T>
struct ParamBinding {
  ad::Tape<T> *tape = nullptr;
  std::vector<std::pair<Tensor<T> *, ad::Node<T> *>> pairs;

  explicit ParamBinding(ad::Tape<T> &t) : tape(&t) {}

  ad::Node<T> *bind(Tensor<T> &param) {
    ad::Node<T> *n = tape->leaf(param, /*requires_grad=*/true);
    pairs.emplace_back(&param, n);
    return n;
  }

  // Gradient of the bound leaf for a persistent tensor (zeros when the loss
  // never touched it).
  Tensor<T> grad_of(const Tensor<T> &param) const {
    for (const auto &[p, node] : pairs)
      if (p == &param)
        return node->grad.values.empty() ? Tensor<T>(param.shape) : node->grad;
    throw std::invalid_argument("ParamBinding: tensor was not bound");
  }
};

template <typename T>
struct ForwardOptions {
  bool training = false;
  T conv_dropout = T(kConvDropout);
  T rnn_dropout = T(kRnnDropout);
  std::mt19937 *rng = nullptr;  // required when training with dropout > 0
};

// Constant node holding an inverted-dropout mask: entries are 0 with
// probability rate, else 1/(1-rate).
template <typename T>
ad::Node<T> *make_dropout_mask(ad::Tape<T> &tape, const Shape &shape, T rate,
                               std::mt19937 &rng);

// ---- convolutional block ----------------------------------------------------

template <typename T>
struct Conv2dLayer {
  Tensor<T> w;  // (cout, cin, kh, kw)
  Tensor<T> b;  // (cout)
  Tensor<T> bn_gamma, bn_beta;              // trained
  Tensor<T> bn_running_mean, bn_running_var;  // state
};

// Three conv layers, 5x5 -> 3x3 -> 2x2 kernels with filter counts doubling
// (base -> 2*base -> 4*base), each followed by ReLU, batch norm, dropout and
// a 4x1 frequency max pool. Temporal size is preserved throughout.
template <typename T>
struct ConvBlockParams {
  int64_t freq_bins = 64;    // M; must be divisible by 64
  int64_t in_channels = 2;   // K
  int64_t base_filters = 64;
  std::vector<Conv2dLayer<T>> convs;

  static ConvBlockParams init(int64_t freq_bins, int64_t in_channels,
                              int64_t base_filters, std::mt19937 &rng);

  int64_t out_features() const { return (freq_bins / 64) * base_filters * 4; }
  NamedParams<T> trainables(const std::string &prefix);
  NamedParams<T> state(const std::string &prefix);
};

// Shapes after every conv and pool stage, for shape-conformance checks.
struct ConvTrace {
  std::vector<Shape> stages;
};

// Input (N, K, M, T) -> features (N, F, T) with F = (M/64) * 4 * base.
template <typename T>
ad::Node<T> *conv_block_forward(ParamBinding<T> &binding,
                                ConvBlockParams<T> &params, ad::Node<T> *x,
                                const ForwardOptions<T> &opts,
                                ConvTrace *trace = nullptr);

// ---- recurrent stack --------------------------------------------------------

template <typename T>
struct GruDirParams {
  Tensor<T> wz, uz, bz;  // update gate
  Tensor<T> wr, ur, br;  // reset gate
  Tensor<T> wh, uh, bh;  // candidate
};

template <typename T>
struct GruLayerParams {
  GruDirParams<T> forward, backward;
};

template <typename T>
struct GruStackParams {
  int64_t hidden = 128;
  std::vector<GruLayerParams<T>> layers;
  Tensor<T> proj_w;  // (2H, 2H), applied once after the top layer
  Tensor<T> proj_b;  // (2H)

  static GruStackParams init(int64_t input_dim, int64_t hidden,
                             int64_t num_layers, std::mt19937 &rng);
  NamedParams<T> trainables(const std::string &prefix);
};

// Bound leaves of one GRU direction, shared across time steps.
template <typename T>
struct GruDirNodes {
  ad::Node<T> *wz, *uz, *bz, *wr, *ur, *br, *wh, *uh, *bh;
};

template <typename T>
GruDirNodes<T> bind_gru_dir(ParamBinding<T> &binding, GruDirParams<T> &params);

// One GRU step: z and r are sigmoid gates, the candidate applies the reset
// gate to the previous state before the recurrent matmul, and
// h = h_prev + z * (candidate - h_prev). x is (N, F), h_prev (N, H).
template <typename T>
ad::Node<T> *gru_step(const GruDirNodes<T> &p, ad::Node<T> *x,
                      ad::Node<T> *h_prev);

// Two stacked bidirectional layers over (N, F, T); each step output is the
// backward state concatenated with the forward state, and the top layer goes
// through the (2H, 2H) output projection. Returns Z of shape (N, 2H, T).
template <typename T>
ad::Node<T> *bigru_forward(ParamBinding<T> &binding, GruStackParams<T> &params,
                           ad::Node<T> *seq, const ForwardOptions<T> &opts);

// ---- output layer -----------------------------------------------------------

template <typename T>
struct DenseParams {
  Tensor<T> w;  // (in, classes)
  Tensor<T> b;  // (classes)

  static DenseParams init(int64_t in_dim, int64_t classes, std::mt19937 &rng);
  NamedParams<T> trainables(const std::string &prefix);
};

// Softmax posterior over classes; x is (N, in).
template <typename T>
ad::Node<T> *dense_softmax(ParamBinding<T> &binding, DenseParams<T> &params,
                           ad::Node<T> *x);

// ---- CNN baseline -----------------------------------------------------------

template <typename T>
struct CnnBaselineParams {
  int64_t freq_bins = 64;
  int64_t in_channels = 2;
  int64_t base_filters = 64;
  int64_t classes = 2;
  ConvBlockParams<T> conv;
  DenseParams<T> out;

  static CnnBaselineParams init(int64_t freq_bins, int64_t in_channels,
                                int64_t base_filters, int64_t classes,
                                unsigned seed);
  NamedParams<T> trainables();
  NamedParams<T> state();
};

// Conv block followed by global max pooling over time, then dense softmax.
// Returns the (N, C) posterior; pooled_out (optional) receives the (N, F)
// feature node.
template <typename T>
ad::Node<T> *cnn_baseline_forward(ParamBinding<T> &binding,
                                  CnnBaselineParams<T> &params, ad::Node<T> *x,
                                  const ForwardOptions<T> &opts,
                                  ad::Node<T> **pooled_out = nullptr,
                                  ConvTrace *trace = nullptr);

}  // namespace scenecrnn::layers

#endif  // SCENECRNN_LAYERS_H_
