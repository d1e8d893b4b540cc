// scenecrnn/include/scenecrnn/attention.h

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

#ifndef SCENECRNN_ATTENTION_H_
#define SCENECRNN_ATTENTION_H_

#include <random>
#include <string>

#include "scenecrnn/autodiff.h"
#include "scenecrnn/layers.h"
#include "scenecrnn/tensor.h"

// Spatio-temporal attention pooling. From the recurrent output Z (2H x T) two
// attention vectors are learned: a temporal one over the T columns and a
// spatial one over the 2H rows. Their outer product forms a rank-1 mask A,
// and the pooled feature is x_s = sum_t tanh(A[s,t] * Z[s,t]).
//
// Each scorer is a small two-stage head: score = v . tanh(W^T u + b) with an
// attention layer of configurable width, reduced to a scalar per column (or
// row) before the softmax.

namespace scenecrnn::attention {

template <typename T>
struct AttentionParams {
  int64_t att_size = 64;
  Tensor<T> w_tem;  // (2H, att)
  Tensor<T> b_tem;  // (att)
  Tensor<T> v_tem;  // (att)
  Tensor<T> w_spa;  // (T, att)
  Tensor<T> b_spa;  // (att)
  Tensor<T> v_spa;  // (att)

  static AttentionParams init(int64_t two_h, int64_t steps, int64_t att_size,
                              std::mt19937 &rng);
  layers::NamedParams<T> trainables(const std::string &prefix);
};

// Softmax over time of the per-column scores of Z (N, 2H, T); returns (N, T).
template <typename T>
ad::Node<T> *temporal_attention(layers::ParamBinding<T> &binding,
                                AttentionParams<T> &params, ad::Node<T> *z);

// Softmax over rows of the per-row scores; returns (N, 2H).
template <typename T>
ad::Node<T> *spatial_attention(layers::ParamBinding<T> &binding,
                               AttentionParams<T> &params, ad::Node<T> *z);

// Rank-1 mask A = a_spa (x) a_tem; (N, 2H) x (N, T) -> (N, 2H, T).
template <typename T>
ad::Node<T> *attention_mask(ad::Node<T> *a_spa, ad::Node<T> *a_tem);

// x_s = sum_t tanh(A[s,t] * Z[s,t]); (N, 2H, T) -> (N, 2H).
template <typename T>
ad::Node<T> *attention_pool(ad::Node<T> *z, ad::Node<T> *mask);

// The full Att-CRNN: conv block -> bidirectional GRU stack -> spatio-temporal
// attention pooling -> softmax classifier.
template <typename T>
struct AttCrnnParams {
  int64_t freq_bins = 64;   // M
  int64_t in_channels = 2;  // K
  int64_t steps = 80;       // T
  int64_t base_filters = 64;
  int64_t hidden = 128;     // H
  int64_t att_size = 64;
  int64_t classes = 2;
  int64_t gru_layers = 2;

  layers::ConvBlockParams<T> conv;
  layers::GruStackParams<T> gru;
  AttentionParams<T> att;
  layers::DenseParams<T> out;

  static AttCrnnParams init(int64_t freq_bins, int64_t in_channels,
                            int64_t steps, int64_t base_filters,
                            int64_t hidden, int64_t att_size, int64_t classes,
                            unsigned seed);
  layers::NamedParams<T> trainables();
  layers::NamedParams<T> state();
};

template <typename T>
struct AttCrnnOutput {
  ad::Node<T> *pooled = nullptr;     // (N, 2H) feature consumed by the SVM
  ad::Node<T> *posterior = nullptr;  // (N, C)
  ad::Node<T> *z = nullptr;          // (N, 2H, T) recurrent output
  ad::Node<T> *a_tem = nullptr;      // (N, T)
  ad::Node<T> *a_spa = nullptr;      // (N, 2H)
  ad::Node<T> *mask = nullptr;       // (N, 2H, T)
};

template <typename T>
AttCrnnOutput<T> att_crnn_forward(layers::ParamBinding<T> &binding,
                                  AttCrnnParams<T> &params, ad::Node<T> *x,
                                  const layers::ForwardOptions<T> &opts,
                                  layers::ConvTrace *trace = nullptr);

// Writes one segment's attention diagnostics as CSV: first line a_tem, second
// line a_spa, then the 2H rows of A (T values each).
void write_attention_csv(const std::string &path,
                         const Tensor<float> &a_tem,
                         const Tensor<float> &a_spa,
                         const Tensor<float> &mask);

}  // namespace scenecrnn::attention

#endif  // SCENECRNN_ATTENTION_H_
