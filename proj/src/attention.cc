// scenecrnn/src/attention.cc

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

#include "scenecrnn/attention.h"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace scenecrnn::attention {

namespace {

template <typename T>
Tensor<T> uniform_init(const Shape &shape, int64_t fan_in, std::mt19937 &rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> t(shape);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(dist(rng));
  return t;
}

// score = tanh(flat . W + b) . v for every row of flat; returns (rows, 1).
template <typename T>
ad::Node<T> *score_head(layers::ParamBinding<T> &binding, ad::Node<T> *flat,
                        Tensor<T> &w, Tensor<T> &b, Tensor<T> &v) {
  ad::Node<T> *hiddenv = ad::tanh(
      ad::add(ad::matmul(flat, binding.bind(w)), binding.bind(b)));
  ad::Node<T> *vk = ad::reshape(binding.bind(v), Shape{v.numel(), 1});
  return ad::matmul(hiddenv, vk);
}

}  // namespace

template <typename T>
AttentionParams<T> AttentionParams<T>::init(int64_t two_h, int64_t steps,
                                            int64_t att_size,
                                            std::mt19937 &rng) {
  AttentionParams<T> p;
  p.att_size = att_size;
  p.w_tem = uniform_init<T>(Shape{two_h, att_size}, two_h, rng);
  p.b_tem = Tensor<T>(Shape{att_size});
  p.v_tem = uniform_init<T>(Shape{att_size}, att_size, rng);
  p.w_spa = uniform_init<T>(Shape{steps, att_size}, steps, rng);
  p.b_spa = Tensor<T>(Shape{att_size});
  p.v_spa = uniform_init<T>(Shape{att_size}, att_size, rng);
  return p;
}

template <typename T>
layers::NamedParams<T> AttentionParams<T>::trainables(const std::string &prefix) {
  return {{prefix + "tem.w", &w_tem}, {prefix + "tem.b", &b_tem},
          {prefix + "tem.v", &v_tem}, {prefix + "spa.w", &w_spa},
          {prefix + "spa.b", &b_spa}, {prefix + "spa.v", &v_spa}};
}

template <typename T>
ad::Node<T> *temporal_attention(layers::ParamBinding<T> &binding,
                                AttentionParams<T> &params, ad::Node<T> *z) {
  if (z->value.rank() != 3)
    throw std::invalid_argument("temporal_attention: expected (N, 2H, T), got " +
                                shape_str(z->shape()));
  const int64_t n = z->shape()[0], two_h = z->shape()[1], t = z->shape()[2];
  // Columns z_t as rows of an (N*T, 2H) matrix.
  ad::Node<T> *cols =
      ad::reshape(ad::transpose(z, {0, 2, 1}), Shape{n * t, two_h});
  ad::Node<T> *scores =
      score_head(binding, cols, params.w_tem, params.b_tem, params.v_tem);
  return ad::softmax_over_axis(ad::reshape(scores, Shape{n, t}), 1);
}

template <typename T>
ad::Node<T> *spatial_attention(layers::ParamBinding<T> &binding,
                               AttentionParams<T> &params, ad::Node<T> *z) {
  if (z->value.rank() != 3)
    throw std::invalid_argument("spatial_attention: expected (N, 2H, T), got " +
                                shape_str(z->shape()));
  const int64_t n = z->shape()[0], two_h = z->shape()[1], t = z->shape()[2];
  // Rows z~_s as rows of an (N*2H, T) matrix.
  ad::Node<T> *rows = ad::reshape(z, Shape{n * two_h, t});
  ad::Node<T> *scores =
      score_head(binding, rows, params.w_spa, params.b_spa, params.v_spa);
  return ad::softmax_over_axis(ad::reshape(scores, Shape{n, two_h}), 1);
}

template <typename T>
ad::Node<T> *attention_mask(ad::Node<T> *a_spa, ad::Node<T> *a_tem) {
  return ad::outer_product(a_spa, a_tem);
}

template <typename T>
ad::Node<T> *attention_pool(ad::Node<T> *z, ad::Node<T> *mask) {
  if (z->shape() != mask->shape())
    throw std::invalid_argument("attention_pool: Z " + shape_str(z->shape()) +
                                " vs mask " + shape_str(mask->shape()));
  return ad::sum_over_axis(ad::tanh(ad::mul(mask, z)), z->value.rank() - 1);
}

template <typename T>
AttCrnnParams<T> AttCrnnParams<T>::init(int64_t freq_bins, int64_t in_channels,
                                        int64_t steps, int64_t base_filters,
                                        int64_t hidden, int64_t att_size,
                                        int64_t classes, unsigned seed) {
  std::mt19937 rng(seed);
  AttCrnnParams<T> p;
  p.freq_bins = freq_bins;
  p.in_channels = in_channels;
  p.steps = steps;
  p.base_filters = base_filters;
  p.hidden = hidden;
  p.att_size = att_size;
  p.classes = classes;
  p.conv = layers::ConvBlockParams<T>::init(freq_bins, in_channels,
                                            base_filters, rng);
  p.gru = layers::GruStackParams<T>::init(p.conv.out_features(), hidden,
                                          p.gru_layers, rng);
  p.att = AttentionParams<T>::init(2 * hidden, steps, att_size, rng);
  p.out = layers::DenseParams<T>::init(2 * hidden, classes, rng);
  return p;
}

template <typename T>
layers::NamedParams<T> AttCrnnParams<T>::trainables() {
  layers::NamedParams<T> out = conv.trainables("conv");
  for (auto &kv : gru.trainables("gru")) out.push_back(kv);
  for (auto &kv : att.trainables("att.")) out.push_back(kv);
  for (auto &kv : this->out.trainables("out.")) out.push_back(kv);
  return out;
}

template <typename T>
layers::NamedParams<T> AttCrnnParams<T>::state() {
  return conv.state("conv");
}

template <typename T>
AttCrnnOutput<T> att_crnn_forward(layers::ParamBinding<T> &binding,
                                  AttCrnnParams<T> &params, ad::Node<T> *x,
                                  const layers::ForwardOptions<T> &opts,
                                  layers::ConvTrace *trace) {
  AttCrnnOutput<T> out;
  ad::Node<T> *features =
      layers::conv_block_forward(binding, params.conv, x, opts, trace);
  out.z = layers::bigru_forward(binding, params.gru, features, opts);
  out.a_tem = temporal_attention(binding, params.att, out.z);
  out.a_spa = spatial_attention(binding, params.att, out.z);
  out.mask = attention_mask(out.a_spa, out.a_tem);
  out.pooled = attention_pool(out.z, out.mask);
  out.posterior = layers::dense_softmax(binding, params.out, out.pooled);
  return out;
}

void write_attention_csv(const std::string &path, const Tensor<float> &a_tem,
                         const Tensor<float> &a_spa,
                         const Tensor<float> &mask) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  auto write_row = [&os](const float *p, int64_t count) {
    for (int64_t i = 0; i < count; ++i) os << (i ? "," : "") << p[i];
    os << "\n";
  };
  write_row(a_tem.data(), a_tem.numel());
  write_row(a_spa.data(), a_spa.numel());
  const int64_t rows = a_spa.numel(), cols = a_tem.numel();
  if (mask.numel() != rows * cols)
    throw std::invalid_argument("attention csv: mask size mismatch");
  for (int64_t s = 0; s < rows; ++s) write_row(mask.data() + s * cols, cols);
}

#define SCENECRNN_INSTANTIATE_ATTENTION(T)                                     \
  template struct AttentionParams<T>;                                          \
  template ad::Node<T> *temporal_attention<T>(layers::ParamBinding<T> &,       \
                                              AttentionParams<T> &,            \
                                              ad::Node<T> *);                  \
  template ad::Node<T> *spatial_attention<T>(layers::ParamBinding<T> &,        \
                                             AttentionParams<T> &,             \
                                             ad::Node<T> *);                   \
  template ad::Node<T> *attention_mask<T>(ad::Node<T> *, ad::Node<T> *);       \
  template ad::Node<T> *attention_pool<T>(ad::Node<T> *, ad::Node<T> *);       \
  template struct AttCrnnParams<T>;                                            \
  template AttCrnnOutput<T> att_crnn_forward<T>(                               \
      layers::ParamBinding<T> &, AttCrnnParams<T> &, ad::Node<T> *,            \
      const layers::ForwardOptions<T> &, layers::ConvTrace *);

SCENECRNN_INSTANTIATE_ATTENTION(float)
SCENECRNN_INSTANTIATE_ATTENTION(double)

#undef SCENECRNN_INSTANTIATE_ATTENTION

}  // namespace scenecrnn::attention
