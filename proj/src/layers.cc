// scenecrnn/src/layers.cc

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

#include "scenecrnn/layers.h"

#include <cmath>

namespace scenecrnn::layers {

namespace {

// Fan-in scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename T>
Tensor<T> uniform_init(const Shape &shape, int64_t fan_in, std::mt19937 &rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> t(shape);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(dist(rng));
  return t;
}

}  // namespace

template <typename T>
ad::Node<T> *make_dropout_mask(ad::Tape<T> &tape, const Shape &shape, T rate,
                               std::mt19937 &rng) {
  if (rate < T(0) || rate >= T(1))
    throw std::invalid_argument("dropout rate must lie in [0, 1)");
  Tensor<T> mask(shape);
  const double keep = 1.0 - static_cast<double>(rate);
  const T scale = static_cast<T>(1.0 / keep);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int64_t i = 0; i < mask.numel(); ++i)
    mask[i] = dist(rng) < keep ? scale : T(0);
  return tape.constant(std::move(mask));
}

// ---- convolutional block ----------------------------------------------------

template <typename T>
ConvBlockParams<T> ConvBlockParams<T>::init(int64_t freq_bins,
                                            int64_t in_channels,
                                            int64_t base_filters,
                                            std::mt19937 &rng) {
  if (freq_bins % 64 != 0)
    throw std::invalid_argument(
        "conv block: frequency bins (" + std::to_string(freq_bins) +
        ") must be divisible by 64 for the three 4x1 pooling stages");
  ConvBlockParams<T> p;
  p.freq_bins = freq_bins;
  p.in_channels = in_channels;
  p.base_filters = base_filters;
  const int64_t kernels[3][2] = {{5, 5}, {3, 3}, {2, 2}};
  int64_t cin = in_channels;
  for (int i = 0; i < 3; ++i) {
    const int64_t cout = base_filters << i;
    const int64_t kh = kernels[i][0], kw = kernels[i][1];
    Conv2dLayer<T> layer;
    layer.w = uniform_init<T>(Shape{cout, cin, kh, kw}, cin * kh * kw, rng);
    layer.b = Tensor<T>(Shape{cout});
    layer.bn_gamma = Tensor<T>(Shape{cout}, T(1));
    layer.bn_beta = Tensor<T>(Shape{cout});
    layer.bn_running_mean = Tensor<T>(Shape{cout});
    layer.bn_running_var = Tensor<T>(Shape{cout}, T(1));
    p.convs.push_back(std::move(layer));
    cin = cout;
  }
  return p;
}

template <typename T>
NamedParams<T> ConvBlockParams<T>::trainables(const std::string &prefix) {
  NamedParams<T> out;
  for (size_t i = 0; i < convs.size(); ++i) {
    const std::string base = prefix + std::to_string(i + 1);
    out.emplace_back(base + ".w", &convs[i].w);
    out.emplace_back(base + ".b", &convs[i].b);
    out.emplace_back(base + ".bn.gamma", &convs[i].bn_gamma);
    out.emplace_back(base + ".bn.beta", &convs[i].bn_beta);
  }
  return out;
}

template <typename T>
NamedParams<T> ConvBlockParams<T>::state(const std::string &prefix) {
  NamedParams<T> out;
  for (size_t i = 0; i < convs.size(); ++i) {
    const std::string base = prefix + std::to_string(i + 1);
    out.emplace_back(base + ".bn.running_mean", &convs[i].bn_running_mean);
    out.emplace_back(base + ".bn.running_var", &convs[i].bn_running_var);
  }
  return out;
}

template <typename T>
ad::Node<T> *conv_block_forward(ParamBinding<T> &binding,
                                ConvBlockParams<T> &params, ad::Node<T> *x,
                                const ForwardOptions<T> &opts,
                                ConvTrace *trace) {
  if (x->value.rank() != 4 || x->shape()[1] != params.in_channels ||
      x->shape()[2] != params.freq_bins)
    throw std::invalid_argument("conv block: input " + shape_str(x->shape()) +
                                " does not match (N," +
                                std::to_string(params.in_channels) + "," +
                                std::to_string(params.freq_bins) + ",T)");
  if (opts.training && opts.conv_dropout > T(0) && opts.rng == nullptr)
    throw std::invalid_argument("conv block: training dropout needs an rng");

  ad::Tape<T> &tape = *binding.tape;
  ad::Node<T> *h = x;
  for (Conv2dLayer<T> &layer : params.convs) {
    ad::Node<T> *w = binding.bind(layer.w);
    ad::Node<T> *b = binding.bind(layer.b);
    h = ad::conv_2d_same(h, w, b);
    if (trace) trace->stages.push_back(h->shape());
    h = ad::relu(h);
    h = ad::batch_norm(h, binding.bind(layer.bn_gamma),
                       binding.bind(layer.bn_beta), &layer.bn_running_mean,
                       &layer.bn_running_var, opts.training,
                       T(kBnMomentum), T(kBnEps));
    if (opts.training && opts.conv_dropout > T(0))
      h = ad::dropout_mask_apply(
          h, make_dropout_mask(tape, h->shape(), opts.conv_dropout, *opts.rng));
    h = ad::max_pool_2d(h, 4, 1, 4, 1);
    if (trace) trace->stages.push_back(h->shape());
  }
  // (N, 4*base, M/64, T) -> (N, F, T); channel and frequency axes are
  // adjacent, so this is a pure reshape.
  const int64_t n = h->shape()[0];
  const int64_t f = h->shape()[1] * h->shape()[2];
  return ad::reshape(h, Shape{n, f, h->shape()[3]});
}

// ---- recurrent stack --------------------------------------------------------

template <typename T>
GruStackParams<T> GruStackParams<T>::init(int64_t input_dim, int64_t hidden,
                                          int64_t num_layers,
                                          std::mt19937 &rng) {
  GruStackParams<T> p;
  p.hidden = hidden;
  int64_t in = input_dim;
  for (int64_t l = 0; l < num_layers; ++l) {
    GruLayerParams<T> layer;
    for (GruDirParams<T> *dir : {&layer.forward, &layer.backward}) {
      dir->wz = uniform_init<T>(Shape{in, hidden}, in, rng);
      dir->uz = uniform_init<T>(Shape{hidden, hidden}, hidden, rng);
      dir->bz = Tensor<T>(Shape{hidden});
      dir->wr = uniform_init<T>(Shape{in, hidden}, in, rng);
      dir->ur = uniform_init<T>(Shape{hidden, hidden}, hidden, rng);
      dir->br = Tensor<T>(Shape{hidden});
      dir->wh = uniform_init<T>(Shape{in, hidden}, in, rng);
      dir->uh = uniform_init<T>(Shape{hidden, hidden}, hidden, rng);
      dir->bh = Tensor<T>(Shape{hidden});
    }
    p.layers.push_back(std::move(layer));
    in = 2 * hidden;
  }
  p.proj_w = uniform_init<T>(Shape{2 * hidden, 2 * hidden}, 2 * hidden, rng);
  p.proj_b = Tensor<T>(Shape{2 * hidden});
  return p;
}

template <typename T>
NamedParams<T> GruStackParams<T>::trainables(const std::string &prefix) {
  NamedParams<T> out;
  for (size_t l = 0; l < layers.size(); ++l) {
    for (auto [dir, tag] : {std::pair{&layers[l].forward, "fw"},
                            std::pair{&layers[l].backward, "bw"}}) {
      const std::string base =
          prefix + std::to_string(l + 1) + "." + tag + ".";
      out.emplace_back(base + "wz", &dir->wz);
      out.emplace_back(base + "uz", &dir->uz);
      out.emplace_back(base + "bz", &dir->bz);
      out.emplace_back(base + "wr", &dir->wr);
      out.emplace_back(base + "ur", &dir->ur);
      out.emplace_back(base + "br", &dir->br);
      out.emplace_back(base + "wh", &dir->wh);
      out.emplace_back(base + "uh", &dir->uh);
      out.emplace_back(base + "bh", &dir->bh);
    }
  }
  out.emplace_back(prefix + "proj.w", &proj_w);
  out.emplace_back(prefix + "proj.b", &proj_b);
  return out;
}

template <typename T>
GruDirNodes<T> bind_gru_dir(ParamBinding<T> &binding, GruDirParams<T> &params) {
  return GruDirNodes<T>{
      binding.bind(params.wz), binding.bind(params.uz), binding.bind(params.bz),
      binding.bind(params.wr), binding.bind(params.ur), binding.bind(params.br),
      binding.bind(params.wh), binding.bind(params.uh), binding.bind(params.bh)};
}

template <typename T>
ad::Node<T> *gru_step(const GruDirNodes<T> &p, ad::Node<T> *x,
                      ad::Node<T> *h_prev) {
  ad::Node<T> *z = ad::sigmoid(
      ad::add(ad::add(ad::matmul(x, p.wz), ad::matmul(h_prev, p.uz)), p.bz));
  ad::Node<T> *r = ad::sigmoid(
      ad::add(ad::add(ad::matmul(x, p.wr), ad::matmul(h_prev, p.ur)), p.br));
  ad::Node<T> *cand = ad::tanh(ad::add(
      ad::add(ad::matmul(x, p.wh), ad::matmul(ad::mul(r, h_prev), p.uh)),
      p.bh));
  // h = (1-z) . h_prev + z . cand
  return ad::add(h_prev, ad::mul(z, ad::sub(cand, h_prev)));
}

template <typename T>
ad::Node<T> *bigru_forward(ParamBinding<T> &binding, GruStackParams<T> &params,
                           ad::Node<T> *seq, const ForwardOptions<T> &opts) {
  if (seq->value.rank() != 3)
    throw std::invalid_argument("bigru: expected (N, F, T) input, got " +
                                shape_str(seq->shape()));
  if (opts.training && opts.rnn_dropout > T(0) && opts.rng == nullptr)
    throw std::invalid_argument("bigru: training dropout needs an rng");
  ad::Tape<T> &tape = *binding.tape;
  const int64_t n = seq->shape()[0];
  const int64_t steps = seq->shape()[2];
  const int64_t hidden = params.hidden;

  auto apply_dropout = [&](ad::Node<T> *v) {
    if (opts.training && opts.rnn_dropout > T(0))
      v = ad::dropout_mask_apply(
          v, make_dropout_mask(tape, v->shape(), opts.rnn_dropout, *opts.rng));
    return v;
  };

  ad::Node<T> *h = apply_dropout(seq);  // dropout on the stack input
  for (GruLayerParams<T> &layer : params.layers) {
    const int64_t in_dim = h->shape()[1];
    std::vector<ad::Node<T> *> xs(static_cast<size_t>(steps));
    for (int64_t t = 0; t < steps; ++t)
      xs[static_cast<size_t>(t)] =
          ad::reshape(ad::slice(h, 2, t, t + 1), Shape{n, in_dim});

    const GruDirNodes<T> fw = bind_gru_dir(binding, layer.forward);
    const GruDirNodes<T> bw = bind_gru_dir(binding, layer.backward);

    std::vector<ad::Node<T> *> hf(static_cast<size_t>(steps));
    ad::Node<T> *state = tape.constant(Tensor<T>(Shape{n, hidden}));
    for (int64_t t = 0; t < steps; ++t) {
      state = gru_step(fw, xs[static_cast<size_t>(t)], state);
      hf[static_cast<size_t>(t)] = state;
    }
    std::vector<ad::Node<T> *> hb(static_cast<size_t>(steps));
    state = tape.constant(Tensor<T>(Shape{n, hidden}));
    for (int64_t t = steps - 1; t >= 0; --t) {
      state = gru_step(bw, xs[static_cast<size_t>(t)], state);
      hb[static_cast<size_t>(t)] = state;
    }

    // Per step: backward state first, then forward, as columns of the
    // (N, 2H, T) layer output.
    std::vector<ad::Node<T> *> cols(static_cast<size_t>(steps));
    for (int64_t t = 0; t < steps; ++t) {
      ad::Node<T> *c = ad::concat<T>(
          {hb[static_cast<size_t>(t)], hf[static_cast<size_t>(t)]}, 1);
      cols[static_cast<size_t>(t)] = ad::reshape(c, Shape{n, 2 * hidden, 1});
    }
    h = apply_dropout(ad::concat(cols, 2));
  }

  // Output projection applied once after the top layer, shared across steps.
  ad::Node<T> *pw = binding.bind(params.proj_w);
  ad::Node<T> *pb = binding.bind(params.proj_b);
  ad::Node<T> *flat = ad::reshape(ad::transpose(h, {0, 2, 1}),
                                  Shape{n * steps, 2 * hidden});
  ad::Node<T> *proj = ad::add(ad::matmul(flat, pw), pb);
  return ad::transpose(ad::reshape(proj, Shape{n, steps, 2 * hidden}),
                       {0, 2, 1});
}

// ---- output layer -----------------------------------------------------------

template <typename T>
DenseParams<T> DenseParams<T>::init(int64_t in_dim, int64_t classes,
                                    std::mt19937 &rng) {
  DenseParams<T> p;
  p.w = uniform_init<T>(Shape{in_dim, classes}, in_dim, rng);
  p.b = Tensor<T>(Shape{classes});
  return p;
}

template <typename T>
NamedParams<T> DenseParams<T>::trainables(const std::string &prefix) {
  return {{prefix + "w", &w}, {prefix + "b", &b}};
}

template <typename T>
ad::Node<T> *dense_softmax(ParamBinding<T> &binding, DenseParams<T> &params,
                           ad::Node<T> *x) {
  ad::Node<T> *logits =
      ad::add(ad::matmul(x, binding.bind(params.w)), binding.bind(params.b));
  return ad::softmax_over_axis(logits, 1);
}

// ---- CNN baseline -----------------------------------------------------------

template <typename T>
CnnBaselineParams<T> CnnBaselineParams<T>::init(int64_t freq_bins,
                                                int64_t in_channels,
                                                int64_t base_filters,
                                                int64_t classes,
                                                unsigned seed) {
  std::mt19937 rng(seed);
  CnnBaselineParams<T> p;
  p.freq_bins = freq_bins;
  p.in_channels = in_channels;
  p.base_filters = base_filters;
  p.classes = classes;
  p.conv = ConvBlockParams<T>::init(freq_bins, in_channels, base_filters, rng);
  p.out = DenseParams<T>::init(p.conv.out_features(), classes, rng);
  return p;
}

template <typename T>
NamedParams<T> CnnBaselineParams<T>::trainables() {
  NamedParams<T> out = conv.trainables("conv");
  for (auto &kv : this->out.trainables("out.")) out.push_back(kv);
  return out;
}

template <typename T>
NamedParams<T> CnnBaselineParams<T>::state() {
  return conv.state("conv");
}

template <typename T>
ad::Node<T> *cnn_baseline_forward(ParamBinding<T> &binding,
                                  CnnBaselineParams<T> &params, ad::Node<T> *x,
                                  const ForwardOptions<T> &opts,
                                  ad::Node<T> **pooled_out, ConvTrace *trace) {
  ad::Node<T> *features = conv_block_forward(binding, params.conv, x, opts, trace);
  ad::Node<T> *pooled = ad::max_over_axis(features, 2);  // global max over time
  if (pooled_out) *pooled_out = pooled;
  return dense_softmax(binding, params.out, pooled);
}

// ---- explicit instantiations -----------------------------------------------

#define SCENECRNN_INSTANTIATE_LAYERS(T)                                        \
  template ad::Node<T> *make_dropout_mask<T>(ad::Tape<T> &, const Shape &, T,  \
                                             std::mt19937 &);                  \
  template struct ConvBlockParams<T>;                                          \
  template ad::Node<T> *conv_block_forward<T>(                                 \
      ParamBinding<T> &, ConvBlockParams<T> &, ad::Node<T> *,                  \
      const ForwardOptions<T> &, ConvTrace *);                                 \
  template struct GruStackParams<T>;                                           \
  template GruDirNodes<T> bind_gru_dir<T>(ParamBinding<T> &,                   \
                                          GruDirParams<T> &);                  \
  template ad::Node<T> *gru_step<T>(const GruDirNodes<T> &, ad::Node<T> *,     \
                                    ad::Node<T> *);                            \
  template ad::Node<T> *bigru_forward<T>(ParamBinding<T> &,                    \
                                         GruStackParams<T> &, ad::Node<T> *,   \
                                         const ForwardOptions<T> &);           \
  template struct DenseParams<T>;                                              \
  template ad::Node<T> *dense_softmax<T>(ParamBinding<T> &, DenseParams<T> &,  \
                                         ad::Node<T> *);                       \
  template struct CnnBaselineParams<T>;                                        \
  template ad::Node<T> *cnn_baseline_forward<T>(                               \
      ParamBinding<T> &, CnnBaselineParams<T> &, ad::Node<T> *,                \
      const ForwardOptions<T> &, ad::Node<T> **, ConvTrace *);

SCENECRNN_INSTANTIATE_LAYERS(float)
SCENECRNN_INSTANTIATE_LAYERS(double)

#undef SCENECRNN_INSTANTIATE_LAYERS

}  // namespace scenecrnn::layers
