// scenecrnn/src/calibrate.cc

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

#include "scenecrnn/calibrate.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace scenecrnn::calibrate {

double SvmModel::decision(int64_t cls, const float *x) const {
  double s = bias[cls];
  const double *w = weights.data() + cls * dim;
  for (int64_t i = 0; i < dim; ++i) s += w[i] * static_cast<double>(x[i]);
  return s;
}

LabeledFeatures extract_features(train::Model &model,
                                 const data::FeatureSet &set) {
  if (set.items.empty())
    throw std::invalid_argument("extract_features: empty feature set");
  std::vector<int64_t> idx(set.items.size());
  for (size_t i = 0; i < set.items.size(); ++i) idx[i] = static_cast<int64_t>(i);
  LabeledFeatures out;
  out.x = model.extract_features_batch(train::batch_from_items(set, idx));
  out.labels.reserve(set.items.size());
  for (const auto &item : set.items) out.labels.push_back(item.label);
  out.classes = set.classes;
  return out;
}

namespace {

struct HingeProblem {
  const Tensor<float> *x;
  std::vector<double> y;  // +1 / -1
  int64_t n, dim;
  double lambda;
};

// Primal objective lambda/2 ||w||^2 + mean hinge, with the bias folded into
// an extra regularized coordinate.
double objective(const HingeProblem &p, const std::vector<double> &w) {
  double norm2 = 0.0;
  for (double v : w) norm2 += v * v;
  double hinge = 0.0;
  for (int64_t i = 0; i < p.n; ++i) {
    double s = w[static_cast<size_t>(p.dim)];  // bias coordinate
    const float *row = p.x->data() + i * p.dim;
    for (int64_t j = 0; j < p.dim; ++j)
      s += w[static_cast<size_t>(j)] * static_cast<double>(row[j]);
    hinge += std::max(0.0, 1.0 - p.y[static_cast<size_t>(i)] * s);
  }
  return 0.5 * p.lambda * norm2 + hinge / static_cast<double>(p.n);
}

// Full-batch subgradient descent with Pegasos step size and ball projection;
// returns the average of the per-epoch iterates.
std::vector<double> solve_hinge(const HingeProblem &p, int64_t epochs,
                                std::vector<double> *objective_trace) {
  const size_t d = static_cast<size_t>(p.dim) + 1;  // + bias coordinate
  std::vector<double> w(d, 0.0), avg(d, 0.0), grad(d);
  const double radius = 1.0 / std::sqrt(p.lambda);
  for (int64_t t = 1; t <= epochs; ++t) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int64_t i = 0; i < p.n; ++i) {
      double s = w[static_cast<size_t>(p.dim)];
      const float *row = p.x->data() + i * p.dim;
      for (int64_t j = 0; j < p.dim; ++j)
        s += w[static_cast<size_t>(j)] * static_cast<double>(row[j]);
      const double yi = p.y[static_cast<size_t>(i)];
      if (yi * s < 1.0) {
        for (int64_t j = 0; j < p.dim; ++j)
          grad[static_cast<size_t>(j)] -= yi * static_cast<double>(row[j]);
        grad[static_cast<size_t>(p.dim)] -= yi;
      }
    }
    const double eta = 1.0 / (p.lambda * static_cast<double>(t));
    const double inv_n = 1.0 / static_cast<double>(p.n);
    double norm2 = 0.0;
    for (size_t j = 0; j < d; ++j) {
      w[j] -= eta * (p.lambda * w[j] + grad[j] * inv_n);
      norm2 += w[j] * w[j];
    }
    if (norm2 > radius * radius) {
      const double shrink = radius / std::sqrt(norm2);
      for (double &v : w) v *= shrink;
    }
    for (size_t j = 0; j < d; ++j)
      avg[j] += (w[j] - avg[j]) / static_cast<double>(t);
    if (objective_trace) objective_trace->push_back(objective(p, avg));
  }
  return avg;
}

}  // namespace

void platt_fit(const std::vector<double> &scores,
               const std::vector<int> &is_positive, double &a, double &b) {
  if (scores.size() != is_positive.size() || scores.empty())
    throw std::invalid_argument("platt_fit: bad inputs");
  const int64_t l = static_cast<int64_t>(scores.size());
  double prior1 = 0.0, prior0 = 0.0;
  for (int v : is_positive) (v ? prior1 : prior0) += 1.0;

  constexpr int kMaxIter = 100;
  constexpr double kMinStep = 1e-10;
  constexpr double kSigma = 1e-12;
  constexpr double kEps = 1e-5;
  const double hi_target = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo_target = 1.0 / (prior0 + 2.0);

  std::vector<double> t(static_cast<size_t>(l));
  for (int64_t i = 0; i < l; ++i)
    t[static_cast<size_t>(i)] = is_positive[static_cast<size_t>(i)] ? hi_target : lo_target;

  auto fun = [&](double A, double B) {
    double f = 0.0;
    for (int64_t i = 0; i < l; ++i) {
      const double fApB = scores[static_cast<size_t>(i)] * A + B;
      const double ti = t[static_cast<size_t>(i)];
      if (fApB >= 0)
        f += ti * fApB + std::log1p(std::exp(-fApB));
      else
        f += (ti - 1.0) * fApB + std::log1p(std::exp(fApB));
    }
    return f;
  };

  a = 0.0;
  b = std::log((prior0 + 1.0) / (prior1 + 1.0));
  double fval = fun(a, b);

  for (int iter = 0; iter < kMaxIter; ++iter) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (int64_t i = 0; i < l; ++i) {
      const double fApB = scores[static_cast<size_t>(i)] * a + b;
      double p, q;
      if (fApB >= 0) {
        p = std::exp(-fApB) / (1.0 + std::exp(-fApB));
        q = 1.0 / (1.0 + std::exp(-fApB));
      } else {
        p = 1.0 / (1.0 + std::exp(fApB));
        q = std::exp(fApB) / (1.0 + std::exp(fApB));
      }
      const double d2 = p * q;
      h11 += scores[static_cast<size_t>(i)] * scores[static_cast<size_t>(i)] * d2;
      h22 += d2;
      h21 += scores[static_cast<size_t>(i)] * d2;
      const double d1 = t[static_cast<size_t>(i)] - p;
      g1 += scores[static_cast<size_t>(i)] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < kEps && std::abs(g2) < kEps) break;

    const double det = h11 * h22 - h21 * h21;
    const double dA = -(h22 * g1 - h21 * g2) / det;
    const double dB = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * dA + g2 * dB;

    double stepsize = 1.0;
    while (stepsize >= kMinStep) {
      const double new_a = a + stepsize * dA;
      const double new_b = b + stepsize * dB;
      const double new_f = fun(new_a, new_b);
      if (new_f < fval + 1e-4 * stepsize * gd) {
        a = new_a;
        b = new_b;
        fval = new_f;
        break;
      }
      stepsize /= 2.0;
    }
    if (stepsize < kMinStep) break;  // line search failed
  }
}

SvmModel train_svm(const LabeledFeatures &features, double tradeoff,
                   std::vector<double> *objective_trace) {
  const int64_t n = features.x.shape[0];
  const int64_t dim = features.x.shape[1];
  const int64_t classes = features.classes;
  if (classes < 2)
    throw std::invalid_argument("train_svm: need at least two classes");
  std::vector<int64_t> per_class(static_cast<size_t>(classes), 0);
  for (int label : features.labels) {
    if (label < 0 || label >= classes)
      throw std::invalid_argument("train_svm: label out of range");
    per_class[static_cast<size_t>(label)] += 1;
  }
  for (int64_t c = 0; c < classes; ++c)
    if (per_class[static_cast<size_t>(c)] < 2)
      throw std::invalid_argument("train_svm: class " + std::to_string(c) +
                                  " has fewer than two samples");

  SvmModel model;
  model.classes = classes;
  model.dim = dim;
  model.tradeoff = tradeoff;
  model.weights = Tensor<double>(Shape{classes, dim});
  model.bias = Tensor<double>(Shape{classes});
  model.platt_a = Tensor<double>(Shape{classes});
  model.platt_b = Tensor<double>(Shape{classes});

  HingeProblem problem;
  problem.x = &features.x;
  problem.n = n;
  problem.dim = dim;
  problem.lambda = 1.0 / (tradeoff * static_cast<double>(n));
  problem.y.resize(static_cast<size_t>(n));

  for (int64_t c = 0; c < classes; ++c) {
    for (int64_t i = 0; i < n; ++i)
      problem.y[static_cast<size_t>(i)] =
          features.labels[static_cast<size_t>(i)] == c ? 1.0 : -1.0;
    const std::vector<double> w =
        solve_hinge(problem, kSvmEpochs, c == 0 ? objective_trace : nullptr);
    for (int64_t j = 0; j < dim; ++j)
      model.weights[c * dim + j] = w[static_cast<size_t>(j)];
    model.bias[c] = w[static_cast<size_t>(dim)];

    std::vector<double> scores(static_cast<size_t>(n));
    std::vector<int> pos(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
      scores[static_cast<size_t>(i)] =
          model.decision(c, features.x.data() + i * dim);
      pos[static_cast<size_t>(i)] =
          features.labels[static_cast<size_t>(i)] == c ? 1 : 0;
    }
    platt_fit(scores, pos, model.platt_a[c], model.platt_b[c]);
  }
  return model;
}

Tensor<double> svm_predict_proba(const SvmModel &model, const float *x,
                                 int64_t dim) {
  if (dim != model.dim)
    throw std::invalid_argument("svm_predict_proba: feature dim " +
                                std::to_string(dim) + ", model expects " +
                                std::to_string(model.dim));
  Tensor<double> probs(Shape{model.classes});
  double total = 0.0;
  for (int64_t c = 0; c < model.classes; ++c) {
    const double s = model.decision(c, x);
    const double fApB = model.platt_a[c] * s + model.platt_b[c];
    const double p = fApB >= 0 ? std::exp(-fApB) / (1.0 + std::exp(-fApB))
                               : 1.0 / (1.0 + std::exp(fApB));
    probs[c] = p;
    total += p;
  }
  for (int64_t c = 0; c < model.classes; ++c) probs[c] /= total;
  return probs;
}

Tensor<double> svm_predict_proba_batch(const SvmModel &model,
                                       const Tensor<float> &x) {
  const int64_t n = x.shape[0];
  Tensor<double> out(Shape{n, model.classes});
  for (int64_t i = 0; i < n; ++i) {
    const Tensor<double> row = svm_predict_proba(
        model, x.data() + i * x.shape[1], x.shape[1]);
    std::copy(row.values.begin(), row.values.end(),
              out.values.begin() + static_cast<size_t>(i * model.classes));
  }
  return out;
}

void save_svm(const std::string &path, const SvmModel &model) {
  std::vector<Tensor<float>> storage;
  storage.reserve(static_cast<size_t>(model.classes) * 4);
  NamedTensorRefs refs;
  for (int64_t c = 0; c < model.classes; ++c) {
    Tensor<float> w(Shape{model.dim});
    for (int64_t j = 0; j < model.dim; ++j)
      w[j] = static_cast<float>(model.weights[c * model.dim + j]);
    storage.push_back(std::move(w));
    storage.push_back(Tensor<float>(Shape{1}, {static_cast<float>(model.bias[c])}));
    storage.push_back(Tensor<float>(Shape{1}, {static_cast<float>(model.platt_a[c])}));
    storage.push_back(Tensor<float>(Shape{1}, {static_cast<float>(model.platt_b[c])}));
  }
  for (int64_t c = 0; c < model.classes; ++c) {
    const std::string idx = std::to_string(c);
    refs.emplace_back("svm.w." + idx, &storage[static_cast<size_t>(c * 4)]);
    refs.emplace_back("svm.b." + idx, &storage[static_cast<size_t>(c * 4 + 1)]);
    refs.emplace_back("platt.a." + idx, &storage[static_cast<size_t>(c * 4 + 2)]);
    refs.emplace_back("platt.b." + idx, &storage[static_cast<size_t>(c * 4 + 3)]);
  }
  save_tensor_container(path, refs);
}

SvmModel load_svm(const std::string &path) {
  const NamedTensors tensors = load_tensor_container(path);
  auto find = [&](const std::string &name) -> const Tensor<float> & {
    for (const auto &[n, t] : tensors)
      if (n == name) return t;
    throw std::runtime_error("svm file missing tensor '" + name + "'");
  };
  int64_t classes = 0;
  for (const auto &[name, t] : tensors)
    if (name.rfind("svm.w.", 0) == 0) ++classes;
  if (classes < 2) throw std::runtime_error("svm file has fewer than two classes");
  SvmModel model;
  model.classes = classes;
  model.dim = find("svm.w.0").numel();
  model.weights = Tensor<double>(Shape{classes, model.dim});
  model.bias = Tensor<double>(Shape{classes});
  model.platt_a = Tensor<double>(Shape{classes});
  model.platt_b = Tensor<double>(Shape{classes});
  for (int64_t c = 0; c < classes; ++c) {
    const std::string idx = std::to_string(c);
    const Tensor<float> &w = find("svm.w." + idx);
    if (w.numel() != model.dim)
      throw std::runtime_error("svm file: inconsistent feature dims");
    for (int64_t j = 0; j < model.dim; ++j) model.weights[c * model.dim + j] = w[j];
    model.bias[c] = find("svm.b." + idx)[0];
    model.platt_a[c] = find("platt.a." + idx)[0];
    model.platt_b[c] = find("platt.b." + idx)[0];
  }
  return model;
}

}  // namespace scenecrnn::calibrate
