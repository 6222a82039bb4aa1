/*
 * Copyright 2026 The fedsel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fedsel/dataset.hpp"
#include "fedsel/errors.hpp"
#include "fedsel/model.hpp"
#include "fedsel/numeric.hpp"
#include "fedsel/rng.hpp"

namespace fedsel {

struct Hyperparams {
  double learning_rate = 0.01;
  int batch_size = 20;
  int epochs = 1;

  void validate() const {
    if (!(learning_rate >= 0.0)) throw InvalidArgument("learning rate must be nonnegative");
    if (batch_size <= 0) throw InvalidArgument("batch size must be positive");
    if (epochs <= 0) throw InvalidArgument("epochs must be positive");
  }
};

struct TrainReport {
  double pre_loss = 0.0;
  double post_loss = 0.0;
  std::size_t samples = 0;
  std::size_t steps = 0;
};

struct TrainResult {
  ParamVector params;
  TrainReport report;
};

inline void check_shape(const Model& model, std::span<const double> params, const LocalDataset& data) {
  if (params.size() != model.param_count()) {
    throw InvalidArgument("parameter vector length " + std::to_string(params.size()) +
                          " does not match model (" + std::to_string(model.param_count()) + ")");
  }
  if (!data.empty() && data.dim() != model.input_size()) {
    throw InvalidArgument("dataset feature dimension does not match model input");
  }
}

// Mean cross-entropy over every sample, parameters untouched. The sum is
// exact, so the result does not depend on sample order.
inline double loss_pass(const Model& model, std::span<const double> params, const LocalDataset& data) {
  if (data.empty()) throw InvalidArgument("loss_pass: empty dataset");
  check_shape(model, params, data);
  Workspace ws = model.workspace();
  std::vector<double> logits(model.classes()), dl(model.classes());
  ExactSum total;
  for (std::size_t k = 0; k < data.size(); ++k) {
    model.forward(params, data.features(k), ws, logits);
    total.add(softmax_cross_entropy(logits, data.label(k), dl));
  }
  return total.value() / static_cast<double>(data.size());
}

// Mini-batch SGD on the mean batch cross-entropy: epochs * ceil(|D| / batch)
// steps, reshuffled every epoch from `seed`.
inline TrainResult local_train(const Model& model, std::span<const double> params, const LocalDataset& data,
                               const Hyperparams& hyper, std::uint64_t seed) {
  if (data.empty()) throw InvalidArgument("local_train: empty dataset");
  hyper.validate();
  check_shape(model, params, data);
  TrainResult result;
  result.params.assign(params.begin(), params.end());
  result.report.samples = data.size();
  result.report.pre_loss = loss_pass(model, params, data);

  Rng rng(seed);
  Workspace ws = model.workspace();
  std::vector<double> logits(model.classes()), dl(model.classes());
  std::vector<double> grad(model.param_count());
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t batch = static_cast<std::size_t>(hyper.batch_size);
  for (int e = 0; e < hyper.epochs; ++e) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t k = order[b];
        model.forward(result.params, data.features(k), ws, logits);
        softmax_cross_entropy(logits, data.label(k), dl);
        model.backward(result.params, data.features(k), ws, dl, grad);
      }
      const double scale = hyper.learning_rate / static_cast<double>(end - start);
      if (scale != 0.0) {
        for (std::size_t j = 0; j < grad.size(); ++j) result.params[j] -= scale * grad[j];
      }
      ++result.report.steps;
    }
  }
  result.report.post_loss = loss_pass(model, result.params, data);
  return result;
}

struct Contribution {
  std::span<const double> params;
  std::size_t samples = 0;
};

// Sample-weighted average, computed as a running weighted mean: identical
// inputs reproduce themselves exactly.
inline ParamVector fedavg(std::span<const Contribution> contributions) {
  if (contributions.empty()) throw NoClientsError("fedavg: no contributions");
  const std::size_t n = contributions.front().params.size();
  for (const auto& c : contributions) {
    if (c.params.size() != n) throw InvalidArgument("fedavg: parameter vectors differ in length");
    if (c.samples == 0) throw InvalidArgument("fedavg: sample counts must be positive");
  }
  ParamVector avg(contributions.front().params.begin(), contributions.front().params.end());
  double seen = static_cast<double>(contributions.front().samples);
  for (std::size_t c = 1; c < contributions.size(); ++c) {
    const double count = static_cast<double>(contributions[c].samples);
    seen += count;
    const double w = count / seen;
    const auto& x = contributions[c].params;
    for (std::size_t j = 0; j < n; ++j) avg[j] += w * (x[j] - avg[j]);
  }
  return avg;
}

struct LossShare {
  double loss = 0.0;
  std::size_t samples = 0;
};

inline double global_loss(std::span<const LossShare> losses) {
  if (losses.empty()) throw InvalidArgument("global_loss: no clients");
  ExactSum weighted;
  std::size_t total = 0;
  for (const auto& l : losses) {
    if (l.samples == 0) throw InvalidArgument("global_loss: sample counts must be positive");
    weighted.add(l.loss * static_cast<double>(l.samples));
    total += l.samples;
  }
  return weighted.value() / static_cast<double>(total);
}

inline double accuracy(const Model& model, std::span<const double> params, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  Workspace ws = model.workspace();
  std::vector<double> logits(model.classes());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    model.forward(params, data.row(i), ws, logits);
    const auto best = std::max_element(logits.begin(), logits.end()) - logits.begin();
    if (best == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace fedsel
