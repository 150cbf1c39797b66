// Copyright 2026 The slaterl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "slaterl/core/error.hpp"

namespace slaterl::optim {

/// Full-batch gradient descent with step halving. A step is accepted only if
/// it does not raise the loss, so the recorded curve is non-increasing.
struct DescentConfig {
  std::size_t epochs = 100;
  double learning_rate = 0.1;
  double growth = 1.2;      // step growth after an accepted step
  std::size_t max_halvings = 30;
};

struct DescentResult {
  std::vector<double> loss_curve;  // loss after each epoch; [0] is the initial loss
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
};

/// loss_and_grad(params, grad) returns the loss and fills grad (same size).
using LossFn = std::function<double(const std::vector<double>&, std::vector<double>&)>;

inline DescentResult descend(std::vector<double>& params, const LossFn& loss_and_grad,
                             const DescentConfig& cfg, const char* what = "loss") {
  if (!(cfg.learning_rate > 0.0)) throw ContractError("learning rate must be positive");
  DescentResult result;
  std::vector<double> grad(params.size(), 0.0);
  double loss = loss_and_grad(params, grad);
  if (!std::isfinite(loss)) throw DivergenceError(0, std::string(what) + " is not finite");
  result.loss_curve.push_back(loss);

  double lr = cfg.learning_rate;
  std::vector<double> trial(params.size());
  std::vector<double> trial_grad(params.size());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    bool accepted = false;
    for (std::size_t h = 0; h <= cfg.max_halvings; ++h) {
      for (std::size_t i = 0; i < params.size(); ++i) trial[i] = params[i] - lr * grad[i];
      const double trial_loss = loss_and_grad(trial, trial_grad);
      if (std::isnan(trial_loss)) {
        throw DivergenceError(epoch, std::string(what) + " became NaN");
      }
      if (trial_loss <= loss) {
        params.swap(trial);
        grad.swap(trial_grad);
        loss = trial_loss;
        accepted = true;
        lr *= cfg.growth;
        break;
      }
      lr *= 0.5;
    }
    result.loss_curve.push_back(loss);
    result.epochs_run = epoch;
    if (!accepted) break;  // no descent direction left at machine precision
  }
  result.final_loss = loss;
  return result;
}

}  // namespace slaterl::optim
