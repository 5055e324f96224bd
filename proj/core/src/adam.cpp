// Copyright 2026 The SIRL Authors.
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

#include "sirl/nn/adam.hpp"

#include <cmath>

#include "sirl/error.hpp"

namespace sirl::nn {

AdamState::AdamState(const AdamConfig& cfg, const MlpParams& like)
    : config(cfg), first_moment(like.zeros_like()), second_moment(like.zeros_like()) {
  if (!(cfg.learning_rate > 0.0) || !(cfg.decay > 0.0))
    throw ConfigError("Adam learning rate and decay must be positive");
}

double AdamState::effective_learning_rate() const {
  return config.learning_rate * std::pow(config.decay, static_cast<double>(step));
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state) {
  if (grads.layers.size() != params.layers.size() ||
      state.first_moment.layers.size() != params.layers.size())
    throw DataError("gradient structure does not match parameters");
  if (!grads.all_finite()) throw NumericalError("non-finite gradient passed to Adam");

  const AdamConfig& c = state.config;
  const double lr = state.effective_learning_rate();
  const double t = static_cast<double>(state.step + 1);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / correction1) /
                 ((v.array() / correction2).sqrt() + c.epsilon);
  };

  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    Layer& p = params.layers[i];
    const Layer& g = grads.layers[i];
    if (g.weight.rows() != p.weight.rows() || g.weight.cols() != p.weight.cols())
      throw DataError("gradient layer shape does not match parameters");
    update(p.weight, g.weight, state.first_moment.layers[i].weight,
           state.second_moment.layers[i].weight);
    update(p.bias, g.bias, state.first_moment.layers[i].bias,
           state.second_moment.layers[i].bias);
  }
  ++state.step;
}

}  // namespace sirl::nn
