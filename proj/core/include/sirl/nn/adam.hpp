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

#ifndef SIRL_NN_ADAM_HPP_
#define SIRL_NN_ADAM_HPP_

#include <cstddef>

#include "sirl/nn/mlp.hpp"

namespace sirl::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  // Multiplicative learning-rate decay applied once per optimizer step.
  double decay = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::size_t step = 0;
  MlpParams first_moment;
  MlpParams second_moment;

  AdamState() = default;
  AdamState(const AdamConfig& cfg, const MlpParams& like);

  // base * decay^step
  double effective_learning_rate() const;
};

// Bias-corrected Adam update in place. Throws NumericalError on non-finite
// gradients; parameters and state are left untouched in that case.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state);

}  // namespace sirl::nn

#endif  // SIRL_NN_ADAM_HPP_
