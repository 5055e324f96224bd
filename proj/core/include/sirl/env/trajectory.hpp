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

#ifndef SIRL_ENV_TRAJECTORY_HPP_
#define SIRL_ENV_TRAJECTORY_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sirl/nn/mlp.hpp"

namespace sirl::env {

enum class EnvId { kGridRobot, kArmLite };

std::string to_string(EnvId env);
// Accepts "gridrobot" and "armlite" (case-insensitive). Throws UsageError.
EnvId parse_env(const std::string& name);

// Ground-truth feature values, one per hand-coded feature.
using FeatureVector = std::array<double, 4>;
inline constexpr std::size_t kFeatureCount = 4;

// A fixed-length trajectory stored as the flat vector the networks consume:
// `num_states` consecutive blocks of `state_dim` values, followed by any
// trailing extras (GridRobot appends the end-state angle).
struct Trajectory {
  EnvId env = EnvId::kGridRobot;
  std::size_t num_states = 0;
  std::size_t state_dim = 0;
  std::vector<double> input;

  std::span<const double> state(std::size_t i) const {
    return std::span<const double>(input).subspan(i * state_dim, state_dim);
  }
  std::size_t width() const { return input.size(); }

  bool operator==(const Trajectory&) const = default;
};

// Stacks trajectories into a batch, one per row. Throws DataError on
// inconsistent widths.
nn::Matrix stack_inputs(std::span<const Trajectory> trajectories);
nn::Matrix stack_inputs(std::span<const Trajectory> trajectories,
                        std::span<const std::size_t> indices);

}  // namespace sirl::env

#endif  // SIRL_ENV_TRAJECTORY_HPP_
