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

#ifndef SIRL_ENV_DEFORMATION_HPP_
#define SIRL_ENV_DEFORMATION_HPP_

#include <cstddef>
#include <vector>

#include "sirl/nn/mlp.hpp"

namespace sirl::env {

// Waypoints are stored one state per row, one deformable channel per column.
using Waypoints = nn::Matrix;

// Single deformation xi_D = xi + mu * A^{-1} u~, where u~ carries `direction`
// at `state_index` and zero elsewhere.
struct DeformationSpec {
  std::size_t state_index = 1;
  double magnitude = 1.0;
  std::vector<double> direction;
};

// Acceleration norm over the interior waypoints, endpoints clamped:
// A = c * K^T K with K the second-difference operator on the interior and c
// the largest entry of (K^T K)^{-1}, so A^{-1} has unit peak. Per channel,
// (num_states x num_states); endpoint rows and columns are identity.
nn::Matrix acceleration_norm(std::size_t num_states);

// Column `state_index` of A^{-1}: how a unit push at that state spreads along
// the trajectory. Zero at both endpoints. Solved through two tridiagonal
// sweeps, never forming A.
std::vector<double> deformation_profile(std::size_t num_states, std::size_t state_index);

// Throws DataError when the index is an endpoint or shapes disagree.
Waypoints deform(const Waypoints& waypoints, const DeformationSpec& spec);

}  // namespace sirl::env

#endif  // SIRL_ENV_DEFORMATION_HPP_
