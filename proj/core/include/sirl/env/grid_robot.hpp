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

#ifndef SIRL_ENV_GRID_ROBOT_HPP_
#define SIRL_ENV_GRID_ROBOT_HPP_

#include <array>
#include <span>
#include <vector>

#include "sirl/env/trajectory.hpp"

namespace sirl::env {

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

namespace grid {

inline constexpr int kSize = 5;
inline constexpr std::size_t kStates = 9;
inline constexpr std::size_t kStateDim = 2;
inline constexpr std::size_t kInputWidth = kStates * kStateDim + 1;
inline constexpr std::array<int, 7> kEndAnglesDeg = {-90, -60, -30, 0, 30, 60, 90};

}  // namespace grid

struct GridScene {
  Cell obstacle1{1, 3};
  Cell obstacle2{3, 0};
  Cell laptop{2, 2};

  // Throws ConfigError if an object lies outside the grid.
  void validate() const;
  bool operator==(const GridScene&) const = default;
};

// Coordinates are stored raw; the end-state angle is stored in radians.
Trajectory make_grid_trajectory(std::span<const Cell> path, int end_angle_deg);

std::vector<Cell> grid_cells(const Trajectory& trajectory);
int grid_end_angle_deg(const Trajectory& trajectory);

// Every monotone (0,0) -> (4,4) path crossed with every end angle. Paths are
// produced in lexicographic order of their move strings with "right" before
// "up"; angles vary fastest.
std::vector<Trajectory> grid_enumerate(const GridScene& scene);

// (mean distance to obstacle 1, mean distance to obstacle 2,
//  mean distance to laptop, |end angle| in degrees), unnormalized.
FeatureVector grid_features(const Trajectory& trajectory, const GridScene& scene);

}  // namespace sirl::env

#endif  // SIRL_ENV_GRID_ROBOT_HPP_
