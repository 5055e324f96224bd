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

#ifndef SIRL_ENV_ARM_LITE_HPP_
#define SIRL_ENV_ARM_LITE_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "sirl/env/deformation.hpp"
#include "sirl/env/trajectory.hpp"

namespace sirl::env {

namespace arm {

inline constexpr std::size_t kStates = 21;
// EE xyz, EE rotation (row-major 3x3), laptop xyz, human xyz.
inline constexpr std::size_t kStateDim = 18;
inline constexpr std::size_t kInputWidth = kStates * kStateDim;
// Deformable waypoint channels: EE x, y, z and the tilt angle.
inline constexpr std::size_t kChannels = 4;

}  // namespace arm

// Geometric stand-in for a tabletop arm: the end effector moves freely in a
// workspace box and its orientation is a single tilt about the world x axis.
struct ArmScene {
  std::array<double, 3> box_min{0.0, -0.5, 0.0};
  std::array<double, 3> box_max{1.0, 0.5, 0.6};
  double table_z = 0.0;
  std::array<double, 2> laptop_xy{0.35, -0.15};
  std::array<double, 2> human_xy{0.85, 0.25};
  // Direction the human faces, radians in the xy plane.
  double human_facing = 3.141592653589793;
  double tilt_min = -1.5707963267948966;
  double tilt_max = 1.5707963267948966;
  // Proxemic ellipse: distance = sqrt((front/front_scale)^2 + (side/side_scale)^2).
  double front_scale = 1.0;
  double side_scale = 0.5;

  void validate() const;
  bool operator==(const ArmScene&) const = default;
};

struct ArmSampleOptions {
  int min_deformations = 1;
  int max_deformations = 3;
  double magnitude_min = 0.5;
  double magnitude_max = 2.0;
  // Per-channel deformation amplitude as a fraction of the channel's extent.
  double direction_fraction = 0.2;
  // Start and goal must be at least this fraction of the box diagonal apart.
  double min_separation_fraction = 0.25;
};

// Rows are states; columns are x, y, z, tilt.
Waypoints straight_line(const std::array<double, 4>& start, const std::array<double, 4>& goal,
                        std::size_t num_states = arm::kStates);

// Clamps waypoints to the scene and expands them into the 18-wide raw state.
Trajectory make_arm_trajectory(const Waypoints& waypoints, const ArmScene& scene);

std::vector<Trajectory> armlite_sample(const ArmScene& scene, std::size_t count,
                                       std::uint64_t seed,
                                       const ArmSampleOptions& options = {});

// Per-state values averaged over the trajectory: EE height above the table,
// tilt of the EE up axis away from world z (radians), xy distance to the
// laptop, proxemic xy distance to the human.
FeatureVector armlite_features(const Trajectory& trajectory, const ArmScene& scene);

}  // namespace sirl::env

#endif  // SIRL_ENV_ARM_LITE_HPP_
