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

#include "sirl/env/arm_lite.hpp"

#include <algorithm>
#include <cmath>

#include "sirl/error.hpp"
#include "sirl/random.hpp"

namespace sirl::env {

void ArmScene::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (!(box_min[i] < box_max[i])) throw ConfigError("ArmLite workspace box is empty");
  }
  auto in_xy = [&](const std::array<double, 2>& p) {
    return p[0] >= box_min[0] && p[0] <= box_max[0] && p[1] >= box_min[1] && p[1] <= box_max[1];
  };
  if (!in_xy(laptop_xy) || !in_xy(human_xy))
    throw ConfigError("ArmLite laptop and human must lie inside the workspace footprint");
  if (table_z < box_min[2] || table_z > box_max[2])
    throw ConfigError("ArmLite table height must lie inside the workspace box");
  if (!(tilt_min < tilt_max)) throw ConfigError("ArmLite tilt range is empty");
  if (!(front_scale > 0.0) || !(side_scale > 0.0))
    throw ConfigError("proxemic scales must be positive");
}

Waypoints straight_line(const std::array<double, 4>& start, const std::array<double, 4>& goal,
                        std::size_t num_states) {
  if (num_states < 2) throw DataError("a trajectory needs at least two states");
  Waypoints w(num_states, arm::kChannels);
  for (std::size_t s = 0; s < num_states; ++s) {
    const double t = static_cast<double>(s) / static_cast<double>(num_states - 1);
    for (std::size_t c = 0; c < arm::kChannels; ++c)
      w(s, c) = (1.0 - t) * start[c] + t * goal[c];
  }
  return w;
}

Trajectory make_arm_trajectory(const Waypoints& waypoints, const ArmScene& scene) {
  if (static_cast<std::size_t>(waypoints.rows()) != arm::kStates ||
      static_cast<std::size_t>(waypoints.cols()) != arm::kChannels)
    throw DataError("ArmLite waypoints must be 21 x 4");
  Trajectory t;
  t.env = EnvId::kArmLite;
  t.num_states = arm::kStates;
  t.state_dim = arm::kStateDim;
  t.input.reserve(arm::kInputWidth);
  for (std::size_t s = 0; s < arm::kStates; ++s) {
    double p[3];
    for (int c = 0; c < 3; ++c) p[c] = std::clamp(waypoints(s, c), scene.box_min[c], scene.box_max[c]);
    const double tilt = std::clamp(waypoints(s, 3), scene.tilt_min, scene.tilt_max);
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]) || !std::isfinite(tilt))
      throw NumericalError("non-finite ArmLite waypoint");
    const double c = std::cos(tilt);
    const double sn = std::sin(tilt);
    const double state[arm::kStateDim] = {
        p[0], p[1], p[2],
        1.0, 0.0, 0.0,
        0.0, c, -sn,
        0.0, sn, c,
        scene.laptop_xy[0], scene.laptop_xy[1], scene.table_z,
        scene.human_xy[0], scene.human_xy[1], scene.table_z};
    t.input.insert(t.input.end(), state, state + arm::kStateDim);
  }
  return t;
}

std::vector<Trajectory> armlite_sample(const ArmScene& scene, std::size_t count,
                                       std::uint64_t seed, const ArmSampleOptions& options) {
  scene.validate();
  if (count == 0) throw ConfigError("sample count must be positive");
  if (options.min_deformations < 0 || options.max_deformations < options.min_deformations)
    throw ConfigError("invalid deformation count range");

  const std::array<double, 4> lo{scene.box_min[0], scene.box_min[1], scene.box_min[2], scene.tilt_min};
  const std::array<double, 4> hi{scene.box_max[0], scene.box_max[1], scene.box_max[2], scene.tilt_max};
  const double diagonal = std::sqrt(std::pow(hi[0] - lo[0], 2) + std::pow(hi[1] - lo[1], 2) +
                                    std::pow(hi[2] - lo[2], 2));
  const double min_sep = options.min_separation_fraction * diagonal;

  Rng rng(seed);
  std::vector<Trajectory> out;
  out.reserve(count);
  while (out.size() < count) {
    std::array<double, 4> start{}, goal{};
    for (std::size_t c = 0; c < 4; ++c) {
      start[c] = rng.uniform(lo[c], hi[c]);
      goal[c] = rng.uniform(lo[c], hi[c]);
    }
    const double sep = std::sqrt(std::pow(start[0] - goal[0], 2) + std::pow(start[1] - goal[1], 2) +
                                 std::pow(start[2] - goal[2], 2));
    if (sep < min_sep) continue;  // degenerate pair, resample

    Waypoints w = straight_line(start, goal);
    const int span = options.max_deformations - options.min_deformations + 1;
    const int deformations =
        options.min_deformations + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(span)));
    for (int d = 0; d < deformations; ++d) {
      DeformationSpec spec;
      spec.state_index = 1 + rng.uniform_index(arm::kStates - 2);
      spec.magnitude = rng.uniform(options.magnitude_min, options.magnitude_max);
      spec.direction.resize(arm::kChannels);
      for (std::size_t c = 0; c < arm::kChannels; ++c)
        spec.direction[c] = rng.uniform(-1.0, 1.0) * options.direction_fraction * (hi[c] - lo[c]);
      w = deform(w, spec);
    }
    out.push_back(make_arm_trajectory(w, scene));
  }
  return out;
}

FeatureVector armlite_features(const Trajectory& trajectory, const ArmScene& scene) {
  if (trajectory.env != EnvId::kArmLite || trajectory.width() != arm::kInputWidth)
    throw DataError("not an ArmLite trajectory");
  const double fx = std::cos(scene.human_facing);
  const double fy = std::sin(scene.human_facing);
  FeatureVector f{0.0, 0.0, 0.0, 0.0};
  for (std::size_t s = 0; s < trajectory.num_states; ++s) {
    const auto st = trajectory.state(s);
    const double x = st[0], y = st[1], z = st[2];
    // Up axis of the EE frame is the third column of its rotation matrix.
    const double ux = st[3 + 2], uy = st[3 + 5], uz = st[3 + 8];
    f[0] += z - scene.table_z;
    f[1] += std::atan2(std::hypot(ux, uy), uz);
    f[2] += std::hypot(x - scene.laptop_xy[0], y - scene.laptop_xy[1]);
    const double dx = x - scene.human_xy[0];
    const double dy = y - scene.human_xy[1];
    const double front = dx * fx + dy * fy;
    const double side = -dx * fy + dy * fx;
    f[3] += std::hypot(front / scene.front_scale, side / scene.side_scale);
  }
  for (double& v : f) v /= static_cast<double>(trajectory.num_states);
  return f;
}

}  // namespace sirl::env
