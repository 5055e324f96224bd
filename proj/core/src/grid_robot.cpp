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

#include "sirl/env/grid_robot.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "sirl/error.hpp"

namespace sirl::env {

namespace {

bool inside(const Cell& c) { return c.x >= 0 && c.y >= 0 && c.x < grid::kSize && c.y < grid::kSize; }

void extend_paths(std::vector<Cell>& prefix, std::vector<std::vector<Cell>>& out) {
  const Cell here = prefix.back();
  if (here.x == grid::kSize - 1 && here.y == grid::kSize - 1) {
    out.push_back(prefix);
    return;
  }
  if (here.x + 1 < grid::kSize) {
    prefix.push_back({here.x + 1, here.y});
    extend_paths(prefix, out);
    prefix.pop_back();
  }
  if (here.y + 1 < grid::kSize) {
    prefix.push_back({here.x, here.y + 1});
    extend_paths(prefix, out);
    prefix.pop_back();
  }
}

double distance(const Cell& a, const Cell& b) {
  return std::hypot(static_cast<double>(a.x - b.x), static_cast<double>(a.y - b.y));
}

}  // namespace

void GridScene::validate() const {
  if (!inside(obstacle1) || !inside(obstacle2) || !inside(laptop))
    throw ConfigError("GridRobot scene objects must lie on the 5x5 grid");
}

Trajectory make_grid_trajectory(std::span<const Cell> path, int end_angle_deg) {
  if (path.size() != grid::kStates)
    throw DataError("GridRobot trajectories have exactly 9 states");
  if (path.front() != Cell{0, 0} || path.back() != Cell{grid::kSize - 1, grid::kSize - 1})
    throw DataError("GridRobot trajectories run from (0,0) to (4,4)");
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!inside(path[i])) throw DataError("GridRobot state outside the grid");
    if (i > 0 && std::abs(path[i].x - path[i - 1].x) + std::abs(path[i].y - path[i - 1].y) != 1)
      throw DataError("consecutive GridRobot states must be 4-adjacent");
  }
  bool valid_angle = false;
  for (int a : grid::kEndAnglesDeg) valid_angle = valid_angle || a == end_angle_deg;
  if (!valid_angle) throw DataError("GridRobot end angle must be a multiple of 30 in [-90, 90]");

  Trajectory t;
  t.env = EnvId::kGridRobot;
  t.num_states = grid::kStates;
  t.state_dim = grid::kStateDim;
  t.input.reserve(grid::kInputWidth);
  for (const Cell& c : path) {
    t.input.push_back(static_cast<double>(c.x));
    t.input.push_back(static_cast<double>(c.y));
  }
  t.input.push_back(static_cast<double>(end_angle_deg) * std::numbers::pi / 180.0);
  return t;
}

std::vector<Cell> grid_cells(const Trajectory& trajectory) {
  if (trajectory.env != EnvId::kGridRobot || trajectory.width() != grid::kInputWidth)
    throw DataError("not a GridRobot trajectory");
  std::vector<Cell> cells;
  cells.reserve(grid::kStates);
  for (std::size_t i = 0; i < grid::kStates; ++i) {
    cells.push_back({static_cast<int>(std::lround(trajectory.input[2 * i])),
                     static_cast<int>(std::lround(trajectory.input[2 * i + 1]))});
  }
  return cells;
}

int grid_end_angle_deg(const Trajectory& trajectory) {
  if (trajectory.env != EnvId::kGridRobot || trajectory.width() != grid::kInputWidth)
    throw DataError("not a GridRobot trajectory");
  return static_cast<int>(std::lround(trajectory.input.back() * 180.0 / std::numbers::pi));
}

std::vector<Trajectory> grid_enumerate(const GridScene& scene) {
  scene.validate();
  std::vector<std::vector<Cell>> paths;
  std::vector<Cell> prefix{{0, 0}};
  extend_paths(prefix, paths);

  std::vector<Trajectory> out;
  out.reserve(paths.size() * grid::kEndAnglesDeg.size());
  for (const auto& path : paths) {
    for (int angle : grid::kEndAnglesDeg) out.push_back(make_grid_trajectory(path, angle));
  }
  return out;
}

FeatureVector grid_features(const Trajectory& trajectory, const GridScene& scene) {
  const std::vector<Cell> cells = grid_cells(trajectory);
  FeatureVector f{0.0, 0.0, 0.0, 0.0};
  for (const Cell& c : cells) {
    f[0] += distance(c, scene.obstacle1);
    f[1] += distance(c, scene.obstacle2);
    f[2] += distance(c, scene.laptop);
  }
  const double n = static_cast<double>(cells.size());
  f[0] /= n;
  f[1] /= n;
  f[2] /= n;
  f[3] = std::abs(static_cast<double>(grid_end_angle_deg(trajectory)));
  return f;
}

}  // namespace sirl::env
