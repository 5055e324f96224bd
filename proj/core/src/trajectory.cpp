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

#include "sirl/env/trajectory.hpp"

#include <algorithm>
#include <cctype>

#include "sirl/error.hpp"

namespace sirl::env {

std::string to_string(EnvId env) {
  switch (env) {
    case EnvId::kGridRobot:
      return "gridrobot";
    case EnvId::kArmLite:
      return "armlite";
  }
  return "unknown";
}

EnvId parse_env(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "gridrobot") return EnvId::kGridRobot;
  if (lower == "armlite") return EnvId::kArmLite;
  throw UsageError("unknown environment '" + name + "' (expected gridrobot or armlite)");
}

nn::Matrix stack_inputs(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) return nn::Matrix(0, 0);
  const std::size_t width = trajectories.front().width();
  nn::Matrix batch(trajectories.size(), width);
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (trajectories[i].width() != width)
      throw DataError("trajectories in one batch must share a width");
    std::copy(trajectories[i].input.begin(), trajectories[i].input.end(), batch.row(i).data());
  }
  return batch;
}

nn::Matrix stack_inputs(std::span<const Trajectory> trajectories,
                        std::span<const std::size_t> indices) {
  if (indices.empty()) return nn::Matrix(0, 0);
  const std::size_t width = trajectories[indices.front()].width();
  nn::Matrix batch(indices.size(), width);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= trajectories.size()) throw DataError("trajectory index out of range");
    const Trajectory& t = trajectories[indices[i]];
    if (t.width() != width) throw DataError("trajectories in one batch must share a width");
    std::copy(t.input.begin(), t.input.end(), batch.row(i).data());
  }
  return batch;
}

}  // namespace sirl::env
