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

#ifndef SIRL_ENV_DATASET_HPP_
#define SIRL_ENV_DATASET_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sirl/env/arm_lite.hpp"
#include "sirl/env/grid_robot.hpp"
#include "sirl/env/trajectory.hpp"
#include "sirl/manifest.hpp"

namespace sirl::env {

struct Scene {
  EnvId env = EnvId::kGridRobot;
  GridScene grid;
  ArmScene arm;

  bool operator==(const Scene&) const = default;
};

Scene default_scene(EnvId env);

// Scene description files are JSON, e.g.
//   {"env": "gridrobot", "obstacle1": [1, 3], "obstacle2": [3, 0], "laptop": [2, 2]}
// Absent fields keep their defaults.
Scene load_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const Scene& scene);

FeatureVector compute_features(const Trajectory& trajectory, const Scene& scene);

// Per-dimension min-max map onto [0, 1], fitted on a trajectory pool. A
// dimension with zero range is flagged and mapped to 0.
struct FeatureNormalizer {
  FeatureVector min{};
  FeatureVector max{};
  std::array<bool, kFeatureCount> degenerate{};

  static FeatureNormalizer fit(std::span<const FeatureVector> pool);
  FeatureVector apply(const FeatureVector& raw) const;
  bool operator==(const FeatureNormalizer&) const = default;
};

struct Dataset {
  Scene scene;
  std::uint64_t seed = 0;
  std::vector<Trajectory> trajectories;
  std::vector<FeatureVector> raw_features;
  FeatureNormalizer normalizer;
  std::vector<FeatureVector> features;  // normalized

  EnvId env() const { return scene.env; }
  std::size_t size() const { return trajectories.size(); }
  std::size_t input_width() const;
};

// GridRobot ignores `count` and enumerates the full trajectory space.
Dataset build_dataset(const Scene& scene, std::size_t count, std::uint64_t seed,
                      const ArmSampleOptions& options = {});

// `<stem>.manifest` holds env, scene, horizon, state_dim, seed and the
// normalizer; `<stem>.bin` holds trajectories, raw features and normalized
// features as little-endian doubles in that order.
// FNV-1a over the environment, trajectory inputs and normalized features.
std::uint64_t dataset_digest(const Dataset& dataset);

void save_dataset(const std::filesystem::path& stem, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& stem);

void write_scene(Manifest& manifest, const Scene& scene);
Scene read_scene(const Manifest& manifest);

}  // namespace sirl::env

#endif  // SIRL_ENV_DATASET_HPP_
