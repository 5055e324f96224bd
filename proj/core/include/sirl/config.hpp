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

#ifndef SIRL_CONFIG_HPP_
#define SIRL_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sirl/env/dataset.hpp"
#include "sirl/evaluation.hpp"
#include "sirl/representation.hpp"
#include "sirl/reward.hpp"

namespace sirl {

struct HeldoutSettings {
  std::size_t responders = 3;
  std::size_t similarity_queries = 100;
  std::size_t preference_queries = 100;
  std::size_t splits = 50;
  double train_fraction = 0.7;
};

struct ServiceSettings {
  std::size_t practice_similarity = 5;
  std::size_t similarity = 100;
  std::size_t practice_preference = 5;
  std::size_t preference = 100;
  int port = 8080;
};

struct ExperimentConfig {
  env::EnvId env = env::EnvId::kGridRobot;
  std::string scene_file;       // empty: built-in scene
  std::size_t dataset_size = 2000;  // ArmLite only; GridRobot is enumerated
  std::uint64_t dataset_seed = 0;

  std::vector<std::string> methods{"sirl", "vae", "random"};
  std::vector<std::size_t> n_grid{100, 500, 1000};
  std::vector<std::size_t> m_grid{10, 50, 100, 190};
  std::vector<std::uint64_t> seeds{0, 1, 2};

  // sirl.pretrain is not stored; pretraining is selected by the method name
  // ("sirl+vae").
  rep::SirlConfig sirl;
  rep::PrefRepConfig pref;
  // reward.frozen is not stored; it follows the method (see MethodSpec).
  reward::RewardConfig reward;
  eval::FpeConfig fpe;
  // tpa.reward is filled from `reward` when a cell runs.
  eval::TpaConfig tpa;
  HeldoutSettings heldout;
  ServiceSettings service;

  std::size_t threads = 0;  // 0: one per hardware thread
  std::string output_dir = "runs";

  static ExperimentConfig defaults(env::EnvId env);

  rep::SirlConfig sirl_for(const rep::MethodSpec& method) const;
  reward::RewardConfig reward_for(const rep::MethodSpec& method) const;
  eval::TpaConfig tpa_for(const rep::MethodSpec& method) const;

  bool operator==(const ExperimentConfig&) const;
};

// Canonical JSON with sorted keys. Every field is written, so parsing the
// output reproduces the config exactly.
std::string to_json(const ExperimentConfig& config);

// Missing keys take the defaults of the config's environment; unknown keys
// and ill-typed values raise ConfigError. `env_override` replaces the file's
// environment before defaults are chosen.
ExperimentConfig parse_config(std::string_view text,
                              std::optional<env::EnvId> env_override = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<env::EnvId> env_override = std::nullopt);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

// Hash of everything that influences results; output_dir and threads are
// excluded.
std::uint64_t config_hash(const ExperimentConfig& config);

env::Scene scene_of(const ExperimentConfig& config);
env::Dataset make_dataset(const ExperimentConfig& config);

}  // namespace sirl

#endif  // SIRL_CONFIG_HPP_
