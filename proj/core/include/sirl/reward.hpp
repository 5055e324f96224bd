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

#ifndef SIRL_REWARD_HPP_
#define SIRL_REWARD_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sirl/env/trajectory.hpp"
#include "sirl/nn/batching.hpp"
#include "sirl/nn/mlp.hpp"
#include "sirl/oracle.hpp"
#include "sirl/representation.hpp"

namespace sirl::reward {

// R_theta(phi(xi)): a reward head (d -> h -> h -> 1) on top of an embedding.
struct RewardModel {
  rep::EmbeddingModel embedding;
  nn::MlpParams head;
  bool frozen = true;
};

RewardModel init_reward_model(const rep::EmbeddingModel& embedding, bool frozen,
                              std::uint64_t seed);

double reward_of(const RewardModel& model, const env::Trajectory& trajectory);
nn::Vector rewards_of(const RewardModel& model, std::span<const env::Trajectory> trajectories);

// Bradley-Terry probability that `a` is preferred over `b`.
double bt_probability(const RewardModel& model, const env::Trajectory& a,
                      const env::Trajectory& b);

struct PrefLoss {
  double loss = 0.0;
  nn::MlpParams head_grads;
  nn::MlpParams embedding_grads;  // empty when the model is frozen
};

// Cross-entropy over the batch plus l2_weight * sum(R_A^2 + R_B^2).
PrefLoss pref_loss(const RewardModel& model, std::span<const env::Trajectory> pool,
                   std::span<const oracle::PreferenceLabel> batch, double l2_weight);

struct RewardConfig {
  std::size_t epochs = 500;
  double learning_rate = 0.001;
  std::size_t batch_size = 64;
  bool frozen = true;
  double l2_weight = 10.0;

  static RewardConfig for_env(env::EnvId env, bool frozen);
};

struct PreferenceSplit {
  std::vector<oracle::PreferenceLabel> train;
  std::vector<oracle::PreferenceLabel> test;
};

// Seeded shuffle, then the first round(train_fraction * n) labels train.
PreferenceSplit split_preferences(std::span<const oracle::PreferenceLabel> labels,
                                  double train_fraction, std::uint64_t seed);

RewardModel train_reward(const rep::EmbeddingModel& embedding,
                         std::span<const env::Trajectory> pool,
                         std::span<const oracle::PreferenceLabel> train,
                         const RewardConfig& config, std::uint64_t seed,
                         nn::TrainingLog* log = nullptr);

// Head-only training over fixed embeddings: row i of `embeddings` is the
// embedding of pool trajectory i. Matches the frozen path of train_reward.
nn::MlpParams train_head(const nn::Matrix& embeddings, env::EnvId env,
                         std::span<const oracle::PreferenceLabel> train,
                         const RewardConfig& config, std::uint64_t seed,
                         nn::TrainingLog* log = nullptr);
nn::Vector head_rewards(const nn::MlpParams& head, const nn::Matrix& embeddings);

// Fraction of labels whose order the rewards reproduce; ties predict 1.
double accuracy_of(const nn::Vector& rewards, std::span<const oracle::PreferenceLabel> labels);

// Fraction of labels where the model ranks the pair the same way; a tie
// predicts that `a` is preferred.
double preference_accuracy(const RewardModel& model, std::span<const env::Trajectory> pool,
                           std::span<const oracle::PreferenceLabel> labels);

// Indices of `pool` by descending reward; equal rewards keep pool order.
std::vector<std::size_t> rank_trajectories(const RewardModel& model,
                                           std::span<const env::Trajectory> pool);

void save_reward(const std::filesystem::path& stem, const RewardModel& model);
RewardModel load_reward(const std::filesystem::path& stem);

}  // namespace sirl::reward

#endif  // SIRL_REWARD_HPP_
