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

#ifndef SIRL_EVALUATION_HPP_
#define SIRL_EVALUATION_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "sirl/env/dataset.hpp"
#include "sirl/oracle.hpp"
#include "sirl/representation.hpp"
#include "sirl/reward.hpp"

namespace sirl::eval {

struct IndexSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded shuffle of [0, n); the first round(train_fraction * n) train.
IndexSplit split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

struct FpeConfig {
  std::size_t dataset_size = 2000;
  double train_fraction = 0.8;
  double ridge = 1e-6;
};

struct FpeReport {
  std::string method;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  nn::Matrix probe;  // (d + 1) x 4, last row is the intercept
  double ridge_used = 0.0;
};

// Linear probe from embeddings to normalized features, fitted on the train
// split by closed-form ridge regression; reports test MSE averaged over
// features. If the normal equations are numerically singular the ridge is
// raised (with a warning on stderr) until they are not.
FpeReport fpe(const nn::Matrix& embeddings, std::span<const env::FeatureVector> features,
              std::uint64_t split_seed, const FpeConfig& config = {});
FpeReport fpe(const rep::EmbeddingModel& model, std::span<const env::Trajectory> trajectories,
              std::span<const env::FeatureVector> features, std::uint64_t split_seed,
              const FpeConfig& config = {});

// The trajectories D_FPE is drawn from: the first min(size, |pool|) of a
// seeded permutation of the pool.
std::vector<std::size_t> fpe_subset(std::size_t pool_size, std::size_t size, std::uint64_t seed);

struct TpaConfig {
  std::size_t rewards = 20;
  std::size_t pairs_per_reward = 250;
  double train_fraction = 0.8;
  reward::RewardConfig reward;
};

struct TpaReport {
  std::string method;
  std::size_t n = 0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  std::vector<double> accuracies;
  double mean = 0.0;
};

// Mean of the accuracies, summed in sorted order so it does not depend on
// their order.
double order_free_mean(std::span<const double> values);

// For each test reward: label `pairs_per_reward` sampled pairs with the
// oracle, split them, train a reward model on the first M training pairs and
// measure accuracy on the test pairs. Per-reward randomness is keyed by the
// reward's weights, so permuting the rewards permutes the accuracies.
TpaReport tpa(const rep::EmbeddingModel& model, std::span<const env::Trajectory> pool,
              std::span<const env::FeatureVector> pool_features,
              std::span<const oracle::GroundTruthReward> test_rewards, std::size_t m,
              const TpaConfig& config, std::uint64_t seed);

// Same protocol with the embedding given as a fixed matrix (row i embeds
// pool trajectory i); only reward heads train. The frozen branch of tpa()
// reduces to this.
TpaReport tpa_fixed(const nn::Matrix& embeddings, env::EnvId env,
                    std::span<const env::FeatureVector> pool_features,
                    std::span<const oracle::GroundTruthReward> test_rewards, std::size_t m,
                    const TpaConfig& config, std::uint64_t seed);

// The held-out test rewards used for a given experiment seed.
std::vector<oracle::GroundTruthReward> test_rewards(std::size_t count, std::uint64_t seed);

struct RetrievalResult {
  std::vector<std::size_t> most_similar;
  std::vector<std::size_t> most_dissimilar;
  std::vector<double> distances;
};

// Pool indices sorted by embedding distance to the query (ties by index):
// the first k, and the last k in reverse.
RetrievalResult retrieve_extremes(const rep::EmbeddingModel& model,
                                  const env::Trajectory& query,
                                  std::span<const env::Trajectory> pool, std::size_t k);

// One labeler's recorded data.
struct ResponderData {
  std::string responder;
  std::vector<oracle::SimilarityAnswer> similarity;
  std::vector<oracle::PreferenceLabel> preferences;
};

struct HeldoutConfig {
  rep::SirlConfig sirl;
  reward::RewardConfig reward;
  std::size_t splits = 50;
  double train_fraction = 0.7;
};

struct HeldoutReport {
  std::string responder;
  TpaReport heldout;  // embedding trained without this responder
  TpaReport pooled;   // embedding trained on everyone
};

// Union of similarity answers with exact duplicates (same pair, same odd
// one out) removed, in responder order.
std::vector<oracle::SimilarityAnswer> merge_answers(std::span<const ResponderData> responders,
                                                    std::ptrdiff_t exclude = -1);

// Cross-validated reward accuracy of one responder's preferences on top of
// an embedding.
TpaReport preference_cv(const rep::EmbeddingModel& model, std::span<const env::Trajectory> pool,
                        std::span<const oracle::PreferenceLabel> preferences,
                        const HeldoutConfig& config, std::uint64_t seed);

std::vector<HeldoutReport> heldout_eval(const env::Dataset& dataset,
                                        std::span<const ResponderData> responders,
                                        const HeldoutConfig& config, std::uint64_t seed);

}  // namespace sirl::eval

#endif  // SIRL_EVALUATION_HPP_
