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

#ifndef SIRL_REPRESENTATION_HPP_
#define SIRL_REPRESENTATION_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sirl/env/dataset.hpp"
#include "sirl/manifest.hpp"
#include "sirl/nn/batching.hpp"
#include "sirl/nn/losses.hpp"
#include "sirl/nn/mlp.hpp"
#include "sirl/oracle.hpp"

namespace sirl::rep {

inline constexpr std::size_t kEmbeddingDim = 6;

// Hidden width of every trunk and reward head: 128 for GridRobot, 1024 for
// ArmLite. Depth is always two hidden layers.
std::size_t hidden_width(env::EnvId env);
nn::MlpShape embedding_shape(env::EnvId env, std::size_t input_width);

enum class Method { kSirl, kSirlVae, kVae, kSinglePref, kMultiPref, kRandom };

// A representation-learning method plus its downstream frozen/unfrozen mode.
// Names: sirl, sirl+vae, vae, singlepref, multipref-<k>, random, optionally
// suffixed with ":frozen" or ":unfrozen".
struct MethodSpec {
  Method method = Method::kSirl;
  std::size_t heads = 1;  // MultiPref only
  std::optional<bool> frozen_override;

  // SIRL variants default to a frozen embedding, everything else unfrozen.
  bool frozen() const;
  // Name without the frozen suffix; this is the provenance tag.
  std::string base_name() const;
  // Full name, with the suffix only when it differs from the default.
  std::string name() const;
  bool uses_similarity() const { return method == Method::kSirl || method == Method::kSirlVae; }
  bool uses_preferences() const {
    return method == Method::kSinglePref || method == Method::kMultiPref;
  }

  static MethodSpec parse(const std::string& text);
};

struct EmbeddingModel {
  nn::MlpParams params;
  env::EnvId env = env::EnvId::kGridRobot;
  std::string provenance = "random";
  std::uint64_t seed = 0;
  std::size_t budget = 0;  // representation queries N
  double alpha = 0.0;
  bool pretrained = false;

  std::size_t input_width() const { return params.input_width(); }
};

nn::Vector embed(const EmbeddingModel& model, const env::Trajectory& trajectory);
nn::Matrix embed_all(const EmbeddingModel& model, std::span<const env::Trajectory> trajectories);

// Squared L2 distance between embeddings.
double traj_distance(const EmbeddingModel& model, const env::Trajectory& a,
                     const env::Trajectory& b);

struct LossAndGrads {
  double loss = 0.0;
  nn::MlpParams grads;
};

LossAndGrads triplet_loss(const EmbeddingModel& model, const env::Trajectory& anchor,
                          const env::Trajectory& positive, const env::Trajectory& negative,
                          double alpha);

// Rows of the three batches are corresponding (P1, P2, N) members.
LossAndGrads sirl_loss(const nn::MlpParams& params, const nn::Matrix& first,
                       const nn::Matrix& second, const nn::Matrix& odd, double alpha);

struct VaeConfig {
  std::size_t epochs = 2000;
  double learning_rate = 0.01;
  double decay = 0.99999;
  std::size_t batch_size = 32;
  double kl_weight = 0.01;
};

enum class Pretrain { kNone, kVae };

struct SirlConfig {
  double alpha = 1.0;
  Pretrain pretrain = Pretrain::kNone;
  std::size_t epochs = 3000;
  double learning_rate = 0.004;
  double decay = 0.99999;
  std::size_t batch_size = 64;
  VaeConfig vae;
};

struct PrefRepConfig {
  std::size_t epochs = 5000;
  double learning_rate = 0.01;
  double decay = 1.0;
  std::size_t batch_size = 32;
  double l2_weight = 10.0;

  static PrefRepConfig for_env(env::EnvId env);
};

// Encoder: input -> h -> h -> 2*d (mean, log-variance). Decoder mirrors it:
// d -> h -> h -> input.
struct VaeModel {
  nn::MlpParams encoder;
  nn::MlpParams decoder;
};

VaeModel init_vae(env::EnvId env, std::size_t input_width, std::uint64_t seed);

struct VaeLoss {
  double loss = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
  nn::MlpParams encoder_grads;
  nn::MlpParams decoder_grads;
};

// Summed over rows: per-row mean squared reconstruction error plus
// kl_weight * KL(q(z|x) || N(0, I)), with z = mu + exp(logvar / 2) * noise.
VaeLoss vae_loss(const VaeModel& model, const nn::Matrix& batch, const nn::Matrix& noise,
                 double kl_weight);

VaeModel train_vae(std::span<const env::Trajectory> pool, env::EnvId env, const VaeConfig& config,
                   std::uint64_t seed, nn::TrainingLog* log = nullptr);

// Mean head of the encoder as an embedding.
EmbeddingModel vae_embedding(const VaeModel& vae, env::EnvId env, std::uint64_t seed);

// Trains a VAE on the pool and returns its mean head; SIRL with VAE
// pretraining starts from exactly this model for the same seed.
EmbeddingModel pretrain_vae(std::span<const env::Trajectory> pool, const VaeConfig& config,
                            std::uint64_t seed, nn::TrainingLog* log = nullptr);

EmbeddingModel train_sirl(std::span<const env::Trajectory> pool,
                          std::span<const oracle::SimilarityAnswer> answers,
                          const SirlConfig& config, std::uint64_t seed,
                          nn::TrainingLog* log = nullptr);

// Continues SIRL training from a given initial embedding (warm start).
EmbeddingModel train_sirl_from(EmbeddingModel initial, std::span<const env::Trajectory> pool,
                               std::span<const oracle::SimilarityAnswer> answers,
                               const SirlConfig& config, std::uint64_t seed,
                               nn::TrainingLog* log = nullptr);

// Shared trunk plus one linear reward head per simulated human. The heads
// are stored as a single d -> k linear layer; column h is head h.
struct PrefRepModel {
  nn::MlpParams trunk;
  nn::MlpParams heads;
};

struct PrefRepData {
  std::vector<oracle::PreferenceLabel> labels;
  std::vector<std::size_t> head_of;  // head index per label
};

// Round-robin allocation of `budget` sampled queries over the given rewards.
// Throws ConfigError when there are more rewards than queries.
PrefRepData allocate_preference_queries(std::span<const env::FeatureVector> pool_features,
                                        std::span<const oracle::GroundTruthReward> rewards,
                                        std::size_t budget, std::uint64_t seed);

// The rewards SinglePref (k = 1, equal weights) and MultiPref (k sampled)
// train against.
std::vector<oracle::GroundTruthReward> pretraining_rewards(const MethodSpec& method,
                                                           std::uint64_t seed);

PrefRepModel train_pref_model(std::span<const env::Trajectory> pool, env::EnvId env,
                              const PrefRepData& data, std::size_t heads,
                              const PrefRepConfig& config, std::uint64_t seed,
                              nn::TrainingLog* log = nullptr);

EmbeddingModel train_pref_representation(const env::Dataset& dataset, const MethodSpec& method,
                                         std::size_t budget, const PrefRepConfig& config,
                                         std::uint64_t seed, nn::TrainingLog* log = nullptr);

// Fraction of labels the pretraining heads reproduce.
double pref_model_accuracy(const PrefRepModel& model, std::span<const env::Trajectory> pool,
                           const PrefRepData& data);

EmbeddingModel random_embedding(env::EnvId env, std::size_t input_width, std::uint64_t seed);

// Checkpoint manifest keys: kind, env, method, n, alpha, pretrain, seed.
// `extra` entries are appended to the manifest unchanged.
void save_embedding(const std::filesystem::path& stem, const EmbeddingModel& model,
                    const Manifest& extra = {});
EmbeddingModel load_embedding(const std::filesystem::path& stem);

}  // namespace sirl::rep

#endif  // SIRL_REPRESENTATION_HPP_
