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

#include "sirl/reward.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "sirl/error.hpp"
#include "sirl/nn/adam.hpp"
#include "sirl/nn/checkpoint.hpp"
#include "sirl/nn/losses.hpp"
#include "sirl/random.hpp"

namespace sirl::reward {

namespace {

enum : std::uint64_t { kTagHead = 11, kTagShuffle = 12, kTagSplit = 13 };

struct PairBatch {
  std::vector<std::size_t> rows;  // a's then b's
  nn::Vector labels;
};

PairBatch pair_rows(std::span<const oracle::PreferenceLabel> labels,
                    std::span<const std::size_t> idx, std::size_t pool_size) {
  PairBatch b;
  const std::size_t n = idx.size();
  b.rows.assign(2 * n, 0);
  b.labels.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = labels[idx[i]];
    if (l.a >= pool_size || l.b >= pool_size)
      throw DataError("preference label references a trajectory outside the pool");
    b.rows[i] = l.a;
    b.rows[n + i] = l.b;
    b.labels[static_cast<Eigen::Index>(i)] = l.label;
  }
  return b;
}

// Loss and gradients for one batch. When `cached` is non-null the embedding
// rows come from it and no trunk gradient is produced.
PrefLoss batch_loss(const RewardModel& model, std::span<const env::Trajectory> pool,
                    const PairBatch& batch, double l2_weight, const nn::Matrix* fixed) {
  const auto n = static_cast<Eigen::Index>(batch.rows.size() / 2);
  nn::ForwardTrace trunk;
  nn::Matrix emb;
  if (fixed) {
    emb.resize(2 * n, fixed->cols());
    for (Eigen::Index i = 0; i < 2 * n; ++i)
      emb.row(i) = fixed->row(static_cast<Eigen::Index>(batch.rows[static_cast<std::size_t>(i)]));
  } else {
    trunk = nn::mlp_forward_traced(model.embedding.params, env::stack_inputs(pool, batch.rows));
    emb = trunk.output;
  }
  const nn::ForwardTrace head = nn::mlp_forward_traced(model.head, emb);
  const nn::Vector r_a = head.output.col(0).head(n);
  const nn::Vector r_b = head.output.col(0).tail(n);
  const nn::PreferenceGrads g = nn::preference_loss(r_a, r_b, batch.labels, l2_weight);

  nn::Matrix upstream(2 * n, 1);
  upstream.col(0).head(n) = g.reward_a;
  upstream.col(0).tail(n) = g.reward_b;
  const bool train_trunk = !model.frozen && !fixed;
  nn::Gradients head_grads = nn::mlp_backward(model.head, head, upstream, train_trunk);
  PrefLoss out;
  out.loss = g.loss;
  out.head_grads = std::move(head_grads.params);
  if (train_trunk)
    out.embedding_grads = nn::mlp_backward(model.embedding.params, trunk, head_grads.input, false).params;
  return out;
}

void check_labels(std::span<const oracle::PreferenceLabel> labels, std::size_t pool_size) {
  for (const auto& l : labels) {
    if (l.a >= pool_size || l.b >= pool_size)
      throw DataError("preference label references a trajectory outside the pool");
  }
}

// Shared loop for both modes. With `fixed` set, only the head trains and
// rows of `fixed` stand in for the embedding of each pool trajectory.
void fit(RewardModel& model, std::span<const env::Trajectory> pool, std::size_t pool_size,
         const nn::Matrix* fixed, std::span<const oracle::PreferenceLabel> train,
         const RewardConfig& config, std::uint64_t seed, nn::TrainingLog* log) {
  if (train.empty()) throw DataError("reward training needs at least one labeled pair");
  check_labels(train, pool_size);
  const nn::AdamConfig adam{config.learning_rate, 1.0};
  nn::AdamState head_state(adam, model.head);
  nn::AdamState trunk_state;
  const bool train_trunk = !model.frozen && !fixed;
  if (train_trunk) trunk_state = nn::AdamState(adam, model.embedding.params);

  Rng shuffle(derive_seed(seed, {kTagShuffle}));
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& idx : nn::epoch_batches(train.size(), config.batch_size, shuffle)) {
      const PairBatch batch = pair_rows(train, idx, pool_size);
      PrefLoss l = batch_loss(model, pool, batch, config.l2_weight, fixed);
      nn::require_finite(l.loss, "reward training", epoch, step);
      nn::adam_step(model.head, l.head_grads, head_state);
      if (train_trunk) nn::adam_step(model.embedding.params, l.embedding_grads, trunk_state);
      total += l.loss;
      ++step;
    }
    if (log) log->epoch_loss.push_back(total / static_cast<double>(train.size()));
  }
}

nn::MlpParams init_head(std::size_t embedding_width, env::EnvId env, std::uint64_t seed) {
  const std::size_t h = rep::hidden_width(env);
  return nn::init_params({embedding_width, {h, h}, 1}, derive_seed(seed, {kTagHead}));
}

}  // namespace

RewardModel init_reward_model(const rep::EmbeddingModel& embedding, bool frozen,
                              std::uint64_t seed) {
  RewardModel m;
  m.embedding = embedding;
  m.frozen = frozen;
  m.head = init_head(embedding.params.output_width(), embedding.env, seed);
  return m;
}

double reward_of(const RewardModel& model, const env::Trajectory& trajectory) {
  const nn::Vector e = rep::embed(model.embedding, trajectory);
  return nn::mlp_forward(model.head, e.transpose())(0, 0);
}

nn::Vector rewards_of(const RewardModel& model, std::span<const env::Trajectory> trajectories) {
  if (trajectories.empty()) return nn::Vector(0);
  const nn::Matrix emb = rep::embed_all(model.embedding, trajectories);
  return nn::mlp_forward(model.head, emb).col(0);
}

double bt_probability(const RewardModel& model, const env::Trajectory& a,
                      const env::Trajectory& b) {
  return nn::bradley_terry(reward_of(model, a), reward_of(model, b));
}

PrefLoss pref_loss(const RewardModel& model, std::span<const env::Trajectory> pool,
                   std::span<const oracle::PreferenceLabel> batch, double l2_weight) {
  if (batch.empty()) throw DataError("preference batch is empty");
  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return batch_loss(model, pool, pair_rows(batch, idx, pool.size()), l2_weight, nullptr);
}

RewardConfig RewardConfig::for_env(env::EnvId env, bool frozen) {
  RewardConfig c;
  c.frozen = frozen;
  if (env == env::EnvId::kArmLite) {
    c.epochs = 1000;
    c.l2_weight = 1.0;
  }
  return c;
}

PreferenceSplit split_preferences(std::span<const oracle::PreferenceLabel> labels,
                                  double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train fraction must lie in (0, 1)");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {kTagSplit}));
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(labels.size())));
  PreferenceSplit s;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_train ? s.train : s.test).push_back(labels[order[i]]);
  return s;
}

RewardModel train_reward(const rep::EmbeddingModel& embedding,
                         std::span<const env::Trajectory> pool,
                         std::span<const oracle::PreferenceLabel> train,
                         const RewardConfig& config, std::uint64_t seed, nn::TrainingLog* log) {
  RewardModel model = init_reward_model(embedding, config.frozen, seed);
  if (model.frozen) {
    // A frozen embedding never changes, so the pool is embedded once.
    check_labels(train, pool.size());
    const nn::Matrix fixed = rep::embed_all(embedding, pool);
    fit(model, pool, pool.size(), &fixed, train, config, seed, log);
  } else {
    fit(model, pool, pool.size(), nullptr, train, config, seed, log);
  }
  return model;
}

nn::MlpParams train_head(const nn::Matrix& embeddings, env::EnvId env,
                         std::span<const oracle::PreferenceLabel> train,
                         const RewardConfig& config, std::uint64_t seed, nn::TrainingLog* log) {
  RewardModel model;
  model.frozen = true;
  model.head = init_head(static_cast<std::size_t>(embeddings.cols()), env, seed);
  fit(model, {}, static_cast<std::size_t>(embeddings.rows()), &embeddings, train, config, seed, log);
  return std::move(model.head);
}

nn::Vector head_rewards(const nn::MlpParams& head, const nn::Matrix& embeddings) {
  return nn::mlp_forward(head, embeddings).col(0);
}

double accuracy_of(const nn::Vector& rewards, std::span<const oracle::PreferenceLabel> labels) {
  if (labels.empty()) throw DataError("accuracy needs at least one labeled pair");
  check_labels(labels, static_cast<std::size_t>(rewards.size()));
  std::size_t correct = 0;
  for (const auto& l : labels) {
    const int predicted =
        rewards[static_cast<Eigen::Index>(l.a)] >= rewards[static_cast<Eigen::Index>(l.b)] ? 1 : 0;
    correct += predicted == l.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double preference_accuracy(const RewardModel& model, std::span<const env::Trajectory> pool,
                           std::span<const oracle::PreferenceLabel> labels) {
  if (labels.empty()) throw DataError("accuracy needs at least one labeled pair");
  return accuracy_of(rewards_of(model, pool), labels);
}

std::vector<std::size_t> rank_trajectories(const RewardModel& model,
                                           std::span<const env::Trajectory> pool) {
  if (pool.empty()) throw DataError("cannot rank an empty pool");
  const nn::Vector r = rewards_of(model, pool);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return r[static_cast<Eigen::Index>(a)] > r[static_cast<Eigen::Index>(b)];
  });
  return order;
}

void save_reward(const std::filesystem::path& stem, const RewardModel& model) {
  nn::Checkpoint cp;
  cp.manifest.set("format", "sirl-checkpoint-v1");
  cp.manifest.set("kind", "reward");
  cp.manifest.set("env", env::to_string(model.embedding.env));
  cp.manifest.set("method", model.embedding.provenance);
  cp.manifest.set("n", static_cast<std::uint64_t>(model.embedding.budget));
  cp.manifest.set("alpha", model.embedding.alpha);
  cp.manifest.set("pretrain", model.embedding.pretrained ? "vae" : "none");
  cp.manifest.set("seed", model.embedding.seed);
  cp.manifest.set("input_width", static_cast<std::uint64_t>(model.embedding.input_width()));
  cp.manifest.set("embedding_dim", static_cast<std::uint64_t>(model.embedding.params.output_width()));
  cp.manifest.set("frozen", model.frozen);
  cp.sections.emplace_back("embedding", model.embedding.params);
  cp.sections.emplace_back("head", model.head);
  nn::save_checkpoint(stem, cp);
}

RewardModel load_reward(const std::filesystem::path& stem) {
  const nn::Checkpoint cp = nn::load_checkpoint(stem);
  if (cp.manifest.require("kind") != "reward")
    throw DataError(stem.string() + " is not a reward checkpoint");
  RewardModel m;
  m.embedding.params = cp.section("embedding");
  m.embedding.env = env::parse_env(cp.manifest.require("env"));
  m.embedding.provenance = cp.manifest.require("method");
  m.embedding.budget = cp.manifest.require_uint("n");
  m.embedding.alpha = cp.manifest.require_double("alpha");
  m.embedding.pretrained = cp.manifest.require("pretrain") == "vae";
  m.embedding.seed = cp.manifest.require_uint("seed");
  m.head = cp.section("head");
  m.frozen = cp.manifest.require_bool("frozen");
  if (m.head.input_width() != m.embedding.params.output_width() || m.head.output_width() != 1)
    throw DataError("reward head does not fit its embedding");
  return m;
}

}  // namespace sirl::reward
