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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "sirl/env/dataset.hpp"
#include "sirl/error.hpp"
#include "sirl/evaluation.hpp"
#include "sirl/oracle.hpp"
#include "sirl/representation.hpp"
#include "sirl/reward.hpp"
#include "test_util.hpp"

using namespace sirl;
using sirl::testing::central_difference;
using sirl::testing::close_rel;

namespace {

const env::Dataset& grid() {
  static const env::Dataset d = env::build_dataset(env::default_scene(env::EnvId::kGridRobot), 0, 0);
  return d;
}

std::vector<oracle::SimilarityAnswer> answers(std::size_t n, std::uint64_t seed) {
  const auto q = oracle::sample_similarity_queries(grid().size(), n, seed);
  return oracle::simulate_similarity(q, grid().features, "sim");
}

std::vector<oracle::PreferenceLabel> labels(std::size_t m, std::uint64_t seed) {
  const auto q = oracle::sample_preference_queries(grid().size(), m, seed);
  return oracle::answer_preferences(q, oracle::sample_rewards(1, seed + 100).front(), grid().features);
}

rep::SirlConfig short_sirl(std::size_t epochs) {
  rep::SirlConfig c;
  c.epochs = epochs;
  return c;
}

reward::RewardConfig short_reward(bool frozen, std::size_t epochs) {
  reward::RewardConfig c = reward::RewardConfig::for_env(env::EnvId::kGridRobot, frozen);
  c.epochs = epochs;
  return c;
}

}  // namespace

TEST_CASE("method names parse and print") {
  using rep::Method;
  using rep::MethodSpec;
  CHECK(MethodSpec::parse("sirl").frozen());
  CHECK(MethodSpec::parse("sirl+vae").method == Method::kSirlVae);
  CHECK_FALSE(MethodSpec::parse("vae").frozen());
  CHECK(MethodSpec::parse("vae:frozen").frozen());
  CHECK(MethodSpec::parse("multipref-10").heads == 10);
  CHECK(MethodSpec::parse("multipref-10").method == Method::kMultiPref);
  for (const char* name : {"sirl", "sirl+vae", "vae", "singlepref", "multipref-50", "random",
                           "sirl:unfrozen", "random:frozen", "multipref-3:frozen"})
    CHECK(MethodSpec::parse(name).name() == name);
  CHECK(MethodSpec::parse("sirl:frozen").name() == "sirl");
  CHECK(MethodSpec::parse("random:unfrozen").name() == "random");
  CHECK(MethodSpec::parse("sirl:unfrozen").base_name() == "sirl");
  for (const char* bad : {"", "SIRL2", "multipref-", "multipref-0", "multipref-x", "vae:melted"})
    CHECK_THROWS_AS(MethodSpec::parse(bad), UsageError);
}

TEST_CASE("SIRL training lowers the loss and is seed deterministic") {
  const auto a = answers(150, 1);
  nn::TrainingLog log;
  const rep::EmbeddingModel m = rep::train_sirl(grid().trajectories, a, short_sirl(40), 5, &log);
  REQUIRE(log.epoch_loss.size() == 40);
  CHECK(log.epoch_loss.back() < 0.5 * log.epoch_loss.front());
  CHECK(m.provenance == "sirl");
  CHECK(m.budget == 150);
  CHECK(m.params.all_finite());
  const rep::EmbeddingModel again = rep::train_sirl(grid().trajectories, a, short_sirl(40), 5);
  CHECK(again.params == m.params);
  const rep::EmbeddingModel other = rep::train_sirl(grid().trajectories, a, short_sirl(40), 6);
  CHECK_FALSE(other.params == m.params);
}

TEST_CASE("SIRL starts from the Random initialization of the same seed") {
  const rep::EmbeddingModel r = rep::random_embedding(env::EnvId::kGridRobot, 19, 8);
  const rep::EmbeddingModel s = rep::train_sirl(grid().trajectories, answers(20, 2), short_sirl(0), 8);
  CHECK(s.params == r.params);
}

TEST_CASE("SIRL rejects answers outside the pool") {
  auto a = answers(10, 3);
  a[4].odd = grid().size();
  CHECK_THROWS_AS(rep::train_sirl(grid().trajectories, a, short_sirl(1), 1), DataError);
}

TEST_CASE("VAE training lowers the loss and its mean head embeds") {
  rep::VaeConfig c;
  c.epochs = 15;
  nn::TrainingLog log;
  const rep::VaeModel v = rep::train_vae(grid().trajectories, env::EnvId::kGridRobot, c, 4, &log);
  REQUIRE(log.epoch_loss.size() == 15);
  CHECK(log.epoch_loss.back() < log.epoch_loss.front());
  const rep::EmbeddingModel e = rep::vae_embedding(v, env::EnvId::kGridRobot, 4);
  CHECK(e.params.output_width() == rep::kEmbeddingDim);
  CHECK(e.provenance == "vae");
  // pretrain_vae is train_vae plus the mean head, with its own derived seed.
  const rep::EmbeddingModel p = rep::pretrain_vae(grid().trajectories, c, 4);
  const rep::EmbeddingModel q = rep::pretrain_vae(grid().trajectories, c, 4);
  CHECK(p.params == q.params);
}

TEST_CASE("preference queries are allocated round robin over heads") {
  const auto rewards = oracle::sample_rewards(3, 1);
  const rep::PrefRepData d = rep::allocate_preference_queries(grid().features, rewards, 10, 2);
  REQUIRE(d.labels.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(d.head_of[i] == i % 3);
    const auto& l = d.labels[i];
    const double ra = rewards[i % 3](grid().features[l.a]);
    const double rb = rewards[i % 3](grid().features[l.b]);
    CHECK(l.label == (ra >= rb ? 1 : 0));
  }
  CHECK_THROWS_AS(rep::allocate_preference_queries(grid().features, rewards, 2, 2), ConfigError);
}

TEST_CASE("preference pretraining fits its own labels") {
  rep::PrefRepConfig c = rep::PrefRepConfig::for_env(env::EnvId::kGridRobot);
  c.epochs = 60;
  // The default penalty on reward magnitudes keeps accuracy near 0.66 here.
  c.l2_weight = 0.1;
  const auto method = rep::MethodSpec::parse("multipref-2");
  const auto data = rep::allocate_preference_queries(grid().features,
                                                     rep::pretraining_rewards(method, 1), 80, 3);
  nn::TrainingLog log;
  const rep::PrefRepModel m = rep::train_pref_model(grid().trajectories, env::EnvId::kGridRobot,
                                                    data, 2, c, 4, &log);
  CHECK(m.heads.output_width() == 2);
  CHECK(log.epoch_loss.back() < log.epoch_loss.front());
  CHECK(rep::pref_model_accuracy(m, grid().trajectories, data) > 0.7);
  const rep::EmbeddingModel e = rep::train_pref_representation(grid(), method, 40, c, 1);
  CHECK(e.provenance == "multipref-2");
  CHECK(e.budget == 40);
}

TEST_CASE("preference split is a seeded partition") {
  const auto all = labels(57, 1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const reward::PreferenceSplit s = reward::split_preferences(all, 0.8, seed);
    CHECK(s.train.size() == 46);
    CHECK(s.test.size() == 11);
    std::multiset<std::uint64_t> ids;
    for (const auto& l : s.train) ids.insert(l.query_id);
    for (const auto& l : s.test) ids.insert(l.query_id);
    std::multiset<std::uint64_t> expected;
    for (const auto& l : all) expected.insert(l.query_id);
    CHECK(ids == expected);
  }
}

TEST_CASE("preference loss through the full model matches finite differences") {
  const rep::EmbeddingModel e = rep::random_embedding(env::EnvId::kGridRobot, 19, 2);
  const reward::RewardModel model = reward::init_reward_model(e, false, 3);
  const auto batch = labels(12, 4);
  const reward::PrefLoss g = reward::pref_loss(model, grid().trajectories, batch, 10.0);
  REQUIRE(g.embedding_grads.parameter_count() == e.params.parameter_count());

  const std::vector<double> head = model.head.flatten(), head_g = g.head_grads.flatten();
  const std::vector<double> trunk = e.params.flatten(), trunk_g = g.embedding_grads.flatten();
  const auto f_head = [&](const std::vector<double>& t) {
    reward::RewardModel m = model;
    m.head.assign_flat(t);
    return reward::pref_loss(m, grid().trajectories, batch, 10.0).loss;
  };
  const auto f_trunk = [&](const std::vector<double>& t) {
    reward::RewardModel m = model;
    m.embedding.params.assign_flat(t);
    return reward::pref_loss(m, grid().trajectories, batch, 10.0).loss;
  };
  Rng pick(5);
  for (int k = 0; k < 100; ++k) {
    const std::size_t i = pick.uniform_index(head.size());
    const std::size_t j = pick.uniform_index(trunk.size());
    CHECK(close_rel(head_g[i], central_difference(f_head, head, i), 1e-5));
    CHECK(close_rel(trunk_g[j], central_difference(f_trunk, trunk, j), 1e-5));
  }
  // The frozen model reports the same head gradient and no trunk gradient.
  reward::RewardModel frozen = model;
  frozen.frozen = true;
  const reward::PrefLoss h = reward::pref_loss(frozen, grid().trajectories, batch, 10.0);
  CHECK(h.loss == doctest::Approx(g.loss).epsilon(1e-12));
  CHECK(h.embedding_grads.layers.empty());
  CHECK(h.head_grads.flatten() == head_g);
}

TEST_CASE("frozen reward training leaves the embedding alone and matches head-only training") {
  const rep::EmbeddingModel e = rep::random_embedding(env::EnvId::kGridRobot, 19, 2);
  const auto train = labels(60, 6);
  const reward::RewardModel r = reward::train_reward(e, grid().trajectories, train, short_reward(true, 25), 9);
  CHECK(r.frozen);
  CHECK(r.embedding.params == e.params);
  const nn::MlpParams head = reward::train_head(rep::embed_all(e, grid().trajectories),
                                                env::EnvId::kGridRobot, train, short_reward(true, 25), 9);
  CHECK(head == r.head);
}

TEST_CASE("unfrozen reward training moves the embedding") {
  const rep::EmbeddingModel e = rep::random_embedding(env::EnvId::kGridRobot, 19, 2);
  const auto train = labels(60, 6);
  nn::TrainingLog log;
  const reward::RewardModel r =
      reward::train_reward(e, grid().trajectories, train, short_reward(false, 25), 9, &log);
  CHECK_FALSE(r.frozen);
  CHECK_FALSE(r.embedding.params == e.params);
  CHECK(log.epoch_loss.back() < log.epoch_loss.front());
}

TEST_CASE("reward training rejects empty or out-of-range labels") {
  const rep::EmbeddingModel e = rep::random_embedding(env::EnvId::kGridRobot, 19, 2);
  CHECK_THROWS_AS(reward::train_reward(e, grid().trajectories, {}, short_reward(true, 2), 1), DataError);
  auto bad = labels(5, 1);
  bad[0].b = 10000;
  CHECK_THROWS_AS(reward::train_reward(e, grid().trajectories, bad, short_reward(true, 2), 1), DataError);
}

TEST_CASE("accuracy counts ties as predicting the first trajectory") {
  nn::Vector r(3);
  r << 1.0, 1.0, 0.0;
  std::vector<oracle::PreferenceLabel> l = {{0, 0, 1, 1, "", {}}, {1, 0, 1, 0, "", {}},
                                            {2, 2, 0, 0, "", {}}, {3, 0, 2, 1, "", {}}};
  CHECK(reward::accuracy_of(r, l) == doctest::Approx(0.75));
}

TEST_CASE("ranking is by descending reward with stable ties") {
  const rep::EmbeddingModel e = rep::random_embedding(env::EnvId::kGridRobot, 19, 2);
  const reward::RewardModel m = reward::init_reward_model(e, true, 4);
  const auto order = reward::rank_trajectories(m, grid().trajectories);
  const nn::Vector r = reward::rewards_of(m, grid().trajectories);
  REQUIRE(order.size() == grid().size());
  for (std::size_t i = 1; i < order.size(); ++i) {
    CHECK(r[static_cast<Eigen::Index>(order[i - 1])] >= r[static_cast<Eigen::Index>(order[i])]);
    if (r[static_cast<Eigen::Index>(order[i - 1])] == r[static_cast<Eigen::Index>(order[i])])
      CHECK(order[i - 1] < order[i]);
  }
}
