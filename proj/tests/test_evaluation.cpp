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
#include "test_util.hpp"

using namespace sirl;

namespace {

const env::Dataset& grid() {
  static const env::Dataset d = env::build_dataset(env::default_scene(env::EnvId::kGridRobot), 0, 0);
  return d;
}

nn::Matrix feature_matrix(const env::Dataset& d) {
  nn::Matrix m(static_cast<Eigen::Index>(d.size()), 4);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (int j = 0; j < 4; ++j) m(static_cast<Eigen::Index>(i), j) = d.features[i][static_cast<std::size_t>(j)];
  return m;
}

eval::TpaConfig small_tpa(std::size_t rewards, std::size_t pairs, std::size_t epochs) {
  eval::TpaConfig c;
  c.rewards = rewards;
  c.pairs_per_reward = pairs;
  c.reward = reward::RewardConfig::for_env(env::EnvId::kGridRobot, true);
  c.reward.epochs = epochs;
  return c;
}

}  // namespace

TEST_CASE("index splits are seeded partitions of the right size") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(60);
    const double f = rng.uniform(0.05, 0.95);
    const std::uint64_t seed = rng.next_u64();
    const eval::IndexSplit s = eval::split_indices(n, f, seed);
    CHECK(s.train.size() == static_cast<std::size_t>(std::llround(f * static_cast<double>(n))));
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(n);
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(all == expected);
    const eval::IndexSplit again = eval::split_indices(n, f, seed);
    CHECK(again.train == s.train);
  }
}

TEST_CASE("FPE of the true features is zero") {
  const eval::FpeReport r = eval::fpe(feature_matrix(grid()), grid().features, 3);
  CHECK(r.mse < 1e-8);
  CHECK(r.probe.rows() == 5);
  CHECK(r.probe.cols() == 4);
}

TEST_CASE("FPE is invariant to invertible affine maps of the embedding") {
  Rng rng(4);
  const nn::Matrix w = sirl::testing::random_matrix(4, 6, rng);
  nn::Matrix e = feature_matrix(grid()) * w;
  e.rowwise() += sirl::testing::random_matrix(1, 6, rng).row(0);
  CHECK(eval::fpe(e, grid().features, 9).mse < 1e-8);
}

TEST_CASE("FPE of a constant embedding is the error of the train mean") {
  const nn::Matrix e = nn::Matrix::Constant(static_cast<Eigen::Index>(grid().size()), 6, 0.3);
  const std::uint64_t seed = 12;
  const eval::FpeReport r = eval::fpe(e, grid().features, seed);
  // Independent value: predict each feature by its train-split mean.
  const eval::IndexSplit s = eval::split_indices(grid().size(), 0.8, seed);
  double expected = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    double mean = 0.0;
    for (std::size_t i : s.train) mean += grid().features[i][k];
    mean /= static_cast<double>(s.train.size());
    for (std::size_t i : s.test) expected += std::pow(grid().features[i][k] - mean, 2);
  }
  expected /= 4.0 * static_cast<double>(s.test.size());
  CHECK(r.mse == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("FPE raises the ridge on a numerically singular design") {
  const nn::Matrix e = nn::Matrix::Constant(static_cast<Eigen::Index>(grid().size()), 6, 1e9);
  const eval::FpeReport r = eval::fpe(e, grid().features, 1);
  CHECK(r.ridge_used > 1e-6);
  CHECK(std::isfinite(r.mse));
  CHECK_THROWS_AS(eval::fpe(e.topRows(5), std::span(grid().features).first(5), 1), DataError);
  CHECK_THROWS_AS(eval::fpe(e.topRows(20), grid().features, 1), DataError);
}

TEST_CASE("FPE subsets are seeded, distinct and capped by the pool") {
  const auto a = eval::fpe_subset(490, 2000, 3);
  CHECK(a.size() == 490);
  CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 490);
  const auto b = eval::fpe_subset(5000, 2000, 3);
  CHECK(b.size() == 2000);
  CHECK(std::set<std::size_t>(b.begin(), b.end()).size() == 2000);
  CHECK(eval::fpe_subset(5000, 2000, 3) == b);
  CHECK_FALSE(eval::fpe_subset(5000, 2000, 4) == b);
}

TEST_CASE("order-free mean does not depend on order") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + rng.uniform_index(30));
    for (double& x : v) x = rng.uniform();
    const double m = eval::order_free_mean(v);
    rng.shuffle(std::span<double>(v));
    CHECK(eval::order_free_mean(v) == m);
    CHECK(m == doctest::Approx(std::accumulate(v.begin(), v.end(), 0.0) / v.size()));
  }
}

TEST_CASE("test rewards depend only on the seed") {
  const auto a = eval::test_rewards(20, 5);
  const auto b = eval::test_rewards(20, 5);
  const auto c = eval::test_rewards(20, 6);
  for (std::size_t i = 0; i < 20; ++i) CHECK(a[i].weights == b[i].weights);
  CHECK_FALSE(a[0].weights == c[0].weights);
}

TEST_CASE("TPA protocol shape, determinism and reward permutation") {
  const nn::Matrix e = feature_matrix(grid());
  const auto rewards = eval::test_rewards(3, 2);
  const eval::TpaConfig cfg = small_tpa(3, 60, 30);
  const eval::TpaReport r = eval::tpa_fixed(e, env::EnvId::kGridRobot, grid().features, rewards, 40, cfg, 8);
  REQUIRE(r.accuracies.size() == 3);
  for (double a : r.accuracies) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
  CHECK(r.m == 40);
  const eval::TpaReport again = eval::tpa_fixed(e, env::EnvId::kGridRobot, grid().features, rewards, 40, cfg, 8);
  CHECK(again.accuracies == r.accuracies);
  const std::vector<oracle::GroundTruthReward> swapped = {rewards[2], rewards[0], rewards[1]};
  const eval::TpaReport p = eval::tpa_fixed(e, env::EnvId::kGridRobot, grid().features, swapped, 40, cfg, 8);
  CHECK(p.accuracies == std::vector<double>{r.accuracies[2], r.accuracies[0], r.accuracies[1]});
  CHECK(p.mean == r.mean);
  // 60 pairs give 48 training pairs.
  CHECK_THROWS_AS(eval::tpa_fixed(e, env::EnvId::kGridRobot, grid().features, rewards, 49, cfg, 8),
                  ConfigError);
}

TEST_CASE("frozen TPA through a model equals TPA on its embedding matrix") {
  const rep::EmbeddingModel m = rep::random_embedding(env::EnvId::kGridRobot, 19, 4);
  const auto rewards = eval::test_rewards(2, 1);
  const eval::TpaConfig cfg = small_tpa(2, 50, 10);
  const eval::TpaReport a = eval::tpa(m, grid().trajectories, grid().features, rewards, 20, cfg, 3);
  const eval::TpaReport b = eval::tpa_fixed(rep::embed_all(m, grid().trajectories), env::EnvId::kGridRobot,
                                            grid().features, rewards, 20, cfg, 3);
  CHECK(a.accuracies == b.accuracies);
}

TEST_CASE("retrieval returns the nearest and farthest trajectories") {
  const rep::EmbeddingModel m = rep::random_embedding(env::EnvId::kGridRobot, 19, 4);
  const std::size_t q = 37;
  const eval::RetrievalResult r = eval::retrieve_extremes(m, grid().trajectories[q], grid().trajectories, 3);
  REQUIRE(r.most_similar.size() == 3);
  REQUIRE(r.most_dissimilar.size() == 3);
  REQUIRE(r.distances.size() == grid().size());
  CHECK(r.most_similar.front() == q);
  // Batched and single-row embedding round differently.
  CHECK(r.distances[q] < 1e-20);
  const double far = *std::max_element(r.distances.begin(), r.distances.end());
  CHECK(r.distances[r.most_dissimilar.front()] == far);
  for (std::size_t i = 0; i < grid().size(); ++i) {
    if (std::find(r.most_similar.begin(), r.most_similar.end(), i) == r.most_similar.end())
      CHECK(r.distances[i] >= r.distances[r.most_similar.back()]);
    CHECK(r.distances[i] == doctest::Approx(rep::traj_distance(m, grid().trajectories[q], grid().trajectories[i])));
  }
  for (std::size_t i = 1; i < 3; ++i) {
    CHECK(r.distances[r.most_similar[i - 1]] <= r.distances[r.most_similar[i]]);
    CHECK(r.distances[r.most_dissimilar[i - 1]] >= r.distances[r.most_dissimilar[i]]);
  }
}

TEST_CASE("merged answers drop exact duplicates across responders") {
  eval::ResponderData a{"a", {{0, 1, 2, 3, "a", {}}, {1, 4, 5, 6, "a", {}}}, {}};
  eval::ResponderData b{"b", {{0, 2, 1, 3, "b", {}}, {1, 4, 6, 5, "b", {}}}, {}};
  const std::vector<eval::ResponderData> both = {a, b};
  const auto merged = eval::merge_answers(both);
  // (2,1 | 3) repeats (1,2 | 3); (4,6 | 5) is a different answer.
  CHECK(merged.size() == 3);
  CHECK(eval::merge_answers(both, 0).size() == 2);
  CHECK(eval::merge_answers(both, 1).size() == 2);
}

TEST_CASE("held-out evaluation of identical responders matches pooled") {
  const auto queries = oracle::sample_similarity_queries(grid().size(), 40, 1);
  const auto sim = oracle::simulate_similarity(queries, grid().features, "x");
  const auto pq = oracle::sample_preference_queries(grid().size(), 30, 2);
  const auto prefs = oracle::answer_preferences(pq, eval::test_rewards(1, 3).front(), grid().features);
  std::vector<eval::ResponderData> rs;
  for (const char* name : {"r1", "r2"}) {
    eval::ResponderData d{name, sim, prefs};
    for (auto& s : d.similarity) s.responder = name;
    for (auto& p : d.preferences) p.responder = name;
    rs.push_back(d);
  }
  eval::HeldoutConfig cfg;
  cfg.sirl.epochs = 5;
  cfg.reward = reward::RewardConfig::for_env(env::EnvId::kGridRobot, true);
  cfg.reward.epochs = 5;
  cfg.splits = 3;
  const auto reports = eval::heldout_eval(grid(), rs, cfg, 7);
  REQUIRE(reports.size() == 2);
  for (const auto& r : reports) {
    CHECK(r.heldout.accuracies.size() == 3);
    CHECK(r.heldout.accuracies == r.pooled.accuracies);
  }
}
