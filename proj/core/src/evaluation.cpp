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

#include "sirl/evaluation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>
#include <tuple>

#include <Eigen/Cholesky>

#include "sirl/error.hpp"
#include "sirl/random.hpp"

namespace sirl::eval {

namespace {

enum : std::uint64_t {
  kTagSplit = 21,
  kTagSubset = 22,
  kTagRewards = 23,
  kTagPairs = 24,
  kTagTrain = 25,
  kTagHeldout = 26,
  kTagCv = 27,
};

std::uint64_t reward_key(const oracle::GroundTruthReward& r) {
  std::uint64_t h = 0;
  for (double w : r.weights) h = mix_seed(h ^ std::bit_cast<std::uint64_t>(w));
  return h;
}

}  // namespace

IndexSplit split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train fraction must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {kTagSplit}));
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  IndexSplit s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return s;
}

FpeReport fpe(const nn::Matrix& embeddings, std::span<const env::FeatureVector> features,
              std::uint64_t split_seed, const FpeConfig& config) {
  const auto n = static_cast<std::size_t>(embeddings.rows());
  if (n != features.size()) throw DataError("FPE embeddings and labels differ in count");
  if (n < 10) throw DataError("FPE needs at least 10 labeled trajectories");
  const IndexSplit split = split_indices(n, config.train_fraction, split_seed);
  if (split.test.empty() || split.train.empty()) throw DataError("FPE split left an empty side");

  const Eigen::Index d = embeddings.cols();
  const auto k = static_cast<Eigen::Index>(env::kFeatureCount);
  auto design = [&](const std::vector<std::size_t>& rows) {
    nn::Matrix x(static_cast<Eigen::Index>(rows.size()), d + 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)).head(d) = embeddings.row(static_cast<Eigen::Index>(rows[i]));
      x(static_cast<Eigen::Index>(i), d) = 1.0;
    }
    return x;
  };
  auto targets = [&](const std::vector<std::size_t>& rows) {
    nn::Matrix y(static_cast<Eigen::Index>(rows.size()), k);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (Eigen::Index j = 0; j < k; ++j) y(static_cast<Eigen::Index>(i), j) = features[rows[i]][static_cast<std::size_t>(j)];
    return y;
  };

  const nn::Matrix x_train = design(split.train);
  const nn::Matrix y_train = targets(split.train);
  const Eigen::MatrixXd gram = x_train.transpose() * x_train;
  const Eigen::MatrixXd rhs = x_train.transpose() * y_train;

  FpeReport report;
  double ridge = config.ridge;
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-13) {
      report.probe = ldlt.solve(rhs);
      break;
    }
    if (attempt >= 12) throw NumericalError("FPE probe design matrix is degenerate");
    ridge *= 100.0;
    std::cerr << "warning: degenerate FPE design matrix, retrying with ridge " << ridge << '\n';
  }
  report.ridge_used = ridge;
  if (!report.probe.allFinite()) throw NumericalError("FPE probe weights are not finite");

  const nn::Matrix residual = design(split.test) * report.probe - targets(split.test);
  report.mse = residual.squaredNorm() / static_cast<double>(residual.size());
  return report;
}

FpeReport fpe(const rep::EmbeddingModel& model, std::span<const env::Trajectory> trajectories,
              std::span<const env::FeatureVector> features, std::uint64_t split_seed,
              const FpeConfig& config) {
  FpeReport r = fpe(rep::embed_all(model, trajectories), features, split_seed, config);
  r.method = model.provenance;
  r.n = model.budget;
  r.seed = split_seed;
  return r;
}

std::vector<std::size_t> fpe_subset(std::size_t pool_size, std::size_t size, std::uint64_t seed) {
  std::vector<std::size_t> order(pool_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {kTagSubset}));
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(std::min(size, pool_size));
  return order;
}

double order_free_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double s = 0.0;
  for (double v : sorted) s += v;
  return s / static_cast<double>(sorted.size());
}

std::vector<oracle::GroundTruthReward> test_rewards(std::size_t count, std::uint64_t seed) {
  return oracle::sample_rewards(count, derive_seed(seed, {kTagRewards}));
}

namespace {

// Runs `score(train, test, key)` for each reward on its own labeled pairs.
TpaReport tpa_loop(std::span<const env::FeatureVector> pool_features,
                   std::span<const oracle::GroundTruthReward> rewards, std::size_t m,
                   const TpaConfig& config, std::uint64_t seed,
                   const std::function<double(std::span<const oracle::PreferenceLabel>,
                                              std::span<const oracle::PreferenceLabel>,
                                              std::uint64_t)>& score) {
  if (m == 0) throw ConfigError("TPA needs M >= 1 training queries");
  if (rewards.empty()) throw ConfigError("TPA needs at least one test reward");
  TpaReport report;
  report.m = m;
  report.seed = seed;
  for (const auto& r : rewards) {
    const std::uint64_t key = derive_seed(seed, {reward_key(r)});
    const auto queries = oracle::sample_preference_queries(pool_features.size(),
                                                           config.pairs_per_reward,
                                                           derive_seed(key, {kTagPairs}));
    const auto labels = oracle::answer_preferences(queries, r, pool_features);
    const auto split = reward::split_preferences(labels, config.train_fraction, key);
    if (m > split.train.size())
      throw ConfigError("M = " + std::to_string(m) + " exceeds the " +
                        std::to_string(split.train.size()) + " available training pairs");
    report.accuracies.push_back(score(std::span(split.train.data(), m), split.test,
                                      derive_seed(key, {kTagTrain})));
  }
  report.mean = order_free_mean(report.accuracies);
  return report;
}

}  // namespace

TpaReport tpa(const rep::EmbeddingModel& model, std::span<const env::Trajectory> pool,
              std::span<const env::FeatureVector> pool_features,
              std::span<const oracle::GroundTruthReward> rewards, std::size_t m,
              const TpaConfig& config, std::uint64_t seed) {
  TpaReport report;
  if (config.reward.frozen) {
    report = tpa_fixed(rep::embed_all(model, pool), model.env, pool_features, rewards, m,
                       config, seed);
  } else {
    report = tpa_loop(pool_features, rewards, m, config, seed,
                      [&](auto train, auto test, std::uint64_t s) {
                        const auto rm = reward::train_reward(model, pool, train, config.reward, s);
                        return reward::preference_accuracy(rm, pool, test);
                      });
  }
  report.method = model.provenance;
  report.n = model.budget;
  return report;
}

TpaReport tpa_fixed(const nn::Matrix& embeddings, env::EnvId env,
                    std::span<const env::FeatureVector> pool_features,
                    std::span<const oracle::GroundTruthReward> rewards, std::size_t m,
                    const TpaConfig& config, std::uint64_t seed) {
  if (static_cast<std::size_t>(embeddings.rows()) != pool_features.size())
    throw DataError("TPA embeddings and pool differ in size");
  return tpa_loop(pool_features, rewards, m, config, seed,
                  [&](auto train, auto test, std::uint64_t s) {
                    const auto head = reward::train_head(embeddings, env, train, config.reward, s);
                    return reward::accuracy_of(reward::head_rewards(head, embeddings), test);
                  });
}

RetrievalResult retrieve_extremes(const rep::EmbeddingModel& model, const env::Trajectory& query,
                                  std::span<const env::Trajectory> pool, std::size_t k) {
  if (pool.empty()) throw DataError("retrieval pool is empty");
  const nn::Matrix emb = rep::embed_all(model, pool);
  const nn::Vector q = rep::embed(model, query);
  RetrievalResult r;
  r.distances.resize(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    r.distances[i] = (emb.row(static_cast<Eigen::Index>(i)).transpose() - q).squaredNorm();
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r.distances[a] < r.distances[b]; });
  k = std::min(k, pool.size());
  r.most_similar.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  r.most_dissimilar.assign(order.rbegin(), order.rbegin() + static_cast<std::ptrdiff_t>(k));
  return r;
}

std::vector<oracle::SimilarityAnswer> merge_answers(std::span<const ResponderData> responders,
                                                    std::ptrdiff_t exclude) {
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  std::vector<oracle::SimilarityAnswer> out;
  for (std::size_t r = 0; r < responders.size(); ++r) {
    if (static_cast<std::ptrdiff_t>(r) == exclude) continue;
    for (const auto& a : responders[r].similarity) {
      const auto key = std::make_tuple(std::min(a.first, a.second), std::max(a.first, a.second), a.odd);
      if (seen.insert(key).second) out.push_back(a);
    }
  }
  return out;
}

TpaReport preference_cv(const rep::EmbeddingModel& model, std::span<const env::Trajectory> pool,
                        std::span<const oracle::PreferenceLabel> preferences,
                        const HeldoutConfig& config, std::uint64_t seed) {
  if (preferences.size() < 2) throw DataError("cross-validation needs at least two preferences");
  TpaReport report;
  report.method = model.provenance;
  report.n = model.budget;
  report.seed = seed;
  for (std::size_t s = 0; s < config.splits; ++s) {
    const std::uint64_t key = derive_seed(seed, {kTagCv, s});
    const auto split = reward::split_preferences(preferences, config.train_fraction, key);
    if (split.train.empty() || split.test.empty()) throw DataError("cross-validation split is empty");
    report.m = split.train.size();
    const auto rm = reward::train_reward(model, pool, split.train, config.reward,
                                         derive_seed(key, {kTagTrain}));
    report.accuracies.push_back(reward::preference_accuracy(rm, pool, split.test));
  }
  report.mean = order_free_mean(report.accuracies);
  return report;
}

std::vector<HeldoutReport> heldout_eval(const env::Dataset& dataset,
                                        std::span<const ResponderData> responders,
                                        const HeldoutConfig& config, std::uint64_t seed) {
  if (responders.size() < 2) throw ConfigError("held-out evaluation needs at least two responders");
  for (const auto& r : responders) {
    if (r.similarity.empty() || r.preferences.empty())
      throw DataError("responder '" + r.responder + "' has no data");
  }
  const std::uint64_t sirl_seed = derive_seed(seed, {kTagHeldout});
  const auto pooled_answers = merge_answers(responders);
  const rep::EmbeddingModel pooled =
      rep::train_sirl(dataset.trajectories, pooled_answers, config.sirl, sirl_seed);

  std::vector<HeldoutReport> out;
  for (std::size_t i = 0; i < responders.size(); ++i) {
    const auto answers = merge_answers(responders, static_cast<std::ptrdiff_t>(i));
    if (answers.empty()) throw DataError("no similarity answers remain after holding out a responder");
    // Identical training data yields an identical embedding; skip retraining.
    const bool same = std::equal(answers.begin(), answers.end(), pooled_answers.begin(),
                                 pooled_answers.end(), [](const auto& a, const auto& b) {
                                   return a.first == b.first && a.second == b.second && a.odd == b.odd;
                                 });
    const rep::EmbeddingModel held = same
                                         ? pooled
                                         : rep::train_sirl(dataset.trajectories, answers,
                                                           config.sirl, sirl_seed);
    HeldoutReport r;
    r.responder = responders[i].responder;
    r.heldout = preference_cv(held, dataset.trajectories, responders[i].preferences, config, seed);
    r.pooled = preference_cv(pooled, dataset.trajectories, responders[i].preferences, config, seed);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sirl::eval
