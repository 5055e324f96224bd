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

#ifndef SIRL_ORACLE_HPP_
#define SIRL_ORACLE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sirl/env/trajectory.hpp"

namespace sirl::oracle {

using env::FeatureVector;

struct SimilarityQuery {
  std::uint64_t id = 0;
  std::array<std::size_t, 3> trajectories{};
};

// The labeler's pick: `first` and `second` are the most similar pair, `odd`
// the remaining trajectory.
struct SimilarityAnswer {
  std::uint64_t query_id = 0;
  std::size_t first = 0;
  std::size_t second = 0;
  std::size_t odd = 0;
  std::string responder;
  std::optional<double> elapsed_ms;

  bool operator==(const SimilarityAnswer&) const = default;
};

struct PreferenceQuery {
  std::uint64_t id = 0;
  std::size_t a = 0;
  std::size_t b = 0;
};

// label == 1 means `a` is preferred over `b`.
struct PreferenceLabel {
  std::uint64_t query_id = 0;
  std::size_t a = 0;
  std::size_t b = 0;
  int label = 0;
  std::string responder;
  std::optional<double> elapsed_ms;

  bool operator==(const PreferenceLabel&) const = default;
};

// Linear reward over normalized features, unit L2 norm.
struct GroundTruthReward {
  std::array<double, env::kFeatureCount> weights{};

  double operator()(const FeatureVector& features) const;
};

// Chooses the pair closest in feature space. Pairs are scanned in the order
// (0,1), (0,2), (1,2) and only a strictly smaller distance replaces the
// current best, so ties go to the lowest index pair.
SimilarityAnswer answer_similarity(const SimilarityQuery& query,
                                   std::span<const FeatureVector, 3> features);
SimilarityAnswer answer_similarity(const SimilarityQuery& query,
                                   std::span<const FeatureVector> pool_features);

// Optional Boltzmann noise: P(label = 1) = sigmoid(dR / temperature).
// temperature == 0 is the deterministic argmax, with ties going to `a`.
struct PreferenceNoise {
  double temperature = 0.0;
  std::uint64_t seed = 0;
};

PreferenceLabel answer_preference(const PreferenceQuery& query, const GroundTruthReward& reward,
                                  const FeatureVector& features_a,
                                  const FeatureVector& features_b);

std::vector<PreferenceLabel> answer_preferences(std::span<const PreferenceQuery> queries,
                                                const GroundTruthReward& reward,
                                                std::span<const FeatureVector> pool_features,
                                                const PreferenceNoise& noise = {});

// Weights uniform on [-1, 1]^4, then normalized.
std::vector<GroundTruthReward> sample_rewards(std::size_t count, std::uint64_t seed);

// All features weighted equally and treated as costs.
GroundTruthReward equal_weight_reward();

// Query sampling over a pool of `pool_size` trajectories. Members of one
// query are distinct.
std::vector<SimilarityQuery> sample_similarity_queries(std::size_t pool_size, std::size_t count,
                                                       std::uint64_t seed);
std::vector<PreferenceQuery> sample_preference_queries(std::size_t pool_size, std::size_t count,
                                                       std::uint64_t seed);

std::vector<SimilarityAnswer> simulate_similarity(std::span<const SimilarityQuery> queries,
                                                  std::span<const FeatureVector> pool_features,
                                                  const std::string& responder);

// Line-delimited JSON records, one per line, keys in sorted order.
std::string to_record(const SimilarityQuery& query);
std::string to_record(const SimilarityAnswer& answer);
std::string to_record(const PreferenceQuery& query);
std::string to_record(const PreferenceLabel& label);

SimilarityAnswer parse_similarity_answer(const std::string& line);
PreferenceLabel parse_preference_label(const std::string& line);

void write_similarity_answers(const std::filesystem::path& path,
                              std::span<const SimilarityAnswer> answers);
std::vector<SimilarityAnswer> read_similarity_answers(const std::filesystem::path& path);
void write_preference_labels(const std::filesystem::path& path,
                             std::span<const PreferenceLabel> labels);
std::vector<PreferenceLabel> read_preference_labels(const std::filesystem::path& path);

}  // namespace sirl::oracle

#endif  // SIRL_ORACLE_HPP_
