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

#include "sirl/oracle.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "sirl/error.hpp"
#include "sirl/nn/losses.hpp"
#include "sirl/random.hpp"

namespace sirl::oracle {

namespace {

using json = nlohmann::json;

double squared_gap(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < env::kFeatureCount; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

json parse_line(const std::string& line, const char* kind) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed record: ") + e.what());
  }
  if (!j.is_object() || j.value("kind", "") != kind)
    throw DataError(std::string("expected a '") + kind + "' record");
  return j;
}

template <typename T, typename Parse>
std::vector<T> read_lines(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<T> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse(line));
  }
  return out;
}

template <typename T>
void write_lines(const std::filesystem::path& path, std::span<const T> items) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const T& item : items) out << to_record(item) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace

double GroundTruthReward::operator()(const FeatureVector& features) const {
  double r = 0.0;
  for (std::size_t d = 0; d < env::kFeatureCount; ++d) r += weights[d] * features[d];
  return r;
}

SimilarityAnswer answer_similarity(const SimilarityQuery& query,
                                   std::span<const FeatureVector, 3> f) {
  static constexpr std::array<std::array<int, 3>, 3> kPairs = {{{0, 1, 2}, {0, 2, 1}, {1, 2, 0}}};
  int best = 0;
  double best_gap = squared_gap(f[0], f[1]);
  for (int p = 1; p < 3; ++p) {
    const double gap = squared_gap(f[kPairs[p][0]], f[kPairs[p][1]]);
    if (gap < best_gap) {
      best = p;
      best_gap = gap;
    }
  }
  SimilarityAnswer a;
  a.query_id = query.id;
  a.first = query.trajectories[kPairs[best][0]];
  a.second = query.trajectories[kPairs[best][1]];
  a.odd = query.trajectories[kPairs[best][2]];
  return a;
}

SimilarityAnswer answer_similarity(const SimilarityQuery& query,
                                   std::span<const FeatureVector> pool_features) {
  std::array<FeatureVector, 3> f{};
  for (int i = 0; i < 3; ++i) {
    if (query.trajectories[i] >= pool_features.size())
      throw DataError("similarity query references an unknown trajectory");
    f[i] = pool_features[query.trajectories[i]];
  }
  return answer_similarity(query, std::span<const FeatureVector, 3>(f));
}

PreferenceLabel answer_preference(const PreferenceQuery& query, const GroundTruthReward& reward,
                                  const FeatureVector& features_a,
                                  const FeatureVector& features_b) {
  PreferenceLabel l;
  l.query_id = query.id;
  l.a = query.a;
  l.b = query.b;
  l.label = reward(features_a) >= reward(features_b) ? 1 : 0;
  return l;
}

std::vector<PreferenceLabel> answer_preferences(std::span<const PreferenceQuery> queries,
                                                const GroundTruthReward& reward,
                                                std::span<const FeatureVector> pool_features,
                                                const PreferenceNoise& noise) {
  Rng rng(noise.seed);
  std::vector<PreferenceLabel> out;
  out.reserve(queries.size());
  for (const PreferenceQuery& q : queries) {
    if (q.a >= pool_features.size() || q.b >= pool_features.size())
      throw DataError("preference query references an unknown trajectory");
    PreferenceLabel l = answer_preference(q, reward, pool_features[q.a], pool_features[q.b]);
    if (noise.temperature > 0.0) {
      const double gap = reward(pool_features[q.a]) - reward(pool_features[q.b]);
      l.label = rng.uniform() < nn::sigmoid(gap / noise.temperature) ? 1 : 0;
    }
    out.push_back(std::move(l));
  }
  return out;
}

std::vector<GroundTruthReward> sample_rewards(std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ConfigError("reward count must be positive");
  Rng rng(seed);
  std::vector<GroundTruthReward> out;
  out.reserve(count);
  while (out.size() < count) {
    GroundTruthReward r;
    double norm = 0.0;
    for (double& w : r.weights) {
      w = rng.uniform(-1.0, 1.0);
      norm += w * w;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-9) continue;
    for (double& w : r.weights) w /= norm;
    out.push_back(r);
  }
  return out;
}

GroundTruthReward equal_weight_reward() { return GroundTruthReward{{-0.5, -0.5, -0.5, -0.5}}; }

std::vector<SimilarityQuery> sample_similarity_queries(std::size_t pool_size, std::size_t count,
                                                       std::uint64_t seed) {
  if (pool_size < 3) throw DataError("similarity queries need at least three trajectories");
  Rng rng(seed);
  std::vector<SimilarityQuery> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SimilarityQuery q;
    q.id = i;
    q.trajectories[0] = rng.uniform_index(pool_size);
    do {
      q.trajectories[1] = rng.uniform_index(pool_size);
    } while (q.trajectories[1] == q.trajectories[0]);
    do {
      q.trajectories[2] = rng.uniform_index(pool_size);
    } while (q.trajectories[2] == q.trajectories[0] || q.trajectories[2] == q.trajectories[1]);
    out.push_back(q);
  }
  return out;
}

std::vector<PreferenceQuery> sample_preference_queries(std::size_t pool_size, std::size_t count,
                                                       std::uint64_t seed) {
  if (pool_size < 2) throw DataError("preference queries need at least two trajectories");
  Rng rng(seed);
  std::vector<PreferenceQuery> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    PreferenceQuery q;
    q.id = i;
    q.a = rng.uniform_index(pool_size);
    do {
      q.b = rng.uniform_index(pool_size);
    } while (q.b == q.a);
    out.push_back(q);
  }
  return out;
}

std::vector<SimilarityAnswer> simulate_similarity(std::span<const SimilarityQuery> queries,
                                                  std::span<const FeatureVector> pool_features,
                                                  const std::string& responder) {
  std::vector<SimilarityAnswer> out;
  out.reserve(queries.size());
  for (const SimilarityQuery& q : queries) {
    SimilarityAnswer a = answer_similarity(q, pool_features);
    a.responder = responder;
    out.push_back(std::move(a));
  }
  return out;
}

std::string to_record(const SimilarityQuery& query) {
  json j;
  j["kind"] = "similarity_query";
  j["query_id"] = query.id;
  j["trajectories"] = query.trajectories;
  return j.dump();
}

std::string to_record(const SimilarityAnswer& a) {
  json j;
  j["kind"] = "similarity";
  j["query_id"] = a.query_id;
  j["p1"] = a.first;
  j["p2"] = a.second;
  j["n"] = a.odd;
  j["responder"] = a.responder;
  if (a.elapsed_ms) j["elapsed_ms"] = *a.elapsed_ms;
  return j.dump();
}

std::string to_record(const PreferenceQuery& query) {
  json j;
  j["kind"] = "preference_query";
  j["query_id"] = query.id;
  j["a"] = query.a;
  j["b"] = query.b;
  return j.dump();
}

std::string to_record(const PreferenceLabel& l) {
  json j;
  j["kind"] = "preference";
  j["query_id"] = l.query_id;
  j["a"] = l.a;
  j["b"] = l.b;
  j["label"] = l.label;
  j["responder"] = l.responder;
  if (l.elapsed_ms) j["elapsed_ms"] = *l.elapsed_ms;
  return j.dump();
}

SimilarityAnswer parse_similarity_answer(const std::string& line) {
  const json j = parse_line(line, "similarity");
  try {
    SimilarityAnswer a;
    a.query_id = j.at("query_id").get<std::uint64_t>();
    a.first = j.at("p1").get<std::size_t>();
    a.second = j.at("p2").get<std::size_t>();
    a.odd = j.at("n").get<std::size_t>();
    a.responder = j.at("responder").get<std::string>();
    if (j.contains("elapsed_ms")) a.elapsed_ms = j.at("elapsed_ms").get<double>();
    if (a.first == a.second || a.first == a.odd || a.second == a.odd)
      throw DataError("similarity record repeats a trajectory");
    return a;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed similarity record: ") + e.what());
  }
}

PreferenceLabel parse_preference_label(const std::string& line) {
  const json j = parse_line(line, "preference");
  try {
    PreferenceLabel l;
    l.query_id = j.at("query_id").get<std::uint64_t>();
    l.a = j.at("a").get<std::size_t>();
    l.b = j.at("b").get<std::size_t>();
    l.label = j.at("label").get<int>();
    l.responder = j.at("responder").get<std::string>();
    if (j.contains("elapsed_ms")) l.elapsed_ms = j.at("elapsed_ms").get<double>();
    if (l.label != 0 && l.label != 1) throw DataError("preference label must be 0 or 1");
    return l;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed preference record: ") + e.what());
  }
}

void write_similarity_answers(const std::filesystem::path& path,
                              std::span<const SimilarityAnswer> answers) {
  write_lines(path, answers);
}

std::vector<SimilarityAnswer> read_similarity_answers(const std::filesystem::path& path) {
  return read_lines<SimilarityAnswer>(path, parse_similarity_answer);
}

void write_preference_labels(const std::filesystem::path& path,
                             std::span<const PreferenceLabel> labels) {
  write_lines(path, labels);
}

std::vector<PreferenceLabel> read_preference_labels(const std::filesystem::path& path) {
  return read_lines<PreferenceLabel>(path, parse_preference_label);
}

}  // namespace sirl::oracle
