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

#ifndef SIRL_SERVICE_HPP_
#define SIRL_SERVICE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sirl/config.hpp"
#include "sirl/env/dataset.hpp"
#include "sirl/oracle.hpp"

namespace sirl::service {

enum class Phase { kPracticeSimilarity, kSimilarity, kPracticePreference, kPreference, kDone };

std::string to_string(Phase phase);
// Throws UsageError for unknown names.
Phase parse_phase(const std::string& name);
bool is_practice(Phase phase);
bool is_similarity(Phase phase);

struct SceneObject {
  std::string label;
  std::array<double, 3> position{};
  std::optional<double> facing;  // radians, for objects with a heading
};

// What a labeling client needs to draw one trajectory: H+1 waypoints in
// world coordinates with an orientation (radians) at each waypoint.
struct RenderableTrajectory {
  std::size_t id = 0;
  std::vector<std::array<double, 3>> waypoints;
  std::vector<double> orientation;
  std::vector<SceneObject> objects;
};

RenderableTrajectory renderable(const env::Trajectory& trajectory, std::size_t id,
                                const env::Scene& scene);

struct Query {
  std::uint64_t id = 0;  // position in the session's full query list
  Phase phase = Phase::kPracticeSimilarity;
  std::size_t index = 0;  // position within the phase
  std::vector<std::size_t> trajectories;  // 3 for similarity, 2 for preference
};

// Similarity answers name the chosen pair and the odd one out; preference
// answers name the preferred trajectory. All by trajectory id.
struct Choice {
  std::optional<std::size_t> p1, p2, n;
  std::optional<std::size_t> preferred;
};

struct Counts {
  std::size_t practice_similarity = 5;
  std::size_t similarity = 100;
  std::size_t practice_preference = 5;
  std::size_t preference = 100;

  std::size_t of(Phase phase) const;
};

// Queries for one responder, pre-generated from the session seed.
std::vector<Query> session_queries(const std::string& responder, std::size_t pool_size,
                                   const Counts& counts, std::uint64_t seed);

// A reply body plus the HTTP status it maps to.
struct Reply {
  int status = 200;
  std::string body;  // JSON, or JSON lines for exports
  std::string content_type = "application/json";
};

// Labeling sessions over one trajectory pool. Answers go to an append-only
// JSON-lines log; constructing the service replays an existing log, so
// sessions survive restarts and exports are a pure function of the log.
class QueryService {
 public:
  QueryService(env::Dataset dataset, Counts counts, std::uint64_t seed,
               std::filesystem::path log_path);

  Reply next(const std::string& session);
  Reply answer(const std::string& session, const std::string& body);
  Reply answer(const std::string& session, std::uint64_t query_id, const Choice& choice,
               std::optional<double> elapsed_ms);
  Reply export_phase(const std::string& phase) const;
  Reply health() const;

  std::string scenario() const;
  const env::Dataset& dataset() const { return dataset_; }
  std::size_t answered(const std::string& session) const;

 private:
  struct Session {
    std::string responder;
    std::vector<Query> queries;
    std::size_t cursor = 0;
    mutable std::mutex mutex;
  };
  struct Logged {
    std::string responder;
    Phase phase;
    std::string record;  // oracle record line
  };

  Session& session(const std::string& id);
  Session* find(const std::string& id) const;
  std::string payload(const Session& s) const;
  std::string apply(Session& s, const Query& q, const Choice& choice,
                    std::optional<double> elapsed_ms);
  void replay();

  env::Dataset dataset_;
  Counts counts_;
  std::uint64_t seed_;
  std::filesystem::path log_path_;
  std::string pool_digest_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;

  mutable std::mutex log_mutex_;
  std::ofstream log_;
  std::vector<Logged> records_;
};

// Export bodies: oracle records grouped by responder (responders in name
// order, answers in submission order).
std::vector<eval::ResponderData> group_export(const std::string& similarity_jsonl,
                                              const std::string& preference_jsonl);

bool valid_session_id(const std::string& id);

}  // namespace sirl::service

#endif  // SIRL_SERVICE_HPP_
