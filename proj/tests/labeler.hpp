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

#ifndef SIRL_TESTS_LABELER_HPP_
#define SIRL_TESTS_LABELER_HPP_

#include <array>
#include <string>

#include "json.hpp"
#include "sirl/env/dataset.hpp"
#include "sirl/oracle.hpp"

namespace sirl::testing {

// Stands in for a person at the labeling page: reads a /next payload and
// answers it like the simulated human would. Returns the /answer body.
inline std::string label_payload(const std::string& payload, const env::Dataset& pool,
                                 const oracle::GroundTruthReward& reward, double elapsed_ms = 900.0) {
  const nlohmann::json q = nlohmann::json::parse(payload);
  std::vector<std::size_t> ids;
  for (const auto& t : q.at("trajectories")) ids.push_back(t.at("id").get<std::size_t>());
  nlohmann::json choice;
  if (q.at("kind") == "similarity") {
    oracle::SimilarityQuery sq{q.at("query_id").get<std::uint64_t>(), {ids.at(0), ids.at(1), ids.at(2)}};
    const oracle::SimilarityAnswer a = oracle::answer_similarity(sq, pool.features);
    choice = {{"p1", a.first}, {"p2", a.second}, {"n", a.odd}};
  } else {
    const bool first = reward(pool.features[ids.at(0)]) >= reward(pool.features[ids.at(1)]);
    choice = {{"preferred", first ? ids.at(0) : ids.at(1)}};
  }
  return nlohmann::json{{"query_id", q.at("query_id")}, {"choice", choice}, {"elapsed_ms", elapsed_ms}}.dump();
}

}  // namespace sirl::testing

#endif  // SIRL_TESTS_LABELER_HPP_
