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

#include "sirl/service.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "sirl/env/arm_lite.hpp"
#include "sirl/env/grid_robot.hpp"
#include "sirl/error.hpp"
#include "sirl/manifest.hpp"
#include "sirl/random.hpp"

namespace sirl::service {

using nlohmann::json;

namespace {

constexpr const char* kLogFormat = "sirl-answer-log-v1";
constexpr std::array<Phase, 4> kPhases = {Phase::kPracticeSimilarity, Phase::kSimilarity,
                                          Phase::kPracticePreference, Phase::kPreference};

Reply error(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

json to_json(const RenderableTrajectory& r) {
  json objects = json::array();
  for (const auto& o : r.objects) {
    json jo = {{"label", o.label}, {"position", o.position}};
    if (o.facing) jo["facing"] = *o.facing;
    objects.push_back(jo);
  }
  return {{"id", r.id}, {"waypoints", r.waypoints}, {"orientation", r.orientation},
          {"objects", objects}};
}

json counts_json(const Counts& c) {
  return {{"practice_similarity", c.practice_similarity},
          {"similarity", c.similarity},
          {"practice_preference", c.practice_preference},
          {"preference", c.preference}};
}

Choice choice_from_record(Phase phase, const std::string& record) {
  Choice c;
  if (is_similarity(phase)) {
    const auto a = oracle::parse_similarity_answer(record);
    c.p1 = a.first;
    c.p2 = a.second;
    c.n = a.odd;
  } else {
    const auto l = oracle::parse_preference_label(record);
    c.preferred = l.label == 1 ? l.a : l.b;
  }
  return c;
}

std::optional<std::size_t> optional_index(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  const json& v = j.at(key);
  if (!v.is_number_unsigned()) throw UsageError(std::string("choice field '") + key + "' must be a trajectory id");
  return v.get<std::size_t>();
}

}  // namespace

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::kPracticeSimilarity: return "practice-similarity";
    case Phase::kSimilarity: return "similarity";
    case Phase::kPracticePreference: return "practice-preference";
    case Phase::kPreference: return "preference";
    case Phase::kDone: return "done";
  }
  return "done";
}

Phase parse_phase(const std::string& name) {
  for (Phase p : kPhases)
    if (to_string(p) == name) return p;
  if (name == "done") return Phase::kDone;
  throw UsageError("unknown phase '" + name + "'");
}

bool is_practice(Phase phase) {
  return phase == Phase::kPracticeSimilarity || phase == Phase::kPracticePreference;
}

bool is_similarity(Phase phase) {
  return phase == Phase::kPracticeSimilarity || phase == Phase::kSimilarity;
}

std::size_t Counts::of(Phase phase) const {
  switch (phase) {
    case Phase::kPracticeSimilarity: return practice_similarity;
    case Phase::kSimilarity: return similarity;
    case Phase::kPracticePreference: return practice_preference;
    case Phase::kPreference: return preference;
    case Phase::kDone: return 0;
  }
  return 0;
}

bool valid_session_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
           c == '_' || c == '.';
  });
}

RenderableTrajectory renderable(const env::Trajectory& t, std::size_t id, const env::Scene& scene) {
  RenderableTrajectory r;
  r.id = id;
  if (t.env == env::EnvId::kGridRobot) {
    const auto cells = env::grid_cells(t);
    const double end = env::grid_end_angle_deg(t) * 3.141592653589793 / 180.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      r.waypoints.push_back({static_cast<double>(cells[i].x), static_cast<double>(cells[i].y), 0.0});
      if (i + 1 < cells.size()) {
        r.orientation.push_back(std::atan2(static_cast<double>(cells[i + 1].y - cells[i].y),
                                           static_cast<double>(cells[i + 1].x - cells[i].x)));
      } else {
        r.orientation.push_back(end);
      }
    }
    const auto& g = scene.grid;
    auto cell = [](env::Cell c) {
      return std::array<double, 3>{static_cast<double>(c.x), static_cast<double>(c.y), 0.0};
    };
    r.objects = {{"obstacle1", cell(g.obstacle1), std::nullopt},
                 {"obstacle2", cell(g.obstacle2), std::nullopt},
                 {"laptop", cell(g.laptop), std::nullopt}};
  } else {
    for (std::size_t i = 0; i < t.num_states; ++i) {
      const auto s = t.state(i);
      r.waypoints.push_back({s[0], s[1], s[2]});
      // Rotation is R_x(tilt), row-major from offset 3.
      r.orientation.push_back(std::atan2(s[3 + 7], s[3 + 4]));
    }
    const auto& a = scene.arm;
    r.objects = {{"table",
                  {(a.box_min[0] + a.box_max[0]) / 2, (a.box_min[1] + a.box_max[1]) / 2, a.table_z},
                  std::nullopt},
                 {"laptop", {a.laptop_xy[0], a.laptop_xy[1], a.table_z}, std::nullopt},
                 {"human", {a.human_xy[0], a.human_xy[1], a.table_z}, a.human_facing}};
  }
  for (const auto& w : r.waypoints)
    for (double v : w)
      if (!std::isfinite(v)) throw DataError("trajectory has non-finite waypoints");
  return r;
}

std::vector<Query> session_queries(const std::string& responder, std::size_t pool_size,
                                   const Counts& counts, std::uint64_t seed) {
  const std::uint64_t s = derive_seed(seed, {fnv1a64(responder)});
  const auto sim = oracle::sample_similarity_queries(
      pool_size, counts.practice_similarity + counts.similarity, derive_seed(s, {1}));
  const auto pref = oracle::sample_preference_queries(
      pool_size, counts.practice_preference + counts.preference, derive_seed(s, {2}));
  std::vector<Query> out;
  std::size_t sim_i = 0, pref_i = 0;
  for (Phase p : kPhases) {
    for (std::size_t i = 0; i < counts.of(p); ++i) {
      Query q;
      q.id = out.size();
      q.phase = p;
      q.index = i;
      if (is_similarity(p)) {
        const auto& t = sim[sim_i++].trajectories;
        q.trajectories.assign(t.begin(), t.end());
      } else {
        q.trajectories = {pref[pref_i].a, pref[pref_i].b};
        ++pref_i;
      }
      out.push_back(std::move(q));
    }
  }
  return out;
}

QueryService::QueryService(env::Dataset dataset, Counts counts, std::uint64_t seed,
                           std::filesystem::path log_path)
    : dataset_(std::move(dataset)), counts_(counts), seed_(seed), log_path_(std::move(log_path)) {
  if (dataset_.size() < 3) throw DataError("query service needs at least 3 trajectories");
  pool_digest_ = hex64(env::dataset_digest(dataset_));
  replay();
  if (log_path_.has_parent_path()) std::filesystem::create_directories(log_path_.parent_path());
  const bool fresh = !std::filesystem::exists(log_path_) || std::filesystem::file_size(log_path_) == 0;
  log_.open(log_path_, std::ios::app | std::ios::binary);
  if (!log_) throw DataError("cannot open answer log " + log_path_.string());
  if (fresh) {
    json h = {{"kind", "header"}, {"format", kLogFormat}, {"pool", pool_digest_},
              {"seed", seed_}, {"counts", counts_json(counts_)}};
    log_ << h.dump() << '\n';
    log_.flush();
  }
}

void QueryService::replay() {
  std::ifstream in(log_path_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = log_path_.string() + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw DataError("answer log " + where + " is not valid JSON");
    }
    const std::string kind = j.value("kind", "");
    if (kind == "header") {
      if (j.value("format", "") != kLogFormat || j.value("pool", "") != pool_digest_ ||
          j.value("seed", std::uint64_t{0}) != seed_ || j.value("counts", json()) != counts_json(counts_))
        throw DataError("answer log " + log_path_.string() +
                        " was written for a different pool, seed or session layout");
      header = true;
      continue;
    }
    if (kind != "answer" || !header) throw DataError("unexpected record at " + where);
    try {
      Session& s = session(j.at("session").get<std::string>());
      const std::uint64_t qid = j.at("query_id").get<std::uint64_t>();
      if (s.cursor >= s.queries.size() || s.queries[s.cursor].id != qid)
        throw DataError("answer log " + where + " is out of order for session " + s.responder);
      const Query& q = s.queries[s.cursor];
      const std::string record = j.at("record").dump();
      if (to_string(q.phase) != j.at("phase").get<std::string>())
        throw DataError("answer log " + where + " disagrees with the session phase");
      const Choice c = choice_from_record(q.phase, record);
      const auto elapsed = j.at("record").contains("elapsed_ms")
                               ? std::optional<double>(j.at("record").at("elapsed_ms").get<double>())
                               : std::nullopt;
      records_.push_back({s.responder, q.phase, apply(s, q, c, elapsed)});
    } catch (const json::exception& e) {
      throw DataError("malformed answer log entry at " + where + ": " + e.what());
    } catch (const UsageError& e) {
      throw DataError("invalid answer in log at " + where + ": " + e.what());
    }
  }
}

QueryService::Session* QueryService::find(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second.get();
}

QueryService::Session& QueryService::session(const std::string& id) {
  std::lock_guard lock(sessions_mutex_);
  auto& slot = sessions_[id];
  if (!slot) {
    slot = std::make_unique<Session>();
    slot->responder = id;
    slot->queries = session_queries(id, dataset_.size(), counts_, seed_);
  }
  return *slot;
}

std::string QueryService::scenario() const {
  if (dataset_.env() == env::EnvId::kGridRobot)
    return "The robot carries a cup across the room. Pick the path you would rather it take.";
  return "The arm carries a cup over the table. Pick the motion you would rather it make.";
}

std::string QueryService::payload(const Session& s) const {
  json j;
  j["session"] = s.responder;
  if (s.cursor >= s.queries.size()) {
    j["complete"] = true;
    j["phase"] = to_string(Phase::kDone);
    return j.dump();
  }
  const Query& q = s.queries[s.cursor];
  j["complete"] = false;
  j["phase"] = to_string(q.phase);
  j["practice"] = is_practice(q.phase);
  j["kind"] = is_similarity(q.phase) ? "similarity" : "preference";
  j["query_id"] = q.id;
  j["index"] = q.index;
  j["phase_size"] = counts_.of(q.phase);
  if (!is_similarity(q.phase)) j["scenario"] = scenario();
  json trajs = json::array();
  for (std::size_t id : q.trajectories)
    trajs.push_back(to_json(renderable(dataset_.trajectories[id], id, dataset_.scene)));
  j["trajectories"] = trajs;
  return j.dump();
}

Reply QueryService::next(const std::string& id) {
  if (!valid_session_id(id)) return error(400, "invalid session id");
  Session& s = session(id);
  std::lock_guard lock(s.mutex);
  return {200, payload(s)};
}

std::string QueryService::apply(Session& s, const Query& q, const Choice& c,
                                std::optional<double> elapsed_ms) {
  const auto& t = q.trajectories;
  auto member = [&](std::optional<std::size_t> v) {
    return v && std::find(t.begin(), t.end(), *v) != t.end();
  };
  std::string record;
  if (is_similarity(q.phase)) {
    if (!member(c.p1) || !member(c.p2) || !member(c.n))
      throw UsageError("choice must name p1, p2 and n from the query's trajectories");
    if (*c.p1 == *c.p2 || *c.p1 == *c.n || *c.p2 == *c.n)
      throw UsageError("p1, p2 and n must be distinct");
    oracle::SimilarityAnswer a{q.id, *c.p1, *c.p2, *c.n, s.responder, elapsed_ms};
    record = oracle::to_record(a);
  } else {
    if (!member(c.preferred)) throw UsageError("preferred must be one of the query's trajectories");
    oracle::PreferenceLabel l{q.id, t[0], t[1], *c.preferred == t[0] ? 1 : 0, s.responder, elapsed_ms};
    record = oracle::to_record(l);
  }
  if (elapsed_ms && !(std::isfinite(*elapsed_ms) && *elapsed_ms >= 0.0))
    throw UsageError("elapsed_ms must be a non-negative number");
  ++s.cursor;
  return record;
}

Reply QueryService::answer(const std::string& id, const std::string& body) {
  if (!valid_session_id(id)) return error(400, "invalid session id");
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    return error(400, "answer body is not valid JSON");
  }
  try {
    if (!j.is_object() || !j.contains("query_id") || !j.at("query_id").is_number_unsigned())
      return error(400, "answer needs a numeric query_id");
    if (!j.contains("choice") || !j.at("choice").is_object())
      return error(400, "answer needs a choice object");
    const json& cj = j.at("choice");
    Choice c;
    c.p1 = optional_index(cj, "p1");
    c.p2 = optional_index(cj, "p2");
    c.n = optional_index(cj, "n");
    c.preferred = optional_index(cj, "preferred");
    std::optional<double> elapsed;
    if (j.contains("elapsed_ms")) {
      if (!j.at("elapsed_ms").is_number()) return error(400, "elapsed_ms must be a number");
      elapsed = j.at("elapsed_ms").get<double>();
    }
    return answer(id, j.at("query_id").get<std::uint64_t>(), c, elapsed);
  } catch (const UsageError& e) {
    return error(400, e.what());
  }
}

Reply QueryService::answer(const std::string& id, std::uint64_t query_id, const Choice& choice,
                           std::optional<double> elapsed_ms) {
  if (!valid_session_id(id)) return error(400, "invalid session id");
  Session* s = find(id);
  if (!s) return error(404, "unknown session; request /session/" + id + "/next first");
  std::lock_guard lock(s->mutex);
  if (s->cursor >= s->queries.size()) return error(409, "session is complete");
  const Query& q = s->queries[s->cursor];
  if (query_id < q.id) return error(409, "duplicate submission for query " + std::to_string(query_id));
  if (query_id != q.id) return error(409, "query " + std::to_string(query_id) + " is not the current query");
  const std::size_t before = s->cursor;
  std::string record;
  try {
    record = apply(*s, q, choice, elapsed_ms);
  } catch (const UsageError& e) {
    s->cursor = before;
    return error(400, e.what());
  }
  {
    std::lock_guard log_lock(log_mutex_);
    json line = {{"kind", "answer"}, {"session", id}, {"phase", to_string(q.phase)},
                 {"practice", is_practice(q.phase)}, {"query_id", q.id},
                 {"record", json::parse(record)}};
    log_ << line.dump() << '\n';
    log_.flush();
    if (!log_) {
      s->cursor = before;
      return error(500, "failed to append to the answer log");
    }
    records_.push_back({id, q.phase, record});
  }
  const Phase next_phase = s->cursor < s->queries.size() ? s->queries[s->cursor].phase : Phase::kDone;
  json ack = {{"ok", true},
              {"recorded", !is_practice(q.phase)},
              {"query_id", q.id},
              {"phase", to_string(next_phase)},
              {"complete", next_phase == Phase::kDone}};
  return {200, ack.dump()};
}

Reply QueryService::export_phase(const std::string& name) const {
  Phase phase;
  try {
    phase = parse_phase(name);
  } catch (const UsageError& e) {
    return error(400, e.what());
  }
  if (phase != Phase::kSimilarity && phase != Phase::kPreference)
    return error(400, "only the similarity and preference phases are exported");
  std::vector<const Logged*> rows;
  {
    std::lock_guard lock(log_mutex_);
    for (const auto& r : records_)
      if (r.phase == phase) rows.push_back(&r);
  }
  if (rows.empty()) return error(404, "no recorded " + name + " answers to export");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Logged* a, const Logged* b) { return a->responder < b->responder; });
  std::string body;
  for (const Logged* r : rows) body += r->record + '\n';
  return {200, body, "application/x-ndjson"};
}

Reply QueryService::health() const {
  std::size_t n = 0;
  {
    std::lock_guard lock(sessions_mutex_);
    n = sessions_.size();
  }
  json j = {{"status", "ok"}, {"env", env::to_string(dataset_.env())}, {"pool", dataset_.size()},
            {"sessions", n}};
  return {200, j.dump()};
}

std::size_t QueryService::answered(const std::string& id) const {
  const Session* s = find(id);
  if (!s) return 0;
  std::lock_guard lock(s->mutex);
  return s->cursor;
}

std::vector<eval::ResponderData> group_export(const std::string& similarity_jsonl,
                                              const std::string& preference_jsonl) {
  std::map<std::string, eval::ResponderData> by;
  std::istringstream sim(similarity_jsonl), pref(preference_jsonl);
  std::string line;
  while (std::getline(sim, line)) {
    if (line.empty()) continue;
    auto a = oracle::parse_similarity_answer(line);
    auto& d = by[a.responder];
    d.responder = a.responder;
    d.similarity.push_back(std::move(a));
  }
  while (std::getline(pref, line)) {
    if (line.empty()) continue;
    auto l = oracle::parse_preference_label(line);
    auto& d = by[l.responder];
    d.responder = l.responder;
    d.preferences.push_back(std::move(l));
  }
  std::vector<eval::ResponderData> out;
  for (auto& [name, d] : by) out.push_back(std::move(d));
  return out;
}

}  // namespace sirl::service
