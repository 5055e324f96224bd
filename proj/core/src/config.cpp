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

#include "sirl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sirl/error.hpp"
#include "sirl/manifest.hpp"

namespace sirl {

using nlohmann::json;

namespace {

// Reads typed fields out of one JSON object and remembers which keys were
// consumed so leftovers can be reported.
class Section {
 public:
  Section(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw ConfigError("config '" + where() + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    const auto it = object_.find(key);
    seen_.insert(key);
    if (it == object_.end()) return;
    try {
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_unsigned()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("");
      }
      out = it->get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config key '" + where(key) + "' has the wrong type");
    }
  }

  Section child(const char* key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return Section(it == object_.end() ? empty() : *it, where(key));
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + where(key) + "'");
    }
  }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

json to_json_object(const ExperimentConfig& c) {
  json j;
  j["env"] = env::to_string(c.env);
  j["scene_file"] = c.scene_file;
  j["dataset"] = {{"size", c.dataset_size}, {"seed", c.dataset_seed}};
  j["methods"] = c.methods;
  j["n_grid"] = c.n_grid;
  j["m_grid"] = c.m_grid;
  j["seeds"] = c.seeds;
  j["sirl"] = {{"alpha", c.sirl.alpha},
               {"epochs", c.sirl.epochs},
               {"learning_rate", c.sirl.learning_rate},
               {"decay", c.sirl.decay},
               {"batch_size", c.sirl.batch_size}};
  j["vae"] = {{"epochs", c.sirl.vae.epochs},
              {"learning_rate", c.sirl.vae.learning_rate},
              {"decay", c.sirl.vae.decay},
              {"batch_size", c.sirl.vae.batch_size},
              {"kl_weight", c.sirl.vae.kl_weight}};
  j["pref"] = {{"epochs", c.pref.epochs},
               {"learning_rate", c.pref.learning_rate},
               {"decay", c.pref.decay},
               {"batch_size", c.pref.batch_size},
               {"l2_weight", c.pref.l2_weight}};
  j["reward"] = {{"epochs", c.reward.epochs},
                 {"learning_rate", c.reward.learning_rate},
                 {"batch_size", c.reward.batch_size},
                 {"l2_weight", c.reward.l2_weight}};
  j["fpe"] = {{"dataset_size", c.fpe.dataset_size},
              {"train_fraction", c.fpe.train_fraction},
              {"ridge", c.fpe.ridge}};
  j["tpa"] = {{"rewards", c.tpa.rewards},
              {"pairs_per_reward", c.tpa.pairs_per_reward},
              {"train_fraction", c.tpa.train_fraction}};
  j["heldout"] = {{"responders", c.heldout.responders},
                  {"similarity_queries", c.heldout.similarity_queries},
                  {"preference_queries", c.heldout.preference_queries},
                  {"splits", c.heldout.splits},
                  {"train_fraction", c.heldout.train_fraction}};
  j["service"] = {{"practice_similarity", c.service.practice_similarity},
                  {"similarity", c.service.similarity},
                  {"practice_preference", c.service.practice_preference},
                  {"preference", c.service.preference},
                  {"port", c.service.port}};
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  return j;
}

void validate(const ExperimentConfig& c) {
  if (c.methods.empty()) throw ConfigError("config lists no methods");
  for (const auto& m : c.methods) {
    try {
      (void)rep::MethodSpec::parse(m);
    } catch (const UsageError& e) {
      throw ConfigError(e.what());
    }
  }
  if (c.n_grid.empty() || c.m_grid.empty() || c.seeds.empty())
    throw ConfigError("N, M and seed grids must be nonempty");
  for (std::size_t m : c.m_grid)
    if (m == 0) throw ConfigError("M grid entries must be at least 1");
  auto fraction = [](double f, const char* what) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError(std::string(what) + " must lie in (0, 1)");
  };
  fraction(c.fpe.train_fraction, "fpe.train_fraction");
  fraction(c.tpa.train_fraction, "tpa.train_fraction");
  fraction(c.heldout.train_fraction, "heldout.train_fraction");
  if (c.sirl.alpha < 0.0) throw ConfigError("sirl.alpha must be non-negative");
  if (c.fpe.ridge <= 0.0) throw ConfigError("fpe.ridge must be positive");
  for (std::size_t b : {c.sirl.batch_size, c.sirl.vae.batch_size, c.pref.batch_size, c.reward.batch_size})
    if (b == 0) throw ConfigError("batch sizes must be positive");
  if (c.tpa.rewards == 0 || c.tpa.pairs_per_reward < 2) throw ConfigError("tpa needs rewards and pairs");
  if (c.service.port < 0 || c.service.port > 65535) throw ConfigError("service.port out of range");
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(env::EnvId env) {
  ExperimentConfig c;
  c.env = env;
  c.pref = rep::PrefRepConfig::for_env(env);
  c.reward = reward::RewardConfig::for_env(env, true);
  return c;
}

rep::SirlConfig ExperimentConfig::sirl_for(const rep::MethodSpec& method) const {
  rep::SirlConfig s = sirl;
  s.pretrain = method.method == rep::Method::kSirlVae ? rep::Pretrain::kVae : rep::Pretrain::kNone;
  return s;
}

reward::RewardConfig ExperimentConfig::reward_for(const rep::MethodSpec& method) const {
  reward::RewardConfig r = reward;
  r.frozen = method.frozen();
  return r;
}

eval::TpaConfig ExperimentConfig::tpa_for(const rep::MethodSpec& method) const {
  eval::TpaConfig t = tpa;
  t.reward = reward_for(method);
  return t;
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
  return to_json(*this) == to_json(other);
}

std::string to_json(const ExperimentConfig& config) { return to_json_object(config).dump(2) + "\n"; }

ExperimentConfig parse_config(std::string_view text, std::optional<env::EnvId> env_override) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Section root(j, "");
  std::string env_name = "gridrobot";
  root.read("env", env_name);
  env::EnvId env;
  try {
    env = env_override ? *env_override : env::parse_env(env_name);
  } catch (const UsageError& e) {
    throw ConfigError(e.what());
  }
  ExperimentConfig c = ExperimentConfig::defaults(env);

  root.read("scene_file", c.scene_file);
  {
    Section s = root.child("dataset");
    s.read("size", c.dataset_size);
    s.read("seed", c.dataset_seed);
    s.finish();
  }
  root.read("methods", c.methods);
  root.read("n_grid", c.n_grid);
  root.read("m_grid", c.m_grid);
  root.read("seeds", c.seeds);
  {
    Section s = root.child("sirl");
    s.read("alpha", c.sirl.alpha);
    s.read("epochs", c.sirl.epochs);
    s.read("learning_rate", c.sirl.learning_rate);
    s.read("decay", c.sirl.decay);
    s.read("batch_size", c.sirl.batch_size);
    s.finish();
  }
  {
    Section s = root.child("vae");
    s.read("epochs", c.sirl.vae.epochs);
    s.read("learning_rate", c.sirl.vae.learning_rate);
    s.read("decay", c.sirl.vae.decay);
    s.read("batch_size", c.sirl.vae.batch_size);
    s.read("kl_weight", c.sirl.vae.kl_weight);
    s.finish();
  }
  {
    Section s = root.child("pref");
    s.read("epochs", c.pref.epochs);
    s.read("learning_rate", c.pref.learning_rate);
    s.read("decay", c.pref.decay);
    s.read("batch_size", c.pref.batch_size);
    s.read("l2_weight", c.pref.l2_weight);
    s.finish();
  }
  {
    Section s = root.child("reward");
    s.read("epochs", c.reward.epochs);
    s.read("learning_rate", c.reward.learning_rate);
    s.read("batch_size", c.reward.batch_size);
    s.read("l2_weight", c.reward.l2_weight);
    s.finish();
  }
  {
    Section s = root.child("fpe");
    s.read("dataset_size", c.fpe.dataset_size);
    s.read("train_fraction", c.fpe.train_fraction);
    s.read("ridge", c.fpe.ridge);
    s.finish();
  }
  {
    Section s = root.child("tpa");
    s.read("rewards", c.tpa.rewards);
    s.read("pairs_per_reward", c.tpa.pairs_per_reward);
    s.read("train_fraction", c.tpa.train_fraction);
    s.finish();
  }
  {
    Section s = root.child("heldout");
    s.read("responders", c.heldout.responders);
    s.read("similarity_queries", c.heldout.similarity_queries);
    s.read("preference_queries", c.heldout.preference_queries);
    s.read("splits", c.heldout.splits);
    s.read("train_fraction", c.heldout.train_fraction);
    s.finish();
  }
  {
    Section s = root.child("service");
    s.read("practice_similarity", c.service.practice_similarity);
    s.read("similarity", c.service.similarity);
    s.read("practice_preference", c.service.practice_preference);
    s.read("preference", c.service.preference);
    s.read("port", c.service.port);
    s.finish();
  }
  root.read("threads", c.threads);
  root.read("output_dir", c.output_dir);
  root.finish();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<env::EnvId> env_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), env_override);
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& config) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(config);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  json j = to_json_object(config);
  j.erase("threads");
  j.erase("output_dir");
  return fnv1a64(j.dump());
}

env::Scene scene_of(const ExperimentConfig& config) {
  if (config.scene_file.empty()) return env::default_scene(config.env);
  env::Scene scene = env::load_scene(config.scene_file);
  if (scene.env != config.env)
    throw ConfigError("scene file " + config.scene_file + " describes " +
                      env::to_string(scene.env) + ", not " + env::to_string(config.env));
  return scene;
}

env::Dataset make_dataset(const ExperimentConfig& config) {
  return env::build_dataset(scene_of(config), config.dataset_size, config.dataset_seed);
}

}  // namespace sirl
