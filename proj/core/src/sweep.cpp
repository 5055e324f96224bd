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

#include "sirl/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "sirl/error.hpp"
#include "sirl/manifest.hpp"
#include "sirl/nn/checkpoint.hpp"
#include "sirl/random.hpp"

namespace sirl::eval {

using nlohmann::json;

namespace {

enum : std::uint64_t {
  kTagRep = 31,
  kTagSimilarity = 32,
  kTagTestRewards = 33,
  kTagFpeSubset = 34,
  kTagFpeSplit = 35,
  kTagTpa = 36,
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

std::string values_digest(const std::string& key, const std::vector<std::string>& values) {
  std::string text = key;
  for (const auto& v : values) text += '\n' + v;
  return hex64(fnv1a64(text));
}

void write_atomically(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ostringstream tag;
  tag << std::this_thread::get_id();
  const auto tmp = std::filesystem::path(path.string() + ".tmp" + tag.str());
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << text;
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string to_csv(const std::vector<CsvRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += csv_field(r.method) + ',' + csv_field(r.env) + ',' + std::to_string(r.n) + ',' +
           std::to_string(r.m) + ',' + std::to_string(r.seed) + ',' + r.config_hash + ',' +
           csv_field(r.metric) + ',' + format_double(r.value) + '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_csv(rows);
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw DataError(path.string() + " is not a result table");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw DataError("malformed result row in " + path.string() + ": " + line);
    try {
      rows.push_back({f[0], f[1], std::stoull(f[2]), std::stoull(f[3]), std::stoull(f[4]), f[5],
                      f[6], parse_double(f[7])});
    } catch (const std::invalid_argument&) {
      throw DataError("malformed result row in " + path.string() + ": " + line);
    }
  }
  return rows;
}

std::vector<oracle::SimilarityAnswer> simulated_similarity(const env::Dataset& dataset,
                                                           std::size_t n, std::uint64_t seed) {
  const auto queries =
      oracle::sample_similarity_queries(dataset.size(), n, derive_seed(seed, {kTagSimilarity}));
  return oracle::simulate_similarity(queries, dataset.features, "oracle");
}

std::vector<oracle::GroundTruthReward> experiment_test_rewards(const ExperimentConfig& config,
                                                               std::uint64_t seed) {
  return test_rewards(config.tpa.rewards, derive_seed(seed, {kTagTestRewards}));
}

rep::EmbeddingModel train_representation(const ExperimentConfig& config,
                                         const env::Dataset& dataset,
                                         const rep::MethodSpec& method, std::size_t n,
                                         std::uint64_t seed,
                                         std::span<const oracle::SimilarityAnswer> answers,
                                         const rep::EmbeddingModel* vae_start,
                                         nn::TrainingLog* log) {
  const std::uint64_t rep_seed = derive_seed(seed, {kTagRep});
  const auto& pool = dataset.trajectories;
  std::vector<oracle::SimilarityAnswer> simulated;
  if (method.uses_similarity() && answers.empty()) {
    simulated = simulated_similarity(dataset, n, seed);
    answers = simulated;
  }
  switch (method.method) {
    case rep::Method::kRandom:
      return rep::random_embedding(dataset.env(), dataset.input_width(), rep_seed);
    case rep::Method::kVae:
      return rep::pretrain_vae(pool, config.sirl.vae, rep_seed, log);
    case rep::Method::kSirl:
      return rep::train_sirl(pool, answers, config.sirl_for(method), rep_seed, log);
    case rep::Method::kSirlVae: {
      // Same as train_sirl with VAE pretraining, but the warm start can be
      // shared with the plain VAE baseline.
      rep::EmbeddingModel start =
          vae_start ? *vae_start : rep::pretrain_vae(pool, config.sirl.vae, rep_seed);
      return rep::train_sirl_from(std::move(start), pool, answers, config.sirl_for(method),
                                  rep_seed, log);
    }
    case rep::Method::kSinglePref:
    case rep::Method::kMultiPref:
      return rep::train_pref_representation(dataset, method, n, config.pref, rep_seed, log);
  }
  throw ConfigError("unhandled representation method");
}

FpeReport evaluate_fpe(const ExperimentConfig& config, const env::Dataset& dataset,
                       const rep::EmbeddingModel& model, std::uint64_t seed) {
  if (model.env != dataset.env() || model.input_width() != dataset.input_width())
    throw ConfigError("embedding was trained for " + env::to_string(model.env) +
                      " inputs and does not fit this dataset");
  const auto subset =
      fpe_subset(dataset.size(), config.fpe.dataset_size, derive_seed(seed, {kTagFpeSubset}));
  std::vector<env::Trajectory> trajs;
  std::vector<env::FeatureVector> labels;
  for (std::size_t i : subset) {
    trajs.push_back(dataset.trajectories[i]);
    labels.push_back(dataset.features[i]);
  }
  FpeReport r =
      fpe(rep::embed_all(model, trajs), labels, derive_seed(seed, {kTagFpeSplit}), config.fpe);
  r.method = model.provenance;
  r.n = model.budget;
  r.seed = seed;
  return r;
}

TpaReport evaluate_tpa(const ExperimentConfig& config, const env::Dataset& dataset,
                       const rep::EmbeddingModel& model, const rep::MethodSpec& method,
                       std::size_t m, std::uint64_t seed) {
  if (model.env != dataset.env() || model.input_width() != dataset.input_width())
    throw ConfigError("embedding was trained for " + env::to_string(model.env) +
                      " inputs and does not fit this dataset");
  const auto rewards = experiment_test_rewards(config, seed);
  TpaReport r = tpa(model, dataset.trajectories, dataset.features, rewards, m,
                    config.tpa_for(method), derive_seed(seed, {kTagTpa}));
  r.method = method.name();
  r.seed = seed;
  return r;
}

SweepRequest SweepRequest::from_config(const ExperimentConfig& config) {
  SweepRequest r;
  for (const auto& m : config.methods) r.methods.push_back(rep::MethodSpec::parse(m));
  r.n_grid = config.n_grid;
  r.m_grid = config.m_grid;
  r.seeds = config.seeds;
  return r;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

Sweep::Sweep(ExperimentConfig config, std::filesystem::path cache_dir)
    : Sweep(config, make_dataset(config), std::move(cache_dir)) {}

Sweep::Sweep(ExperimentConfig config, env::Dataset dataset, std::filesystem::path cache_dir)
    : config_(std::move(config)), dataset_(std::move(dataset)), cache_dir_(std::move(cache_dir)) {
  if (dataset_.env() != config_.env)
    throw ConfigError("dataset environment " + env::to_string(dataset_.env()) +
                      " does not match the configured " + env::to_string(config_.env));
  scene_digest_ = hex64(env::dataset_digest(dataset_));
}

std::string Sweep::embedding_key(const rep::MethodSpec& method, std::size_t n,
                                 std::uint64_t seed) const {
  json k;
  k["kind"] = "embedding";
  k["pool"] = scene_digest_;
  k["method"] = method.base_name();
  k["seed"] = seed;
  const auto& s = config_.sirl;
  const auto& v = config_.sirl.vae;
  const json vae = {{"epochs", v.epochs}, {"lr", v.learning_rate}, {"decay", v.decay},
                    {"batch", v.batch_size}, {"kl", v.kl_weight}};
  switch (method.method) {
    case rep::Method::kRandom:
      break;
    case rep::Method::kVae:
      k["vae"] = vae;
      break;
    case rep::Method::kSirlVae:
      k["vae"] = vae;
      [[fallthrough]];
    case rep::Method::kSirl:
      k["n"] = n;
      k["sirl"] = {{"alpha", s.alpha}, {"epochs", s.epochs}, {"lr", s.learning_rate},
                   {"decay", s.decay}, {"batch", s.batch_size}};
      break;
    case rep::Method::kSinglePref:
    case rep::Method::kMultiPref: {
      const auto& p = config_.pref;
      k["n"] = n;
      k["pref"] = {{"epochs", p.epochs}, {"lr", p.learning_rate}, {"decay", p.decay},
                   {"batch", p.batch_size}, {"l2", p.l2_weight}};
      break;
    }
  }
  return k.dump();
}

std::string Sweep::tpa_key(const rep::MethodSpec& method, std::size_t n, std::size_t m,
                           std::uint64_t seed) const {
  const auto t = config_.tpa_for(method);
  json k;
  k["kind"] = "tpa";
  k["embedding"] = embedding_key(method, n, seed);
  k["m"] = m;
  k["reward"] = {{"epochs", t.reward.epochs}, {"lr", t.reward.learning_rate},
                 {"batch", t.reward.batch_size}, {"l2", t.reward.l2_weight},
                 {"frozen", t.reward.frozen}};
  k["tpa"] = {{"rewards", t.rewards}, {"pairs", t.pairs_per_reward},
              {"train_fraction", t.train_fraction}};
  return k.dump();
}

std::string Sweep::fpe_key(const rep::MethodSpec& method, std::size_t n, std::uint64_t seed) const {
  json k;
  k["kind"] = "fpe";
  k["embedding"] = embedding_key(method, n, seed);
  k["fpe"] = {{"dataset_size", config_.fpe.dataset_size},
              {"train_fraction", config_.fpe.train_fraction},
              {"ridge", config_.fpe.ridge}};
  return k.dump();
}

std::filesystem::path Sweep::embedding_path(std::uint64_t hash) const {
  return cache_dir_ / "embeddings" / hex64(hash);
}

std::filesystem::path Sweep::cell_path(std::uint64_t hash) const {
  return cache_dir_ / "cells" / (hex64(hash) + ".json");
}

rep::EmbeddingModel Sweep::embedding(const rep::MethodSpec& method, std::size_t n,
                                     std::uint64_t seed) {
  const std::string key = embedding_key(method, n, seed);
  std::promise<rep::EmbeddingModel> promise;
  std::shared_future<rep::EmbeddingModel> future;
  bool owner = false;
  {
    std::lock_guard lock(mutex_);
    auto it = embeddings_.find(key);
    if (it == embeddings_.end()) {
      future = promise.get_future().share();
      embeddings_.emplace(key, future);
      owner = true;
    } else {
      future = it->second;
    }
  }
  if (owner) {
    try {
      const std::uint64_t hash = fnv1a64(key);
      const auto stem = embedding_path(hash);
      if (!cache_dir_.empty() && std::filesystem::exists(nn::manifest_path(stem))) {
        const Manifest m = Manifest::read(nn::manifest_path(stem));
        if (m.get("cache.key") != key)
          throw DataError("sweep cache corrupted: " + stem.string() +
                          " does not match its hash; delete it to recompute");
        rep::EmbeddingModel model = rep::load_embedding(stem);
        {
          std::lock_guard lock(mutex_);
          ++stats_.embedding_hits;
        }
        promise.set_value(std::move(model));
      } else {
        std::optional<rep::EmbeddingModel> vae;
        if (method.method == rep::Method::kSirlVae)
          vae = embedding(rep::MethodSpec::parse("vae"), n, seed);
        rep::EmbeddingModel model = train_representation(config_, dataset_, method, n, seed, {},
                                                         vae ? &*vae : nullptr);
        if (!cache_dir_.empty()) {
          Manifest extra;
          extra.set("cache.key", key);
          rep::save_embedding(stem, model, extra);
        }
        {
          std::lock_guard lock(mutex_);
          ++stats_.embeddings_trained;
        }
        promise.set_value(std::move(model));
      }
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
  }
  return future.get();
}

std::vector<double> Sweep::cached_cell(const std::string& key,
                                       const std::function<std::vector<double>()>& compute) {
  const std::uint64_t hash = fnv1a64(key);
  const auto path = cell_path(hash);
  if (!cache_dir_.empty() && std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::ostringstream text;
    text << in.rdbuf();
    const std::string corrupt =
        "sweep cache corrupted: " + path.string() + " fails its hash check; delete it to recompute";
    std::vector<double> values;
    try {
      const json j = json::parse(text.str());
      const auto strings = j.at("values").get<std::vector<std::string>>();
      if (j.at("key").get<std::string>() != key || j.at("hash").get<std::string>() != hex64(hash) ||
          j.at("digest").get<std::string>() != values_digest(key, strings))
        throw DataError(corrupt);
      for (const auto& s : strings) values.push_back(parse_double(s));
    } catch (const json::exception&) {
      throw DataError(corrupt);
    } catch (const DataError&) {
      throw DataError(corrupt);
    }
    std::lock_guard lock(mutex_);
    ++stats_.cell_hits;
    return values;
  }
  std::vector<double> values = compute();
  if (!cache_dir_.empty()) {
    std::vector<std::string> strings;
    for (double v : values) strings.push_back(format_double(v));
    json j;
    j["key"] = key;
    j["hash"] = hex64(hash);
    j["values"] = strings;
    j["digest"] = values_digest(key, strings);
    write_atomically(path, j.dump(1) + "\n");
  }
  std::lock_guard lock(mutex_);
  ++stats_.cells_computed;
  return values;
}

TpaReport Sweep::tpa_cell(const rep::MethodSpec& method, std::size_t n, std::size_t m,
                          std::uint64_t seed) {
  TpaReport report;
  report.accuracies = cached_cell(tpa_key(method, n, m, seed), [&] {
    return evaluate_tpa(config_, dataset_, embedding(method, n, seed), method, m, seed).accuracies;
  });
  report.method = method.name();
  report.n = n;
  report.m = m;
  report.seed = seed;
  report.mean = order_free_mean(report.accuracies);
  return report;
}

FpeReport Sweep::fpe_cell(const rep::MethodSpec& method, std::size_t n, std::uint64_t seed) {
  const auto values = cached_cell(fpe_key(method, n, seed), [&] {
    const auto r = evaluate_fpe(config_, dataset_, embedding(method, n, seed), seed);
    return std::vector<double>{r.mse, r.ridge_used};
  });
  if (values.size() != 2) throw DataError("sweep cache holds a malformed FPE cell");
  FpeReport report;
  report.method = method.name();
  report.n = n;
  report.seed = seed;
  report.mse = values[0];
  report.ridge_used = values[1];
  return report;
}

SweepResult Sweep::run(const SweepRequest& request) {
  if (request.methods.empty() || request.n_grid.empty() || request.seeds.empty() ||
      (request.tpa && request.m_grid.empty()))
    throw ConfigError("sweep grids must be nonempty");

  struct Cell {
    rep::MethodSpec method;
    std::size_t n, m;
    std::uint64_t seed;
    bool is_tpa;
  };
  std::vector<Cell> cells;
  for (const auto& method : request.methods) {
    for (std::size_t n : request.n_grid) {
      if (request.tpa) {
        for (std::size_t m : request.m_grid)
          for (std::uint64_t seed : request.seeds) cells.push_back({method, n, m, seed, true});
      }
      if (request.fpe) {
        for (std::uint64_t seed : request.seeds) cells.push_back({method, n, 0, seed, false});
      }
    }
  }

  // Train the embeddings that unfinished cells need first, so the cell phase
  // does not serialize behind long trainings.
  std::vector<Cell> pending;
  std::set<std::string> keys;
  for (const auto& c : cells) {
    const std::string key = c.is_tpa ? tpa_key(c.method, c.n, c.m, c.seed) : fpe_key(c.method, c.n, c.seed);
    if (!cache_dir_.empty() && std::filesystem::exists(cell_path(fnv1a64(key)))) continue;
    if (keys.insert(embedding_key(c.method, c.n, c.seed)).second) pending.push_back(c);
  }
  // VAE warm starts are shared, so train plain VAEs before SIRL+VAE.
  std::stable_partition(pending.begin(), pending.end(),
                        [](const Cell& c) { return c.method.method == rep::Method::kVae; });
  parallel_for(pending.size(), config_.threads,
               [&](std::size_t i) { (void)embedding(pending[i].method, pending[i].n, pending[i].seed); });

  // Methods that ignore N share cells across the N grid; compute each once.
  std::vector<std::string> cell_keys(cells.size());
  std::map<std::string, std::size_t> first;
  std::vector<std::size_t> unique;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    cell_keys[i] = c.is_tpa ? tpa_key(c.method, c.n, c.m, c.seed) : fpe_key(c.method, c.n, c.seed);
    if (first.emplace(cell_keys[i], i).second) unique.push_back(i);
  }

  std::vector<CsvRow> rows(cells.size());
  const std::string env_name = env::to_string(config_.env);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    CsvRow& row = rows[i];
    row.method = c.method.name();
    row.env = env_name;
    row.n = c.n;
    row.m = c.m;
    row.seed = c.seed;
    row.config_hash = hex64(fnv1a64(cell_keys[i]));
    row.metric = c.is_tpa ? "tpa" : "fpe";
  }
  parallel_for(unique.size(), config_.threads, [&](std::size_t u) {
    const std::size_t i = unique[u];
    const Cell& c = cells[i];
    rows[i].value = c.is_tpa ? tpa_cell(c.method, c.n, c.m, c.seed).mean
                             : fpe_cell(c.method, c.n, c.seed).mse;
  });
  for (std::size_t i = 0; i < cells.size(); ++i) rows[i].value = rows[first.at(cell_keys[i])].value;

  SweepResult result;
  for (std::size_t i = 0; i < cells.size(); ++i)
    (cells[i].is_tpa ? result.tpa : result.fpe).push_back(rows[i]);
  result.stats = stats();
  return result;
}

SweepStats Sweep::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

}  // namespace sirl::eval
