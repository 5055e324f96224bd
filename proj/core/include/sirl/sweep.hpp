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

#ifndef SIRL_SWEEP_HPP_
#define SIRL_SWEEP_HPP_

#include <cstdint>
#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "sirl/config.hpp"
#include "sirl/evaluation.hpp"
#include "sirl/representation.hpp"

namespace sirl::eval {

struct SweepStats {
  std::size_t embeddings_trained = 0;
  std::size_t embedding_hits = 0;
  std::size_t cells_computed = 0;
  std::size_t cell_hits = 0;
};

// One CSV row. `config_hash` identifies the cell's full configuration.
struct CsvRow {
  std::string method;
  std::string env;
  std::size_t n = 0;
  std::size_t m = 0;  // 0 for FPE rows
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string metric;
  double value = 0.0;

  bool operator==(const CsvRow&) const = default;
};

inline constexpr const char* kCsvHeader = "method,env,n,m,seed,config_hash,metric,value";

std::string to_csv(const std::vector<CsvRow>& rows);
void write_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows);
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

// Building blocks shared by sweep cells and the single-run CLI commands, so
// both produce identical numbers for the same (method, N, M, seed).

// The simulated human's answers for budget N; the queries for a smaller N are
// a prefix of those for a larger one.
std::vector<oracle::SimilarityAnswer> simulated_similarity(const env::Dataset& dataset,
                                                           std::size_t n, std::uint64_t seed);
std::vector<oracle::GroundTruthReward> experiment_test_rewards(const ExperimentConfig& config,
                                                               std::uint64_t seed);

// For SIRL variants, nonempty `answers` replace the simulated ones. A given
// `vae_start` is used as the SIRL+VAE warm start instead of training a VAE.
rep::EmbeddingModel train_representation(const ExperimentConfig& config,
                                         const env::Dataset& dataset,
                                         const rep::MethodSpec& method, std::size_t n,
                                         std::uint64_t seed,
                                         std::span<const oracle::SimilarityAnswer> answers = {},
                                         const rep::EmbeddingModel* vae_start = nullptr,
                                         nn::TrainingLog* log = nullptr);

FpeReport evaluate_fpe(const ExperimentConfig& config, const env::Dataset& dataset,
                       const rep::EmbeddingModel& model, std::uint64_t seed);
TpaReport evaluate_tpa(const ExperimentConfig& config, const env::Dataset& dataset,
                       const rep::EmbeddingModel& model, const rep::MethodSpec& method,
                       std::size_t m, std::uint64_t seed);

struct SweepRequest {
  std::vector<rep::MethodSpec> methods;
  std::vector<std::size_t> n_grid;
  std::vector<std::size_t> m_grid;
  std::vector<std::uint64_t> seeds;
  bool fpe = true;
  bool tpa = true;

  static SweepRequest from_config(const ExperimentConfig& config);
};

struct SweepResult {
  std::vector<CsvRow> tpa;  // |methods| x |N| x |M| x |seeds| rows
  std::vector<CsvRow> fpe;  // |methods| x |N| x |seeds| rows
  SweepStats stats;
};

// Experiment runner over (method, N, M, seed) cells. Trained embeddings and
// finished cells are cached under `cache_dir`, keyed by a hash of exactly
// the settings that determine them, so re-runs and overlapping grids reuse
// earlier work. An empty cache_dir disables the on-disk cache.
class Sweep {
 public:
  Sweep(ExperimentConfig config, std::filesystem::path cache_dir);
  Sweep(ExperimentConfig config, env::Dataset dataset, std::filesystem::path cache_dir);

  const ExperimentConfig& config() const { return config_; }
  const env::Dataset& dataset() const { return dataset_; }

  rep::EmbeddingModel embedding(const rep::MethodSpec& method, std::size_t n, std::uint64_t seed);
  TpaReport tpa_cell(const rep::MethodSpec& method, std::size_t n, std::size_t m,
                     std::uint64_t seed);
  FpeReport fpe_cell(const rep::MethodSpec& method, std::size_t n, std::uint64_t seed);

  std::string embedding_key(const rep::MethodSpec& method, std::size_t n, std::uint64_t seed) const;
  std::string tpa_key(const rep::MethodSpec& method, std::size_t n, std::size_t m,
                      std::uint64_t seed) const;
  std::string fpe_key(const rep::MethodSpec& method, std::size_t n, std::uint64_t seed) const;

  SweepResult run(const SweepRequest& request);
  SweepStats stats() const;

 private:
  std::filesystem::path embedding_path(std::uint64_t hash) const;
  std::filesystem::path cell_path(std::uint64_t hash) const;
  std::vector<double> cached_cell(const std::string& key,
                                  const std::function<std::vector<double>()>& compute);

  ExperimentConfig config_;
  env::Dataset dataset_;
  std::filesystem::path cache_dir_;
  std::string scene_digest_;

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_future<rep::EmbeddingModel>> embeddings_;
  SweepStats stats_;
};

// Runs jobs 0..count-1 on `threads` workers (0: hardware concurrency) and
// rethrows the first failure after all workers stop.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& job);

}  // namespace sirl::eval

#endif  // SIRL_SWEEP_HPP_
