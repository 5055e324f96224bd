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

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sirl/config.hpp"
#include "sirl/error.hpp"
#include "sirl/nn/checkpoint.hpp"
#include "sirl/sweep.hpp"
#include "test_util.hpp"

using namespace sirl;
using sirl::testing::TempDir;

namespace {

ExperimentConfig tiny() {
  ExperimentConfig c = parse_config(R"({
    "env": "gridrobot",
    "methods": ["sirl", "vae", "random"],
    "n_grid": [20, 40],
    "m_grid": [5, 10],
    "seeds": [0, 1],
    "sirl": {"epochs": 4},
    "vae": {"epochs": 2},
    "reward": {"epochs": 3},
    "tpa": {"rewards": 2, "pairs_per_reward": 20},
    "threads": 1
  })");
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("CSV rows round trip with quoting") {
  TempDir dir("csv");
  std::vector<eval::CsvRow> rows = {
      {"sirl", "gridrobot", 100, 10, 0, "00ff", "tpa", 0.8125},
      {"multipref-10", "armlite", 0, 0, 18446744073709551615ull, "abc", "fpe", 1e-17},
      {"odd,name", "gridrobot", 1, 2, 3, "h", "tpa", 0.1}};
  eval::write_csv(dir / "r.csv", rows);
  const std::string text = slurp(dir / "r.csv");
  CHECK(text.rfind(std::string(eval::kCsvHeader) + "\n", 0) == 0);
  CHECK(text.find("\"odd,name\"") != std::string::npos);
  CHECK(eval::read_csv(dir / "r.csv") == rows);
}

TEST_CASE("sweep rows, caching and extension") {
  TempDir dir("sweep");
  const ExperimentConfig cfg = tiny();
  eval::SweepResult first;
  {
    eval::Sweep sweep(cfg, dir / "cache");
    first = sweep.run(eval::SweepRequest::from_config(cfg));
  }
  // 3 methods x 2 N x 2 M x 2 seeds, and 3 x 2 x 2 FPE rows.
  CHECK(first.tpa.size() == 24);
  CHECK(first.fpe.size() == 12);
  // SIRL per (N, seed); VAE and Random once per seed.
  CHECK(first.stats.embeddings_trained == 8);
  // Distinct cells: TPA 8 + 4 + 4, FPE 4 + 2 + 2.
  CHECK(first.stats.cells_computed == 24);
  for (const auto& r : first.tpa) {
    CHECK(r.metric == "tpa");
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0);
  }
  for (const auto& r : first.fpe) {
    CHECK(r.metric == "fpe");
    CHECK(r.m == 0);
  }

  SUBCASE("a rerun does no training and reproduces the CSV") {
    eval::Sweep again(cfg, dir / "cache");
    const eval::SweepResult second = again.run(eval::SweepRequest::from_config(cfg));
    CHECK(second.stats.embeddings_trained == 0);
    CHECK(second.stats.cells_computed == 0);
    CHECK(eval::to_csv(second.tpa) == eval::to_csv(first.tpa));
    CHECK(eval::to_csv(second.fpe) == eval::to_csv(first.fpe));
  }

  SUBCASE("a larger M grid only computes the new cells") {
    ExperimentConfig more = cfg;
    more.m_grid = {5, 10, 12};
    eval::Sweep again(more, dir / "cache");
    const eval::SweepResult r = again.run(eval::SweepRequest::from_config(more));
    CHECK(r.stats.embeddings_trained == 0);
    CHECK(r.stats.cells_computed == 8);
    CHECK(r.tpa.size() == 36);
  }

  SUBCASE("a tampered cell is reported") {
    std::filesystem::path cell;
    for (const auto& e : std::filesystem::directory_iterator(dir / "cache" / "cells")) cell = e.path();
    REQUIRE_FALSE(cell.empty());
    std::string text = slurp(cell);
    const auto at = text.find("0.");
    REQUIRE(at != std::string::npos);
    text[at + 2] = text[at + 2] == '9' ? '8' : '9';
    std::ofstream(cell, std::ios::trunc) << text;
    eval::Sweep again(cfg, dir / "cache");
    CHECK_THROWS_AS(again.run(eval::SweepRequest::from_config(cfg)), DataError);
  }

  SUBCASE("a tampered embedding is reported") {
    std::filesystem::path bin;
    for (const auto& e : std::filesystem::directory_iterator(dir / "cache" / "embeddings"))
      if (e.path().extension() == ".bin") bin = e.path();
    REQUIRE_FALSE(bin.empty());
    std::string bytes = slurp(bin);
    bytes[bytes.size() / 3] ^= 0x01;
    std::ofstream(bin, std::ios::binary | std::ios::trunc) << bytes;
    eval::Sweep again(cfg, dir / "cache");
    bool thrown = false;
    for (const char* m : {"sirl", "vae", "random"})
      for (std::size_t n : {20u, 40u})
        for (std::uint64_t s : {0u, 1u}) {
          try {
            (void)again.embedding(rep::MethodSpec::parse(m), n, s);
          } catch (const DataError&) {
            thrown = true;
          }
        }
    CHECK(thrown);
  }
}

TEST_CASE("sweep results do not depend on thread count or cache") {
  ExperimentConfig cfg = tiny();
  cfg.n_grid = {20};
  cfg.seeds = {3};
  eval::Sweep serial(cfg, "");
  cfg.threads = 3;
  eval::Sweep parallel(cfg, "");
  const auto a = serial.run(eval::SweepRequest::from_config(serial.config()));
  const auto b = parallel.run(eval::SweepRequest::from_config(parallel.config()));
  CHECK(eval::to_csv(a.tpa) == eval::to_csv(b.tpa));
  CHECK(eval::to_csv(a.fpe) == eval::to_csv(b.fpe));
}

TEST_CASE("single-run building blocks agree with sweep cells") {
  const ExperimentConfig cfg = tiny();
  eval::Sweep sweep(cfg, "");
  const auto method = rep::MethodSpec::parse("sirl");
  const rep::EmbeddingModel a = sweep.embedding(method, 20, 1);
  const rep::EmbeddingModel b = eval::train_representation(cfg, sweep.dataset(), method, 20, 1);
  CHECK(a.params == b.params);
  CHECK(eval::evaluate_tpa(cfg, sweep.dataset(), b, method, 5, 1).mean == sweep.tpa_cell(method, 20, 5, 1).mean);
  CHECK(eval::evaluate_fpe(cfg, sweep.dataset(), b, 1).mse == sweep.fpe_cell(method, 20, 1).mse);
}

TEST_CASE("simulated answers for a smaller budget are a prefix") {
  const ExperimentConfig cfg = tiny();
  const env::Dataset d = make_dataset(cfg);
  const auto small = eval::simulated_similarity(d, 10, 4);
  const auto big = eval::simulated_similarity(d, 30, 4);
  REQUIRE(small.size() == 10);
  for (std::size_t i = 0; i < small.size(); ++i) CHECK(small[i] == big[i]);
}

TEST_CASE("SIRL with VAE pretraining reuses the VAE embedding") {
  ExperimentConfig cfg = tiny();
  cfg.methods = {"vae", "sirl+vae"};
  cfg.n_grid = {20};
  cfg.seeds = {2};
  eval::Sweep sweep(cfg, "");
  const auto r = sweep.run(eval::SweepRequest::from_config(cfg));
  // One VAE and one SIRL run on top of it.
  CHECK(r.stats.embeddings_trained == 2);
  const rep::EmbeddingModel inline_trained =
      eval::train_representation(cfg, sweep.dataset(), rep::MethodSpec::parse("sirl+vae"), 20, 2);
  CHECK(sweep.embedding(rep::MethodSpec::parse("sirl+vae"), 20, 2).params == inline_trained.params);
}
