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

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "labeler.hpp"
#include "sirl/config.hpp"
#include "sirl/env/dataset.hpp"
#include "sirl/manifest.hpp"
#include "sirl/oracle.hpp"
#include "sirl/sweep.hpp"
#include "test_util.hpp"
// After Eigen: <resolv.h> defines a _res macro.
#include "httplib.h"

using namespace sirl;
using sirl::testing::TempDir;

namespace {

const std::string kCli = SIRL_CLI_PATH;

int run(const std::string& args, const TempDir& dir, const std::string& env = "") {
  const std::string cmd = "cd '" + dir.path().string() + "' && " + env + " '" + kCli + "' " + args +
                          " >> cli.log 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_tiny_config(const TempDir& dir) {
  std::ofstream(dir / "tiny.json") << R"({
    "env": "gridrobot",
    "methods": ["sirl", "random"],
    "n_grid": [30],
    "m_grid": [5, 10],
    "seeds": [0],
    "sirl": {"epochs": 5},
    "vae": {"epochs": 2},
    "reward": {"epochs": 3},
    "tpa": {"rewards": 2, "pairs_per_reward": 20},
    "threads": 1
  })";
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  TempDir dir("cli_usage");
  CHECK(run("--help", dir) == 0);
  CHECK(run("", dir) == 1);
  CHECK(run("frobnicate", dir) == 1);
  CHECK(run("train-rep --method nonsense", dir) == 1);
  CHECK(run("train-rep --frozen --unfrozen", dir) == 1);
  CHECK(run("sweep --pretrain sometimes", dir) == 1);
  CHECK(run("gen-data --alpha -1", dir) == 1);
}

TEST_CASE("missing data exits with 3, bad config with 2") {
  TempDir dir("cli_codes");
  CHECK(run("eval-fpe --out nowhere", dir) == 3);
  std::ofstream(dir / "bad.json") << R"({"sirl": {"epochz": 1}})";
  CHECK(run("gen-data --config bad.json --out x", dir) == 2);
  CHECK(run("gen-data --out x", dir, "SIRL_PORT=notaport") == 2);
  write_tiny_config(dir);
  REQUIRE(run("gen-data --config tiny.json --out g", dir) == 0);
  CHECK(run("train-rep --config tiny.json --env armlite --out g --method random", dir) == 2);
  REQUIRE(run("train-rep --config tiny.json --out g --method random", dir) == 0);
  REQUIRE(run("gen-data --env armlite --out a", dir) == 0);
  CHECK(run("eval-fpe --env armlite --out a --embedding g/embedding", dir) == 2);
}

TEST_CASE("single-run commands write their artifacts and manifests") {
  TempDir dir("cli_flow");
  write_tiny_config(dir);
  REQUIRE(run("gen-data --config tiny.json", dir, "SIRL_OUTPUT_ROOT=out") == 0);
  CHECK(std::filesystem::exists(dir / "out" / "dataset.manifest"));
  CHECK(std::filesystem::exists(dir / "out" / "scene.json"));

  REQUIRE(run("train-rep --config tiny.json --out out --method sirl --n 30 --seed 2 --alpha 0.5", dir) == 0);
  const Manifest m = Manifest::read(dir / "out" / "train-rep.run.manifest");
  CHECK(m.require("command") == "train-rep");
  CHECK(m.require("seed") == "2");
  CHECK(m.require("env") == "gridrobot");
  CHECK(m.contains("config_hash"));
  CHECK(m.contains("started_at"));
  CHECK(m.contains("wall_clock_seconds"));
  CHECK(m.contains("version"));
  CHECK(load_config(dir / "out" / "train-rep.config.json").sirl.alpha == 0.5);
  CHECK(std::filesystem::exists(dir / "out" / "train-rep.loss.csv"));

  REQUIRE(run("eval-tpa --config tiny.json --out out --seed 2", dir) == 0);
  const auto tpa = eval::read_csv(dir / "out" / "tpa.csv");
  REQUIRE(tpa.size() == 2);
  CHECK(tpa[0].method == "sirl");
  CHECK(tpa[0].n == 30);
  CHECK(tpa[1].m == 10);
  REQUIRE(run("eval-tpa --config tiny.json --out out --seed 2 --unfrozen --m 5", dir) == 0);
  CHECK(eval::read_csv(dir / "out" / "tpa.csv").at(0).method == "sirl:unfrozen");

  REQUIRE(run("eval-fpe --config tiny.json --out out --seed 2", dir) == 0);
  CHECK(eval::read_csv(dir / "out" / "fpe.csv").size() == 1);
  REQUIRE(run("train-reward --config tiny.json --out out --seed 2 --m 10", dir) == 0);
  CHECK(std::filesystem::exists(dir / "out" / "reward.manifest"));
  REQUIRE(run("retrieve --config tiny.json --out out --query 7 --k 2", dir) == 0);
  const auto retrieval = nlohmann::json::parse(slurp(dir / "out" / "retrieval.json"));
  CHECK(retrieval.at("most_similar").at(0).at("id") == 7);
  CHECK(run("retrieve --config tiny.json --out out --query 490", dir) == 1);
}

TEST_CASE("train-rep accepts exported similarity answers") {
  TempDir dir("cli_answers");
  write_tiny_config(dir);
  REQUIRE(run("gen-data --config tiny.json --out out", dir) == 0);
  const env::Dataset d = env::load_dataset(dir / "out" / "dataset");
  const auto answers = oracle::simulate_similarity(oracle::sample_similarity_queries(d.size(), 25, 1),
                                                   d.features, "p1");
  oracle::write_similarity_answers(dir / "answers.jsonl", answers);
  REQUIRE(run("train-rep --config tiny.json --out out --method sirl --answers answers.jsonl", dir) == 0);
  CHECK(Manifest::read(dir / "out" / "train-rep.run.manifest").require("n") == "25");
  CHECK(run("train-rep --config tiny.json --out out --method vae --answers answers.jsonl", dir) == 1);
}

TEST_CASE("sweep reruns reuse the cache and reproduce the CSV") {
  TempDir dir("cli_sweep");
  write_tiny_config(dir);
  REQUIRE(run("sweep --config tiny.json --out s", dir) == 0);
  const std::string tpa = slurp(dir / "s" / "tpa.csv");
  const std::string fpe = slurp(dir / "s" / "fpe.csv");
  CHECK(Manifest::read(dir / "s" / "sweep.run.manifest").require("embeddings_trained") == "2");
  REQUIRE(run("sweep --config tiny.json --out s", dir) == 0);
  CHECK(Manifest::read(dir / "s" / "sweep.run.manifest").require("embeddings_trained") == "0");
  CHECK(Manifest::read(dir / "s" / "sweep.run.manifest").require("cells_computed") == "0");
  CHECK(slurp(dir / "s" / "tpa.csv") == tpa);
  CHECK(slurp(dir / "s" / "fpe.csv") == fpe);
  // Two methods x one N x two M x one seed.
  CHECK(eval::read_csv(dir / "s" / "tpa.csv").size() == 4);
  REQUIRE(run("sweep --config tiny.json --out s --skip-fpe --method sirl --pretrain vae", dir) == 0);
  CHECK(eval::read_csv(dir / "s" / "tpa.csv").at(0).method == "sirl+vae");
}

TEST_CASE("serve answers HTTP until interrupted") {
  TempDir dir("cli_serve");
  write_tiny_config(dir);
  REQUIRE(run("gen-data --config tiny.json --out out", dir) == 0);
  // exec so that $! is the server itself.
  const std::string cmd = "(cd '" + dir.path().string() + "' && SIRL_PORT=0 exec '" + kCli +
                          "' serve --config tiny.json --out out > serve.log 2>&1) & echo $! > '" +
                          (dir.path() / "serve.pid").string() + "'";
  REQUIRE(std::system(cmd.c_str()) == 0);
  int port = 0;
  const std::regex listening(R"(listening on http://127\.0\.0\.1:(\d+))");
  for (int i = 0; i < 200 && port == 0; ++i) {
    std::smatch match;
    const std::string log = slurp(dir / "serve.log");
    if (std::regex_search(log, match, listening)) port = std::stoi(match[1]);
    else std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  const env::Dataset d = env::load_dataset(dir / "out" / "dataset");
  auto next = client.Get("/session/fay/next");
  REQUIRE(next);
  auto ack = client.Post("/session/fay/answer",
                         sirl::testing::label_payload(next->body, d, oracle::sample_rewards(1, 1).front()),
                         "application/json");
  REQUIRE(ack);
  CHECK(ack->status == 200);

  const std::string pid = slurp(dir / "serve.pid");
  REQUIRE(std::system(("kill -INT " + pid).c_str()) == 0);
  for (int i = 0; i < 200 && !std::filesystem::exists(dir / "out" / "serve.run.manifest"); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  CHECK(std::filesystem::exists(dir / "out" / "serve.run.manifest"));
  // Header line plus one answer.
  std::istringstream log(slurp(dir / "out" / "answers.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(log, line)) ++n;
  CHECK(n == 2);
}
