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

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "doctest.h"
#include "sirl/config.hpp"
#include "sirl/error.hpp"
#include "sirl/manifest.hpp"
#include "sirl/nn/checkpoint.hpp"
#include "sirl/representation.hpp"
#include "sirl/reward.hpp"
#include "test_util.hpp"

using namespace sirl;
using sirl::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

nn::Checkpoint sample_checkpoint() {
  nn::Checkpoint c;
  c.manifest.set("kind", "test");
  c.manifest.set("note", std::string("two words"));
  c.sections.emplace_back("trunk", nn::init_params({4, {8, 8}, 3}, 1));
  c.sections.emplace_back("head", nn::init_params({3, {5}, 1}, 2));
  return c;
}

}  // namespace

TEST_CASE("format_double round trips exactly") {
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.uniform_index(200)) - 100);
    CHECK(parse_double(format_double(x)) == x);
  }
  for (double x : {0.0, -0.0, 1.0, 0.1, 1e-300, 5e-324, std::numeric_limits<double>::max()})
    CHECK(parse_double(format_double(x)) == x);
  CHECK_THROWS_AS(parse_double("1.5x"), DataError);
}

TEST_CASE("manifest text format") {
  Manifest m;
  m.set("b", 2);
  m.set("a", std::string("x y"));
  m.set("flag", true);
  m.set("b", 3);
  CHECK(m.to_string() == "b = 3\na = x y\nflag = true\n");
  const Manifest back = Manifest::parse("# comment\n\nb = 3\n a =  x y \nflag=true\n");
  CHECK(back.require_int("b") == 3);
  CHECK(back.require("a") == "x y");
  CHECK(back.require_bool("flag"));
  CHECK_FALSE(back.contains("c"));
  CHECK_THROWS_AS(back.require("c"), DataError);
  CHECK_THROWS_AS(Manifest::parse("novalue\n"), DataError);
}

TEST_CASE("checkpoints round trip bit for bit") {
  TempDir dir("ckpt");
  const nn::Checkpoint c = sample_checkpoint();
  nn::save_checkpoint(dir / "m", c);
  const nn::Checkpoint d = nn::load_checkpoint(dir / "m");
  CHECK(d.section("trunk") == c.section("trunk"));
  CHECK(d.section("head") == c.section("head"));
  CHECK(d.manifest.require("note") == "two words");
  CHECK_THROWS_AS(d.section("missing"), DataError);
  // Saving again reproduces the same bytes.
  nn::save_checkpoint(dir / "n", d);
  CHECK(slurp(nn::payload_path(dir / "m")) == slurp(nn::payload_path(dir / "n")));
}

TEST_CASE("corrupted checkpoints are detected") {
  TempDir dir("ckpt_bad");
  nn::save_checkpoint(dir / "m", sample_checkpoint());
  const std::string payload = slurp(nn::payload_path(dir / "m"));
  const std::string manifest = slurp(nn::manifest_path(dir / "m"));

  SUBCASE("flipped payload byte") {
    std::string bad = payload;
    bad[bad.size() / 2] ^= 0x40;
    spit(nn::payload_path(dir / "m"), bad);
    CHECK_THROWS_AS(nn::load_checkpoint(dir / "m"), DataError);
  }
  SUBCASE("truncated payload") {
    spit(nn::payload_path(dir / "m"), payload.substr(0, payload.size() - 8));
    CHECK_THROWS_AS(nn::load_checkpoint(dir / "m"), DataError);
  }
  SUBCASE("extra payload bytes") {
    spit(nn::payload_path(dir / "m"), payload + "x");
    CHECK_THROWS_AS(nn::load_checkpoint(dir / "m"), DataError);
  }
  SUBCASE("edited layer shape") {
    std::string bad = manifest;
    const auto at = bad.find("8x8");
    REQUIRE(at != std::string::npos);
    bad.replace(at, 3, "8x7");
    spit(nn::manifest_path(dir / "m"), bad);
    CHECK_THROWS_AS(nn::load_checkpoint(dir / "m"), DataError);
  }
  SUBCASE("missing payload") {
    std::filesystem::remove(nn::payload_path(dir / "m"));
    CHECK_THROWS_AS(nn::load_checkpoint(dir / "m"), DataError);
  }
}

TEST_CASE("embedding and reward checkpoints keep their metadata") {
  TempDir dir("models");
  rep::EmbeddingModel e = rep::random_embedding(env::EnvId::kGridRobot, 19, 5);
  e.provenance = "sirl+vae";
  e.budget = 500;
  e.alpha = 0.5;
  e.pretrained = true;
  rep::save_embedding(dir / "emb", e);
  const rep::EmbeddingModel f = rep::load_embedding(dir / "emb");
  CHECK(f.params == e.params);
  CHECK(f.provenance == "sirl+vae");
  CHECK(f.budget == 500);
  CHECK(f.alpha == 0.5);
  CHECK(f.pretrained);
  CHECK(f.seed == e.seed);
  CHECK(f.env == env::EnvId::kGridRobot);

  const reward::RewardModel r = reward::init_reward_model(e, false, 3);
  reward::save_reward(dir / "rew", r);
  const reward::RewardModel s = reward::load_reward(dir / "rew");
  CHECK(s.head == r.head);
  CHECK(s.embedding.params == r.embedding.params);
  CHECK_FALSE(s.frozen);
}

TEST_CASE("default configs match the golden files") {
  const std::filesystem::path golden = SIRL_TEST_DATA_DIR;
  CHECK(to_json(ExperimentConfig::defaults(env::EnvId::kGridRobot)) ==
        slurp(golden / "config_gridrobot.json"));
  CHECK(to_json(ExperimentConfig::defaults(env::EnvId::kArmLite)) ==
        slurp(golden / "config_armlite.json"));
  CHECK(load_config(golden / "config_armlite.json") == ExperimentConfig::defaults(env::EnvId::kArmLite));
}

TEST_CASE("config overlays, overrides and round trips") {
  TempDir dir("config");
  ExperimentConfig c = parse_config(R"({"env": "armlite", "sirl": {"epochs": 12}, "seeds": [4, 5]})");
  CHECK(c.env == env::EnvId::kArmLite);
  CHECK(c.sirl.epochs == 12);
  CHECK(c.sirl.learning_rate == 0.004);
  CHECK(c.reward.l2_weight == 1.0);
  CHECK(c.seeds == std::vector<std::uint64_t>{4, 5});
  save_config(dir / "c.json", c);
  CHECK(load_config(dir / "c.json") == c);

  // The override picks the environment before defaults are filled in.
  const ExperimentConfig g = parse_config(R"({"env": "armlite"})", env::EnvId::kGridRobot);
  CHECK(g.env == env::EnvId::kGridRobot);
  CHECK(g.reward.l2_weight == 10.0);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"sirl": {"epoch": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"sirl": {"epochs": "many"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"methods": ["sirl", "nope"]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"tpa": {"train_fraction": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"sirl": {"batch_size": 0}})"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("config hash ignores where and how fast results are produced") {
  ExperimentConfig a = ExperimentConfig::defaults(env::EnvId::kGridRobot);
  ExperimentConfig b = a;
  b.output_dir = "elsewhere";
  b.threads = 7;
  CHECK(config_hash(a) == config_hash(b));
  b.sirl.alpha = 0.5;
  CHECK(config_hash(a) != config_hash(b));
}
