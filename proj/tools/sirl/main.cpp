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

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "http_server.hpp"
#include "httplib.h"
#include "json.hpp"
#include "sirl/config.hpp"
#include "sirl/error.hpp"
#include "sirl/evaluation.hpp"
#include "sirl/manifest.hpp"
#include "sirl/nn/checkpoint.hpp"
#include "sirl/random.hpp"
#include "sirl/representation.hpp"
#include "sirl/reward.hpp"
#include "sirl/service.hpp"
#include "sirl/sweep.hpp"
#include "sirl/version.hpp"

namespace fs = std::filesystem;
using namespace sirl;

namespace {

struct Options {
  std::string config;
  std::string env;
  std::vector<std::string> methods;
  std::vector<std::size_t> n;
  std::vector<std::size_t> m;
  std::vector<std::uint64_t> seeds;
  std::optional<double> alpha;
  std::string pretrain;
  bool frozen = false;
  bool unfrozen = false;
  std::string out;
  std::optional<int> port;
  std::optional<std::size_t> threads;

  std::string data;
  std::string embedding;
  std::string answers;
  std::string preferences;
  std::size_t query = 0;
  std::size_t k = 2;
  std::string host = "127.0.0.1";
  bool skip_fpe = false;
  bool skip_tpa = false;
};

// Collects artifacts and writes `<command>.run.manifest` next to them.
class Run {
 public:
  Run(std::string command, const ExperimentConfig& config)
      : command_(std::move(command)),
        config_(config),
        out_(config.output_dir),
        start_(std::chrono::steady_clock::now()),
        started_(std::time(nullptr)) {
    fs::create_directories(out_);
    save_config(out_ / (command_ + ".config.json"), config_);
    artifacts_.push_back(command_ + ".config.json");
  }

  fs::path path(const std::string& name) const { return out_ / name; }
  void artifact(const std::string& name) { artifacts_.push_back(name); }
  void note(const std::string& key, const std::string& value) { notes_.set(key, value); }

  void finish(std::optional<std::uint64_t> seed) {
    Manifest m;
    m.set("command", command_);
    m.set("version", kVersion);
    m.set("config_hash", hex64(config_hash(config_)));
    if (seed) m.set("seed", *seed);
    m.set("env", env::to_string(config_.env));
    m.set("compiler", std::string(__VERSION__));
    m.set("eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                       "." + std::to_string(EIGEN_MINOR_VERSION));
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started_));
    m.set("started_at", std::string(stamp));
    m.set("wall_clock_seconds",
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
    for (const auto& [k, v] : notes_.entries()) m.set(k, v);
    for (std::size_t i = 0; i < artifacts_.size(); ++i)
      m.set("artifact." + std::to_string(i), artifacts_[i]);
    m.write(out_ / (command_ + ".run.manifest"));
  }

 private:
  std::string command_;
  ExperimentConfig config_;
  fs::path out_;
  std::chrono::steady_clock::time_point start_;
  std::time_t started_;
  Manifest notes_;
  std::vector<std::string> artifacts_;
};

rep::MethodSpec apply_mode(rep::MethodSpec spec, const Options& o) {
  if (o.pretrain == "vae" && spec.method == rep::Method::kSirl) spec.method = rep::Method::kSirlVae;
  if (o.pretrain == "none" && spec.method == rep::Method::kSirlVae) spec.method = rep::Method::kSirl;
  if (o.frozen) spec.frozen_override = true;
  if (o.unfrozen) spec.frozen_override = false;
  // Normalize so a mode equal to the default is not spelled out.
  return rep::MethodSpec::parse(spec.name());
}

ExperimentConfig resolve(const Options& o) {
  std::optional<env::EnvId> env;
  if (!o.env.empty()) env = env::parse_env(o.env);
  ExperimentConfig c = o.config.empty() ? ExperimentConfig::defaults(env.value_or(env::EnvId::kGridRobot))
                                        : load_config(o.config, env);
  if (!o.methods.empty()) c.methods = o.methods;
  for (auto& name : c.methods) name = apply_mode(rep::MethodSpec::parse(name), o).name();
  if (!o.n.empty()) c.n_grid = o.n;
  if (!o.m.empty()) c.m_grid = o.m;
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (o.alpha) {
    if (*o.alpha < 0.0) throw UsageError("--alpha must be non-negative");
    c.sirl.alpha = *o.alpha;
  }
  if (o.threads) c.threads = *o.threads;
  for (std::size_t m : c.m_grid)
    if (m == 0) throw UsageError("--m must be at least 1");

  if (!o.out.empty()) {
    c.output_dir = o.out;
  } else if (const char* root = std::getenv("SIRL_OUTPUT_ROOT"); root && *root) {
    c.output_dir = root;
  }
  if (o.port) {
    c.service.port = *o.port;
  } else if (const char* port = std::getenv("SIRL_PORT"); port && *port) {
    try {
      c.service.port = std::stoi(port);
    } catch (const std::exception&) {
      throw ConfigError(std::string("SIRL_PORT is not a port number: ") + port);
    }
  }
  if (c.service.port < 0 || c.service.port > 65535) throw UsageError("port out of range");
  return c;
}

template <typename T>
T single(const std::vector<T>& values, const char* flag) {
  if (values.size() != 1)
    throw UsageError(std::string("this command takes exactly one ") + flag + " value");
  return values.front();
}

rep::MethodSpec single_method(const ExperimentConfig& c) {
  if (c.methods.size() != 1) throw UsageError("this command takes exactly one --method");
  return rep::MethodSpec::parse(c.methods.front());
}

fs::path dataset_stem(const Options& o, const ExperimentConfig& c) {
  return o.data.empty() ? fs::path(c.output_dir) / "dataset" : fs::path(o.data);
}

env::Dataset load_pool(const Options& o, const ExperimentConfig& c) {
  const fs::path stem = dataset_stem(o, c);
  if (!fs::exists(nn::manifest_path(stem)))
    throw DataError("missing dataset " + nn::manifest_path(stem).string() + "; run gen-data first");
  env::Dataset d = env::load_dataset(stem);
  if (d.env() != c.env)
    throw ConfigError("dataset " + stem.string() + " is " + env::to_string(d.env()) +
                      " but the run is configured for " + env::to_string(c.env));
  return d;
}

rep::EmbeddingModel load_model(const Options& o, const ExperimentConfig& c, const env::Dataset& d) {
  const fs::path stem = o.embedding.empty() ? fs::path(c.output_dir) / "embedding" : fs::path(o.embedding);
  if (!fs::exists(nn::manifest_path(stem)))
    throw DataError("missing embedding checkpoint " + nn::manifest_path(stem).string());
  rep::EmbeddingModel m = rep::load_embedding(stem);
  if (m.env != d.env() || m.input_width() != d.input_width())
    throw ConfigError("checkpoint " + stem.string() + " was trained on " + env::to_string(m.env) +
                      " and cannot be used with a " + env::to_string(d.env()) + " dataset");
  return m;
}

std::string model_hash(const ExperimentConfig& c, const rep::EmbeddingModel& m, const std::string& extra) {
  return hex64(fnv1a64(hex64(config_hash(c)) + hex64(nn::checksum(m.params)) + extra));
}

void write_log(const fs::path& path, const nn::TrainingLog& log) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < log.epoch_loss.size(); ++i)
    out << i << ',' << format_double(log.epoch_loss[i]) << '\n';
}

int cmd_gen_data(const Options&, const ExperimentConfig& c) {
  Run run("gen-data", c);
  const env::Dataset d = make_dataset(c);
  env::save_dataset(run.path("dataset"), d);
  env::save_scene(run.path("scene.json"), d.scene);
  run.artifact("dataset.manifest");
  run.artifact("dataset.bin");
  run.artifact("scene.json");
  run.note("trajectories", std::to_string(d.size()));
  run.finish(c.dataset_seed);
  std::cout << "wrote " << d.size() << " " << env::to_string(d.env()) << " trajectories to "
            << run.path("dataset").string() << "\n";
  return 0;
}

int cmd_train_rep(const Options& o, const ExperimentConfig& c) {
  const env::Dataset d = load_pool(o, c);
  const rep::MethodSpec method = single_method(c);
  const std::uint64_t seed = single(c.seeds, "--seed");
  std::vector<oracle::SimilarityAnswer> answers;
  if (!o.answers.empty()) {
    if (!method.uses_similarity()) throw UsageError("--answers only applies to SIRL methods");
    answers = oracle::read_similarity_answers(o.answers);
    if (answers.empty()) throw DataError(o.answers + " holds no similarity answers");
    if (!o.n.empty() && o.n.front() < answers.size()) answers.resize(o.n.front());
  }
  std::size_t n = answers.size();
  if (answers.empty() && (method.uses_similarity() || method.uses_preferences()))
    n = single(c.n_grid, "--n");
  Run run("train-rep", c);
  nn::TrainingLog log;
  std::cerr << "training " << method.name() << " (N=" << n << ", seed " << seed << ")\n";
  rep::EmbeddingModel model = eval::train_representation(c, d, method, n, seed, answers, nullptr, &log);
  model.budget = n;
  rep::save_embedding(run.path("embedding"), model);
  run.artifact("embedding.manifest");
  run.artifact("embedding.bin");
  if (!log.epoch_loss.empty()) {
    write_log(run.path("train-rep.loss.csv"), log);
    run.artifact("train-rep.loss.csv");
    std::cout << "epoch-0 loss " << format_double(log.epoch_loss.front()) << ", final loss "
              << format_double(log.epoch_loss.back()) << "\n";
  }
  run.note("method", method.name());
  run.note("n", std::to_string(n));
  run.finish(seed);
  std::cout << "wrote " << run.path("embedding").string() << "\n";
  return 0;
}

int cmd_train_reward(const Options& o, const ExperimentConfig& c) {
  const env::Dataset d = load_pool(o, c);
  const rep::EmbeddingModel model = load_model(o, c, d);
  const rep::MethodSpec method = apply_mode(rep::MethodSpec::parse(model.provenance), o);
  const std::uint64_t seed = single(c.seeds, "--seed");
  std::vector<oracle::PreferenceLabel> labels;
  if (!o.preferences.empty()) {
    labels = oracle::read_preference_labels(o.preferences);
    if (labels.empty()) throw DataError(o.preferences + " holds no preference labels");
    if (!o.m.empty() && o.m.front() < labels.size()) labels.resize(o.m.front());
  } else {
    // One simulated user with a reward drawn from the seed.
    const std::size_t m = single(c.m_grid, "--m");
    const auto reward = oracle::sample_rewards(1, derive_seed(seed, {41})).front();
    const auto queries = oracle::sample_preference_queries(d.size(), m, derive_seed(seed, {42}));
    labels = oracle::answer_preferences(queries, reward, d.features);
  }
  Run run("train-reward", c);
  nn::TrainingLog log;
  const reward::RewardModel rm =
      reward::train_reward(model, d.trajectories, labels, c.reward_for(method), seed, &log);
  reward::save_reward(run.path("reward"), rm);
  write_log(run.path("train-reward.loss.csv"), log);
  run.artifact("reward.manifest");
  run.artifact("reward.bin");
  run.artifact("train-reward.loss.csv");
  const double acc = reward::preference_accuracy(rm, d.trajectories, labels);
  run.note("frozen", rm.frozen ? "true" : "false");
  run.note("train_accuracy", format_double(acc));
  run.finish(seed);
  std::cout << "trained " << (rm.frozen ? "frozen" : "unfrozen") << " reward on " << labels.size()
            << " labels, training accuracy " << format_double(acc) << "\n";
  return 0;
}

int cmd_eval_fpe(const Options& o, const ExperimentConfig& c) {
  const env::Dataset d = load_pool(o, c);
  const rep::EmbeddingModel model = load_model(o, c, d);
  const std::uint64_t seed = single(c.seeds, "--seed");
  Run run("eval-fpe", c);
  const eval::FpeReport r = eval::evaluate_fpe(c, d, model, seed);
  const rep::MethodSpec method = rep::MethodSpec::parse(model.provenance);
  eval::CsvRow row{method.name(), env::to_string(c.env), model.budget, 0, seed,
                   model_hash(c, model, "fpe"), "fpe", r.mse};
  eval::write_csv(run.path("fpe.csv"), {row});
  run.artifact("fpe.csv");
  run.finish(seed);
  std::cout << method.name() << " FPE " << format_double(r.mse) << "\n";
  return 0;
}

int cmd_eval_tpa(const Options& o, const ExperimentConfig& c) {
  const env::Dataset d = load_pool(o, c);
  const rep::EmbeddingModel model = load_model(o, c, d);
  const rep::MethodSpec method = apply_mode(rep::MethodSpec::parse(model.provenance), o);
  const std::uint64_t seed = single(c.seeds, "--seed");
  Run run("eval-tpa", c);
  std::vector<eval::CsvRow> rows;
  for (std::size_t m : c.m_grid) {
    const eval::TpaReport r = eval::evaluate_tpa(c, d, model, method, m, seed);
    rows.push_back({method.name(), env::to_string(c.env), model.budget, m, seed,
                    model_hash(c, model, "tpa" + method.name() + std::to_string(m)), "tpa", r.mean});
    std::cout << method.name() << " M=" << m << " TPA " << format_double(r.mean) << "\n";
  }
  eval::write_csv(run.path("tpa.csv"), rows);
  run.artifact("tpa.csv");
  run.finish(seed);
  return 0;
}

int cmd_sweep(const Options& o, const ExperimentConfig& c) {
  Run run("sweep", c);
  eval::Sweep sweep(c, run.path("cache"));
  eval::SweepRequest request = eval::SweepRequest::from_config(c);
  request.fpe = !o.skip_fpe;
  request.tpa = !o.skip_tpa;
  const eval::SweepResult r = sweep.run(request);
  if (request.tpa) {
    eval::write_csv(run.path("tpa.csv"), r.tpa);
    run.artifact("tpa.csv");
  }
  if (request.fpe) {
    eval::write_csv(run.path("fpe.csv"), r.fpe);
    run.artifact("fpe.csv");
  }
  run.note("embeddings_trained", std::to_string(r.stats.embeddings_trained));
  run.note("embedding_cache_hits", std::to_string(r.stats.embedding_hits));
  run.note("cells_computed", std::to_string(r.stats.cells_computed));
  run.note("cell_cache_hits", std::to_string(r.stats.cell_hits));
  run.finish(std::nullopt);
  std::cout << "embeddings trained " << r.stats.embeddings_trained << ", loaded "
            << r.stats.embedding_hits << "; cells computed " << r.stats.cells_computed
            << ", cached " << r.stats.cell_hits << "\n";
  return 0;
}

int cmd_retrieve(const Options& o, const ExperimentConfig& c) {
  const env::Dataset d = load_pool(o, c);
  const rep::EmbeddingModel model = load_model(o, c, d);
  if (o.query >= d.size())
    throw UsageError("--query " + std::to_string(o.query) + " is outside the pool of " +
                     std::to_string(d.size()));
  Run run("retrieve", c);
  const auto r = eval::retrieve_extremes(model, d.trajectories[o.query], d.trajectories, o.k);
  nlohmann::json j;
  j["query"] = o.query;
  j["k"] = r.most_similar.size();
  auto list = [&](const std::vector<std::size_t>& ids) {
    nlohmann::json a = nlohmann::json::array();
    for (std::size_t i : ids) a.push_back({{"id", i}, {"distance", r.distances[i]}});
    return a;
  };
  j["most_similar"] = list(r.most_similar);
  j["most_dissimilar"] = list(r.most_dissimilar);
  std::ofstream(run.path("retrieval.json"), std::ios::trunc) << j.dump(2) << "\n";
  run.artifact("retrieval.json");
  run.finish(std::nullopt);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_eval_heldout(const Options& o, const ExperimentConfig& c) {
  if (o.answers.empty() || o.preferences.empty())
    throw UsageError("eval-heldout needs --answers and --preferences exports");
  const env::Dataset d = load_pool(o, c);
  const std::uint64_t seed = single(c.seeds, "--seed");
  std::ifstream sa(o.answers), sp(o.preferences);
  if (!sa) throw DataError("cannot read " + o.answers);
  if (!sp) throw DataError("cannot read " + o.preferences);
  std::stringstream a, p;
  a << sa.rdbuf();
  p << sp.rdbuf();
  const auto responders = service::group_export(a.str(), p.str());
  const rep::MethodSpec sirl = rep::MethodSpec::parse("sirl");
  eval::HeldoutConfig hc{c.sirl_for(sirl), c.reward_for(sirl), c.heldout.splits, c.heldout.train_fraction};
  Run run("eval-heldout", c);
  const auto reports = eval::heldout_eval(d, responders, hc, seed);
  std::ofstream out(run.path("heldout.csv"), std::ios::trunc | std::ios::binary);
  out << "responder,heldout_tpa,pooled_tpa\n";
  for (const auto& r : reports) {
    out << r.responder << ',' << format_double(r.heldout.mean) << ',' << format_double(r.pooled.mean) << '\n';
    std::cout << r.responder << " held-out " << format_double(r.heldout.mean) << " pooled "
              << format_double(r.pooled.mean) << "\n";
  }
  out.close();
  run.artifact("heldout.csv");
  run.finish(seed);
  return 0;
}

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const Options& o, const ExperimentConfig& c) {
  env::Dataset d = load_pool(o, c);
  const std::uint64_t seed = c.seeds.front();
  const service::Counts counts{c.service.practice_similarity, c.service.similarity,
                               c.service.practice_preference, c.service.preference};
  Run run("serve", c);
  service::QueryService svc(std::move(d), counts, seed, run.path("answers.jsonl"));
  run.artifact("answers.jsonl");
  httplib::Server server;
  service::mount(server, svc);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  int port = c.service.port;
  if (port == 0) {
    port = server.bind_to_any_port(o.host);
  } else if (!server.bind_to_port(o.host, port)) {
    throw ConfigError("cannot listen on " + o.host + ":" + std::to_string(port));
  }
  if (port < 0) throw ConfigError("cannot bind a port on " + o.host);
  std::cout << "listening on http://" << o.host << ":" << port << std::endl;
  server.listen_after_bind();
  g_server = nullptr;
  run.note("port", std::to_string(port));
  run.finish(seed);
  return 0;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON config file; flags override its values");
  cmd->add_option("--env", o.env, "gridrobot or armlite");
  cmd->add_option("--method", o.methods,
                  "sirl, sirl+vae, vae, singlepref, multipref-<k> or random, optionally "
                  "suffixed :frozen or :unfrozen (repeatable)");
  cmd->add_option("--n", o.n, "representation queries N (repeatable for sweep)");
  cmd->add_option("--m", o.m, "preference queries M (repeatable)");
  cmd->add_option("--seed", o.seeds, "experiment seed (repeatable for sweep)");
  cmd->add_option("--alpha", o.alpha, "triplet margin");
  cmd->add_option("--pretrain", o.pretrain, "SIRL pretraining: none or vae")
      ->check(CLI::IsMember({"none", "vae"}));
  auto* f = cmd->add_flag("--frozen", o.frozen, "keep the embedding fixed during reward learning");
  auto* u = cmd->add_flag("--unfrozen", o.unfrozen, "fine-tune the embedding during reward learning");
  f->excludes(u);
  cmd->add_option("--out", o.out, "output directory (default: $SIRL_OUTPUT_ROOT or the config's)");
  cmd->add_option("--port", o.port, "service port (default: $SIRL_PORT or the config's)");
  cmd->add_option("--threads", o.threads, "worker threads, 0 for one per core");
  cmd->add_option("--data", o.data, "dataset stem (default: <out>/dataset)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Similarity-based representation learning for robot trajectories"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "generate the trajectory pool");
  auto* train_rep = app.add_subcommand("train-rep", "train a representation");
  auto* train_reward = app.add_subcommand("train-reward", "train a reward model on an embedding");
  auto* eval_fpe = app.add_subcommand("eval-fpe", "feature prediction error of an embedding");
  auto* eval_tpa = app.add_subcommand("eval-tpa", "test preference accuracy of an embedding");
  auto* sweep = app.add_subcommand("sweep", "run a (method, N, M, seed) grid with caching");
  auto* retrieve = app.add_subcommand("retrieve", "most and least similar trajectories to a query");
  auto* serve = app.add_subcommand("serve", "run the labeling query service");
  auto* heldout = app.add_subcommand("eval-heldout", "leave-one-responder-out evaluation of exports");
  for (auto* cmd : {gen, train_rep, train_reward, eval_fpe, eval_tpa, sweep, retrieve, serve, heldout})
    add_common(cmd, o);
  for (auto* cmd : {train_reward, eval_fpe, eval_tpa, retrieve})
    cmd->add_option("--embedding", o.embedding, "embedding checkpoint stem (default: <out>/embedding)");
  train_rep->add_option("--answers", o.answers, "similarity answers file to train on");
  heldout->add_option("--answers", o.answers, "similarity export (JSON lines)");
  train_reward->add_option("--preferences", o.preferences, "preference labels file to train on");
  heldout->add_option("--preferences", o.preferences, "preference export (JSON lines)");
  retrieve->add_option("--query", o.query, "pool index of the query trajectory");
  retrieve->add_option("--k", o.k, "how many trajectories to return on each side");
  serve->add_option("--host", o.host, "address to bind");
  sweep->add_flag("--skip-fpe", o.skip_fpe, "do not compute FPE cells");
  sweep->add_flag("--skip-tpa", o.skip_tpa, "do not compute TPA cells");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::kUsage);
  }

  try {
    const ExperimentConfig c = resolve(o);
    if (gen->parsed()) return cmd_gen_data(o, c);
    if (train_rep->parsed()) return cmd_train_rep(o, c);
    if (train_reward->parsed()) return cmd_train_reward(o, c);
    if (eval_fpe->parsed()) return cmd_eval_fpe(o, c);
    if (eval_tpa->parsed()) return cmd_eval_tpa(o, c);
    if (sweep->parsed()) return cmd_sweep(o, c);
    if (retrieve->parsed()) return cmd_retrieve(o, c);
    if (serve->parsed()) return cmd_serve(o, c);
    if (heldout->parsed()) return cmd_eval_heldout(o, c);
  } catch (const Error& e) {
    std::cerr << "sirl: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "sirl: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kData);
  } catch (const std::exception& e) {
    std::cerr << "sirl: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kData);
  }
  return static_cast<int>(ErrorKind::kUsage);
}
