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

#include "sirl/representation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "sirl/error.hpp"
#include "sirl/nn/adam.hpp"
#include "sirl/nn/checkpoint.hpp"
#include "sirl/random.hpp"

namespace sirl::rep {

namespace {

// Seed-derivation tags.
enum : std::uint64_t {
  kTagInit = 1,
  kTagShuffle = 2,
  kTagNoise = 3,
  kTagVae = 4,
  kTagQueries = 5,
  kTagRewards = 6,
  kTagHeads = 7,
};

env::EnvId env_of(std::span<const env::Trajectory> pool) {
  if (pool.empty()) throw DataError("trajectory pool is empty");
  return pool.front().env;
}

nn::Matrix gather(std::span<const env::Trajectory> pool, const std::vector<std::size_t>& idx) {
  return env::stack_inputs(pool, idx);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::size_t hidden_width(env::EnvId env) { return env == env::EnvId::kGridRobot ? 128 : 1024; }

nn::MlpShape embedding_shape(env::EnvId env, std::size_t input_width) {
  const std::size_t h = hidden_width(env);
  return nn::MlpShape{input_width, {h, h}, kEmbeddingDim};
}

bool MethodSpec::frozen() const {
  if (frozen_override) return *frozen_override;
  return uses_similarity();
}

std::string MethodSpec::base_name() const {
  switch (method) {
    case Method::kSirl:
      return "sirl";
    case Method::kSirlVae:
      return "sirl+vae";
    case Method::kVae:
      return "vae";
    case Method::kSinglePref:
      return "singlepref";
    case Method::kMultiPref:
      return "multipref-" + std::to_string(heads);
    case Method::kRandom:
      return "random";
  }
  return "unknown";
}

std::string MethodSpec::name() const {
  std::string n = base_name();
  if (frozen_override && *frozen_override != uses_similarity())
    n += *frozen_override ? ":frozen" : ":unfrozen";
  return n;
}

MethodSpec MethodSpec::parse(const std::string& text) {
  std::string s = lower(text);
  MethodSpec m;
  if (auto colon = s.find(':'); colon != std::string::npos) {
    const std::string mode = s.substr(colon + 1);
    if (mode == "frozen") {
      m.frozen_override = true;
    } else if (mode == "unfrozen") {
      m.frozen_override = false;
    } else {
      throw UsageError("unknown embedding mode '" + mode + "' in method '" + text + "'");
    }
    s = s.substr(0, colon);
  }
  if (s == "sirl") {
    m.method = Method::kSirl;
  } else if (s == "sirl+vae") {
    m.method = Method::kSirlVae;
  } else if (s == "vae") {
    m.method = Method::kVae;
  } else if (s == "singlepref") {
    m.method = Method::kSinglePref;
  } else if (s == "random") {
    m.method = Method::kRandom;
  } else if (s.rfind("multipref-", 0) == 0) {
    m.method = Method::kMultiPref;
    try {
      std::size_t used = 0;
      const long k = std::stol(s.substr(10), &used);
      if (used != s.size() - 10 || k < 1) throw std::invalid_argument("k");
      m.heads = static_cast<std::size_t>(k);
    } catch (const std::exception&) {
      throw UsageError("malformed MultiPref method '" + text + "' (expected multipref-<k>)");
    }
  } else {
    throw UsageError("unknown method '" + text + "'");
  }
  // A pinned mode equal to the default carries no information.
  if (m.frozen_override && *m.frozen_override == m.uses_similarity()) m.frozen_override.reset();
  return m;
}

nn::Vector embed(const EmbeddingModel& model, const env::Trajectory& trajectory) {
  nn::Matrix x(1, trajectory.width());
  std::copy(trajectory.input.begin(), trajectory.input.end(), x.data());
  const nn::Matrix out = nn::mlp_forward(model.params, x);
  return out.row(0).transpose();
}

nn::Matrix embed_all(const EmbeddingModel& model, std::span<const env::Trajectory> trajectories) {
  return nn::mlp_forward(model.params, env::stack_inputs(trajectories));
}

double traj_distance(const EmbeddingModel& model, const env::Trajectory& a,
                     const env::Trajectory& b) {
  return (embed(model, a) - embed(model, b)).squaredNorm();
}

LossAndGrads triplet_loss(const EmbeddingModel& model, const env::Trajectory& anchor,
                          const env::Trajectory& positive, const env::Trajectory& negative,
                          double alpha) {
  const std::array<env::Trajectory, 3> rows{anchor, positive, negative};
  const nn::ForwardTrace trace = nn::mlp_forward_traced(model.params, env::stack_inputs(rows));
  const nn::TripletGrads g = nn::triplet_loss(trace.output.row(0), trace.output.row(1),
                                              trace.output.row(2), alpha);
  nn::Matrix upstream(3, trace.output.cols());
  upstream.row(0) = g.anchor;
  upstream.row(1) = g.positive;
  upstream.row(2) = g.negative;
  return {g.loss, nn::mlp_backward(model.params, trace, upstream, false).params};
}

LossAndGrads sirl_loss(const nn::MlpParams& params, const nn::Matrix& first,
                       const nn::Matrix& second, const nn::Matrix& odd, double alpha) {
  const Eigen::Index b = first.rows();
  if (b == 0) throw DataError("similarity batch is empty");
  if (second.rows() != b || odd.rows() != b) throw DataError("similarity batch members differ in size");
  nn::Matrix stacked(3 * b, first.cols());
  stacked.topRows(b) = first;
  stacked.middleRows(b, b) = second;
  stacked.bottomRows(b) = odd;
  const nn::ForwardTrace trace = nn::mlp_forward_traced(params, stacked);
  const nn::SimilarityGrads g = nn::similarity_loss(
      trace.output.topRows(b), trace.output.middleRows(b, b), trace.output.bottomRows(b), alpha);
  nn::Matrix upstream(3 * b, trace.output.cols());
  upstream.topRows(b) = g.first;
  upstream.middleRows(b, b) = g.second;
  upstream.bottomRows(b) = g.odd;
  return {g.loss, nn::mlp_backward(params, trace, upstream, false).params};
}

VaeModel init_vae(env::EnvId env, std::size_t input_width, std::uint64_t seed) {
  const std::size_t h = hidden_width(env);
  VaeModel vae;
  vae.encoder = nn::init_params({input_width, {h, h}, 2 * kEmbeddingDim}, derive_seed(seed, {1}));
  vae.decoder = nn::init_params({kEmbeddingDim, {h, h}, input_width}, derive_seed(seed, {2}));
  return vae;
}

VaeLoss vae_loss(const VaeModel& model, const nn::Matrix& batch, const nn::Matrix& noise,
                 double kl_weight) {
  constexpr Eigen::Index d = kEmbeddingDim;
  if (noise.rows() != batch.rows() || noise.cols() != d)
    throw DataError("VAE noise must be batch x latent");
  const nn::ForwardTrace enc = nn::mlp_forward_traced(model.encoder, batch);
  const nn::Matrix mu = enc.output.leftCols(d);
  const nn::Matrix logvar = enc.output.rightCols(d);
  const nn::Matrix std_dev = (0.5 * logvar.array()).exp().matrix();
  const nn::Matrix z = mu + std_dev.cwiseProduct(noise);

  const nn::ForwardTrace dec = nn::mlp_forward_traced(model.decoder, z);
  const nn::MseGrads recon = nn::row_mse(dec.output, batch);

  const nn::Matrix var = logvar.array().exp().matrix();
  VaeLoss out;
  out.reconstruction = recon.loss;
  out.kl = 0.5 * (mu.array().square() + var.array() - logvar.array() - 1.0).sum();
  out.loss = out.reconstruction + kl_weight * out.kl;

  nn::Gradients dec_grads = nn::mlp_backward(model.decoder, dec, recon.prediction);
  out.decoder_grads = std::move(dec_grads.params);
  const nn::Matrix& g_z = dec_grads.input;

  nn::Matrix upstream(batch.rows(), 2 * d);
  upstream.leftCols(d) = g_z + kl_weight * mu;
  upstream.rightCols(d) = (g_z.array() * noise.array() * 0.5 * std_dev.array() +
                           kl_weight * 0.5 * (var.array() - 1.0))
                              .matrix();
  out.encoder_grads = nn::mlp_backward(model.encoder, enc, upstream, false).params;
  return out;
}

VaeModel train_vae(std::span<const env::Trajectory> pool, env::EnvId env, const VaeConfig& config,
                   std::uint64_t seed, nn::TrainingLog* log) {
  if (pool.empty()) throw DataError("VAE training needs a nonempty trajectory pool");
  VaeModel vae = init_vae(env, pool.front().width(), derive_seed(seed, {kTagInit}));
  const nn::AdamConfig adam{config.learning_rate, config.decay};
  nn::AdamState enc_state(adam, vae.encoder);
  nn::AdamState dec_state(adam, vae.decoder);
  Rng shuffle(derive_seed(seed, {kTagShuffle}));
  Rng noise_rng(derive_seed(seed, {kTagNoise}));

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& idx : nn::epoch_batches(pool.size(), config.batch_size, shuffle)) {
      const nn::Matrix x = gather(pool, idx);
      nn::Matrix noise(x.rows(), static_cast<Eigen::Index>(kEmbeddingDim));
      for (Eigen::Index k = 0; k < noise.size(); ++k) noise.data()[k] = noise_rng.normal();
      VaeLoss l = vae_loss(vae, x, noise, config.kl_weight);
      nn::require_finite(l.loss, "VAE training", epoch, step);
      nn::adam_step(vae.encoder, l.encoder_grads, enc_state);
      nn::adam_step(vae.decoder, l.decoder_grads, dec_state);
      total += l.loss;
      ++step;
    }
    if (log) log->epoch_loss.push_back(total / static_cast<double>(pool.size()));
  }
  return vae;
}

EmbeddingModel vae_embedding(const VaeModel& vae, env::EnvId env, std::uint64_t seed) {
  EmbeddingModel m;
  m.params = vae.encoder;
  nn::Layer& last = m.params.layers.back();
  last.weight = nn::Matrix(last.weight.leftCols(kEmbeddingDim));
  last.bias = nn::RowVector(last.bias.head(kEmbeddingDim));
  m.env = env;
  m.provenance = "vae";
  m.seed = seed;
  m.pretrained = true;
  return m;
}

EmbeddingModel pretrain_vae(std::span<const env::Trajectory> pool, const VaeConfig& config,
                            std::uint64_t seed, nn::TrainingLog* log) {
  const env::EnvId env = env_of(pool);
  return vae_embedding(train_vae(pool, env, config, derive_seed(seed, {kTagVae}), log), env, seed);
}

EmbeddingModel train_sirl(std::span<const env::Trajectory> pool,
                          std::span<const oracle::SimilarityAnswer> answers,
                          const SirlConfig& config, std::uint64_t seed, nn::TrainingLog* log) {
  const env::EnvId env = env_of(pool);
  EmbeddingModel initial;
  if (config.pretrain == Pretrain::kVae) {
    initial = pretrain_vae(pool, config.vae, seed);
  } else {
    initial.params = nn::init_params(embedding_shape(env, pool.front().width()),
                                     derive_seed(seed, {kTagInit}));
    initial.env = env;
  }
  return train_sirl_from(std::move(initial), pool, answers, config, seed, log);
}

EmbeddingModel train_sirl_from(EmbeddingModel model, std::span<const env::Trajectory> pool,
                               std::span<const oracle::SimilarityAnswer> answers,
                               const SirlConfig& config, std::uint64_t seed,
                               nn::TrainingLog* log) {
  if (answers.empty()) throw DataError("SIRL training needs at least one similarity answer");
  if (config.alpha < 0.0) throw ConfigError("similarity margin must be non-negative");
  for (const auto& a : answers) {
    if (a.first >= pool.size() || a.second >= pool.size() || a.odd >= pool.size())
      throw DataError("similarity answer references a trajectory outside the pool");
  }
  model.env = env_of(pool);
  const nn::AdamConfig adam{config.learning_rate, config.decay};
  nn::AdamState state(adam, model.params);
  Rng shuffle(derive_seed(seed, {kTagShuffle}));

  std::vector<std::size_t> first, second, odd;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& idx : nn::epoch_batches(answers.size(), config.batch_size, shuffle)) {
      first.clear();
      second.clear();
      odd.clear();
      for (std::size_t i : idx) {
        first.push_back(answers[i].first);
        second.push_back(answers[i].second);
        odd.push_back(answers[i].odd);
      }
      LossAndGrads l = sirl_loss(model.params, gather(pool, first), gather(pool, second),
                                 gather(pool, odd), config.alpha);
      nn::require_finite(l.loss, "SIRL training", epoch, step);
      nn::adam_step(model.params, l.grads, state);
      total += l.loss;
      ++step;
    }
    if (log) log->epoch_loss.push_back(total / static_cast<double>(answers.size()));
  }
  model.provenance = model.pretrained ? "sirl+vae" : "sirl";
  model.seed = seed;
  model.budget = answers.size();
  model.alpha = config.alpha;
  return model;
}

PrefRepConfig PrefRepConfig::for_env(env::EnvId env) {
  PrefRepConfig c;
  if (env == env::EnvId::kArmLite) {
    c.learning_rate = 0.001;
    c.l2_weight = 1.0;
  }
  return c;
}

PrefRepData allocate_preference_queries(std::span<const env::FeatureVector> pool_features,
                                        std::span<const oracle::GroundTruthReward> rewards,
                                        std::size_t budget, std::uint64_t seed) {
  if (rewards.empty()) throw ConfigError("preference pretraining needs at least one reward");
  if (rewards.size() > budget)
    throw ConfigError("MultiPref needs at least one query per head (k = " +
                      std::to_string(rewards.size()) + ", N = " + std::to_string(budget) + ")");
  const auto queries = oracle::sample_preference_queries(pool_features.size(), budget,
                                                         derive_seed(seed, {kTagQueries}));
  PrefRepData data;
  data.labels.reserve(budget);
  data.head_of.reserve(budget);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const std::size_t h = i % rewards.size();
    const auto& q = queries[i];
    data.labels.push_back(
        oracle::answer_preference(q, rewards[h], pool_features[q.a], pool_features[q.b]));
    data.head_of.push_back(h);
  }
  return data;
}

std::vector<oracle::GroundTruthReward> pretraining_rewards(const MethodSpec& method,
                                                           std::uint64_t seed) {
  switch (method.method) {
    case Method::kSinglePref:
      return {oracle::equal_weight_reward()};
    case Method::kMultiPref:
      return oracle::sample_rewards(method.heads, derive_seed(seed, {kTagRewards}));
    default:
      throw UsageError("method " + method.base_name() + " does not pretrain on preferences");
  }
}

namespace {

struct HeadScores {
  nn::Vector reward_a;
  nn::Vector reward_b;
};

HeadScores score_heads(const nn::Matrix& emb, Eigen::Index b, const nn::MlpParams& heads,
                       std::span<const std::size_t> head_idx) {
  const nn::Layer& lin = heads.layers.front();
  HeadScores s{nn::Vector(b), nn::Vector(b)};
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto h = static_cast<Eigen::Index>(head_idx[static_cast<std::size_t>(i)]);
    s.reward_a[i] = emb.row(i).dot(lin.weight.col(h)) + lin.bias[h];
    s.reward_b[i] = emb.row(b + i).dot(lin.weight.col(h)) + lin.bias[h];
  }
  return s;
}

}  // namespace

PrefRepModel train_pref_model(std::span<const env::Trajectory> pool, env::EnvId env,
                              const PrefRepData& data, std::size_t heads,
                              const PrefRepConfig& config, std::uint64_t seed,
                              nn::TrainingLog* log) {
  if (data.labels.empty()) throw DataError("preference pretraining needs labeled pairs");
  if (data.head_of.size() != data.labels.size()) throw DataError("every label needs a head");
  PrefRepModel model;
  model.trunk = nn::init_params(embedding_shape(env, pool.front().width()),
                                derive_seed(seed, {kTagInit}));
  model.heads = nn::init_params({kEmbeddingDim, {}, heads}, derive_seed(seed, {kTagHeads}));
  const nn::AdamConfig adam{config.learning_rate, config.decay};
  nn::AdamState trunk_state(adam, model.trunk);
  nn::AdamState head_state(adam, model.heads);
  Rng shuffle(derive_seed(seed, {kTagShuffle}));

  std::vector<std::size_t> rows, head_idx;
  nn::Vector labels;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& idx : nn::epoch_batches(data.labels.size(), config.batch_size, shuffle)) {
      const auto b = static_cast<Eigen::Index>(idx.size());
      rows.assign(2 * idx.size(), 0);
      head_idx.clear();
      labels.resize(b);
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& l = data.labels[idx[i]];
        rows[i] = l.a;
        rows[idx.size() + i] = l.b;
        head_idx.push_back(data.head_of[idx[i]]);
        labels[static_cast<Eigen::Index>(i)] = l.label;
      }
      const nn::ForwardTrace trace = nn::mlp_forward_traced(model.trunk, gather(pool, rows));
      const HeadScores s = score_heads(trace.output, b, model.heads, head_idx);
      const nn::PreferenceGrads g = nn::preference_loss(s.reward_a, s.reward_b, labels,
                                                        config.l2_weight);
      nn::require_finite(g.loss, "preference pretraining", epoch, step);

      nn::MlpParams head_grads = model.heads.zeros_like();
      nn::Matrix upstream = nn::Matrix::Zero(2 * b, trace.output.cols());
      const nn::Layer& lin = model.heads.layers.front();
      for (Eigen::Index i = 0; i < b; ++i) {
        const auto h = static_cast<Eigen::Index>(head_idx[static_cast<std::size_t>(i)]);
        head_grads.layers[0].weight.col(h) +=
            (g.reward_a[i] * trace.output.row(i) + g.reward_b[i] * trace.output.row(b + i)).transpose();
        head_grads.layers[0].bias[h] += g.reward_a[i] + g.reward_b[i];
        upstream.row(i) = g.reward_a[i] * lin.weight.col(h).transpose();
        upstream.row(b + i) = g.reward_b[i] * lin.weight.col(h).transpose();
      }
      nn::MlpParams trunk_grads = nn::mlp_backward(model.trunk, trace, upstream, false).params;
      nn::adam_step(model.trunk, trunk_grads, trunk_state);
      nn::adam_step(model.heads, head_grads, head_state);
      total += g.loss;
      ++step;
    }
    if (log) log->epoch_loss.push_back(total / static_cast<double>(data.labels.size()));
  }
  return model;
}

double pref_model_accuracy(const PrefRepModel& model, std::span<const env::Trajectory> pool,
                           const PrefRepData& data) {
  if (data.labels.empty()) return 0.0;
  std::vector<std::size_t> rows(2 * data.labels.size());
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    rows[i] = data.labels[i].a;
    rows[data.labels.size() + i] = data.labels[i].b;
  }
  const nn::Matrix emb = nn::mlp_forward(model.trunk, gather(pool, rows));
  const HeadScores s = score_heads(emb, static_cast<Eigen::Index>(data.labels.size()), model.heads,
                                   data.head_of);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    const int predicted = s.reward_a[static_cast<Eigen::Index>(i)] >= s.reward_b[static_cast<Eigen::Index>(i)] ? 1 : 0;
    correct += predicted == data.labels[i].label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.labels.size());
}

EmbeddingModel train_pref_representation(const env::Dataset& dataset, const MethodSpec& method,
                                         std::size_t budget, const PrefRepConfig& config,
                                         std::uint64_t seed, nn::TrainingLog* log) {
  const auto rewards = pretraining_rewards(method, seed);
  const PrefRepData data = allocate_preference_queries(dataset.features, rewards, budget, seed);
  PrefRepModel model = train_pref_model(dataset.trajectories, dataset.env(), data, rewards.size(),
                                        config, seed, log);
  EmbeddingModel out;
  out.params = std::move(model.trunk);
  out.env = dataset.env();
  out.provenance = method.base_name();
  out.seed = seed;
  out.budget = budget;
  return out;
}

EmbeddingModel random_embedding(env::EnvId env, std::size_t input_width, std::uint64_t seed) {
  EmbeddingModel m;
  m.params = nn::init_params(embedding_shape(env, input_width), derive_seed(seed, {kTagInit}));
  m.env = env;
  m.provenance = "random";
  m.seed = seed;
  return m;
}

void save_embedding(const std::filesystem::path& stem, const EmbeddingModel& model,
                    const Manifest& extra) {
  nn::Checkpoint cp;
  cp.manifest.set("format", "sirl-checkpoint-v1");
  cp.manifest.set("kind", "embedding");
  cp.manifest.set("env", env::to_string(model.env));
  cp.manifest.set("method", model.provenance);
  cp.manifest.set("n", static_cast<std::uint64_t>(model.budget));
  cp.manifest.set("alpha", model.alpha);
  cp.manifest.set("pretrain", model.pretrained ? "vae" : "none");
  cp.manifest.set("seed", model.seed);
  cp.manifest.set("input_width", static_cast<std::uint64_t>(model.input_width()));
  cp.manifest.set("embedding_dim", static_cast<std::uint64_t>(model.params.output_width()));
  for (const auto& [k, v] : extra.entries()) cp.manifest.set(k, v);
  cp.sections.emplace_back("embedding", model.params);
  nn::save_checkpoint(stem, cp);
}

EmbeddingModel load_embedding(const std::filesystem::path& stem) {
  const nn::Checkpoint cp = nn::load_checkpoint(stem);
  if (cp.manifest.require("format") != "sirl-checkpoint-v1")
    throw DataError("unsupported checkpoint format in " + stem.string());
  EmbeddingModel m;
  m.params = cp.section("embedding");
  m.env = env::parse_env(cp.manifest.require("env"));
  m.provenance = cp.manifest.require("method");
  m.budget = cp.manifest.require_uint("n");
  m.alpha = cp.manifest.require_double("alpha");
  m.pretrained = cp.manifest.require("pretrain") == "vae";
  m.seed = cp.manifest.require_uint("seed");
  if (m.params.output_width() != kEmbeddingDim)
    throw DataError("embedding checkpoint has output width " +
                    std::to_string(m.params.output_width()));
  return m;
}

}  // namespace sirl::rep
