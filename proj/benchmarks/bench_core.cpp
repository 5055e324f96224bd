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

// Hot paths of training and evaluation at GridRobot sizes.

#include <benchmark/benchmark.h>

#include <vector>

#include "sirl/env/dataset.hpp"
#include "sirl/env/deformation.hpp"
#include "sirl/evaluation.hpp"
#include "sirl/nn/mlp.hpp"
#include "sirl/oracle.hpp"
#include "sirl/random.hpp"
#include "sirl/representation.hpp"
#include "sirl/reward.hpp"

namespace {

using namespace sirl;

const env::Dataset& grid() {
  static const env::Dataset d = env::build_dataset(env::default_scene(env::EnvId::kGridRobot), 0, 0);
  return d;
}

nn::Matrix batch_of(std::size_t rows) {
  std::vector<env::Trajectory> picked(grid().trajectories.begin(),
                                      grid().trajectories.begin() + static_cast<std::ptrdiff_t>(rows));
  return env::stack_inputs(picked);
}

void BM_MlpForward(benchmark::State& state) {
  const rep::EmbeddingModel m = rep::random_embedding(env::EnvId::kGridRobot, env::grid::kInputWidth, 0);
  const nn::Matrix x = batch_of(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(nn::mlp_forward(m.params, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForward)->Arg(64)->Arg(490);

void BM_MlpBackward(benchmark::State& state) {
  const rep::EmbeddingModel m = rep::random_embedding(env::EnvId::kGridRobot, env::grid::kInputWidth, 0);
  const nn::Matrix x = batch_of(static_cast<std::size_t>(state.range(0)));
  const nn::ForwardTrace trace = nn::mlp_forward_traced(m.params, x);
  const nn::Matrix upstream = nn::Matrix::Ones(trace.output.rows(), trace.output.cols());
  for (auto _ : state) benchmark::DoNotOptimize(nn::mlp_backward(m.params, trace, upstream, false));
}
BENCHMARK(BM_MlpBackward)->Arg(64);

// One similarity-loss evaluation with gradients on a batch of 64 answers.
void BM_SirlLoss(benchmark::State& state) {
  const rep::EmbeddingModel m = rep::random_embedding(env::EnvId::kGridRobot, env::grid::kInputWidth, 0);
  const nn::Matrix all = batch_of(192);
  const nn::Matrix a = all.topRows(64), b = all.middleRows(64, 64), c = all.bottomRows(64);
  for (auto _ : state) benchmark::DoNotOptimize(rep::sirl_loss(m.params, a, b, c, 1.0));
}
BENCHMARK(BM_SirlLoss);

void BM_PrefLossUnfrozen(benchmark::State& state) {
  const rep::EmbeddingModel e = rep::random_embedding(env::EnvId::kGridRobot, env::grid::kInputWidth, 0);
  const reward::RewardModel model = reward::init_reward_model(e, false, 1);
  const auto reward = oracle::sample_rewards(1, 2).front();
  const auto labels = oracle::answer_preferences(oracle::sample_preference_queries(grid().size(), 64, 3),
                                                 reward, grid().features);
  for (auto _ : state) benchmark::DoNotOptimize(reward::pref_loss(model, grid().trajectories, labels, 10.0));
}
BENCHMARK(BM_PrefLossUnfrozen);

void BM_DeformationProfile(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(env::deformation_profile(n, n / 2));
}
BENCHMARK(BM_DeformationProfile)->Arg(21)->Arg(200);

void BM_Fpe(benchmark::State& state) {
  const rep::EmbeddingModel m = rep::random_embedding(env::EnvId::kGridRobot, env::grid::kInputWidth, 0);
  const nn::Matrix emb = rep::embed_all(m, grid().trajectories);
  for (auto _ : state) benchmark::DoNotOptimize(eval::fpe(emb, grid().features, 0));
}
BENCHMARK(BM_Fpe);

}  // namespace

BENCHMARK_MAIN();
