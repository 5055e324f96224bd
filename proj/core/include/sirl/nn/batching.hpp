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

#ifndef SIRL_NN_BATCHING_HPP_
#define SIRL_NN_BATCHING_HPP_

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "sirl/error.hpp"
#include "sirl/random.hpp"

namespace sirl::nn {

// One epoch of mini-batches: a seeded shuffle of [0, n) cut into chunks of
// `batch_size`, the last partial chunk kept.
inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                           Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

inline void require_finite(double loss, const std::string& what, std::size_t epoch,
                           std::size_t step) {
  if (!std::isfinite(loss)) {
    throw NumericalError(what + ": non-finite loss at epoch " + std::to_string(epoch) +
                         ", step " + std::to_string(step));
  }
}

// Per-epoch mean of the per-batch training loss.
struct TrainingLog {
  std::vector<double> epoch_loss;
};

}  // namespace sirl::nn

#endif  // SIRL_NN_BATCHING_HPP_
