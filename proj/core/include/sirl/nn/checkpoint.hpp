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

#ifndef SIRL_NN_CHECKPOINT_HPP_
#define SIRL_NN_CHECKPOINT_HPP_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sirl/manifest.hpp"
#include "sirl/nn/mlp.hpp"

namespace sirl::nn {

// A checkpoint is `<stem>.manifest` (key-value text: layer shapes under
// "<section>.layer.<i> = <rows>x<cols>", plus caller metadata) and
// `<stem>.bin` (every section's parameters as little-endian doubles, layer
// order, weights row-major then bias).
struct Checkpoint {
  Manifest manifest;
  std::vector<std::pair<std::string, MlpParams>> sections;

  const MlpParams& section(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& stem);

std::filesystem::path manifest_path(const std::filesystem::path& stem);
std::filesystem::path payload_path(const std::filesystem::path& stem);

}  // namespace sirl::nn

#endif  // SIRL_NN_CHECKPOINT_HPP_
