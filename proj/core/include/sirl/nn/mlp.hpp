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

#ifndef SIRL_NN_MLP_HPP_
#define SIRL_NN_MLP_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace sirl::nn {

// Row-major so that a batch of samples is a stack of contiguous rows.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

// One affine layer; `weight` is fan_in x fan_out so a batch maps as X W + b.
struct Layer {
  Matrix weight;
  RowVector bias;
};

struct MlpShape {
  std::size_t input = 0;
  std::vector<std::size_t> hidden;
  std::size_t output = 0;
};

// Fully connected net, ReLU after every hidden layer, linear output.
struct MlpParams {
  std::vector<Layer> layers;

  std::size_t input_width() const;
  std::size_t output_width() const;
  std::size_t parameter_count() const;
  MlpShape shape() const;

  MlpParams zeros_like() const;
  MlpParams& operator+=(const MlpParams& other);
  MlpParams& operator*=(double scale);

  // Layer order, weights row-major then bias, per layer.
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> values);

  bool all_finite() const;

  bool operator==(const MlpParams& other) const;
};

// Glorot-uniform weights, zero biases. Deterministic in `seed`.
MlpParams init_params(const MlpShape& shape, std::uint64_t seed);

// Throws DataError on a width mismatch.
Matrix mlp_forward(const MlpParams& params, const Matrix& batch);

// Intermediate values kept for the reverse pass.
struct ForwardTrace {
  std::vector<Matrix> layer_inputs;  // input seen by layer i
  std::vector<Matrix> pre_activations;
  Matrix output;
};

ForwardTrace mlp_forward_traced(const MlpParams& params, const Matrix& batch);

struct Gradients {
  MlpParams params;
  Matrix input;
};

// Reverse-mode gradient of sum(output .* upstream) with respect to every
// parameter and, unless `input_grad` is false, the input batch.
Gradients mlp_backward(const MlpParams& params, const ForwardTrace& trace,
                       const Matrix& upstream, bool input_grad = true);

// Bytewise checksum over the flattened parameters.
std::uint64_t checksum(const MlpParams& params);

}  // namespace sirl::nn

#endif  // SIRL_NN_MLP_HPP_
