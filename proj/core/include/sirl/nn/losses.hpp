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

#ifndef SIRL_NN_LOSSES_HPP_
#define SIRL_NN_LOSSES_HPP_

#include <Eigen/Core>

#include "sirl/nn/mlp.hpp"

namespace sirl::nn {

using Vector = Eigen::VectorXd;

// Numerically stable log(1 + e^x).
double softplus(double x);
double sigmoid(double x);

// Per-row squared Euclidean distance.
Vector squared_distances(const Matrix& a, const Matrix& b);

struct TripletGrads {
  double loss = 0.0;
  Matrix anchor;
  Matrix positive;
  Matrix negative;
};

// sum_i max(d(a_i, p_i) - d(a_i, n_i) + margin, 0) with d the squared L2
// distance. A hinge sitting exactly at zero contributes no gradient.
TripletGrads triplet_loss(const Matrix& anchor, const Matrix& positive,
                          const Matrix& negative, double margin);

struct SimilarityGrads {
  double loss = 0.0;
  Matrix first;   // P1
  Matrix second;  // P2
  Matrix odd;     // N
};

// Anchor-free similarity loss: each member of the similar pair serves as the
// anchor in turn.
SimilarityGrads similarity_loss(const Matrix& first, const Matrix& second,
                                const Matrix& odd, double margin);

struct PreferenceGrads {
  double loss = 0.0;
  Vector reward_a;
  Vector reward_b;
};

// Bradley-Terry cross-entropy, summed over pairs, plus
// l2_weight * sum(R_A^2 + R_B^2). `labels` holds 1 where A is preferred.
PreferenceGrads preference_loss(const Vector& reward_a, const Vector& reward_b,
                                const Vector& labels, double l2_weight);

// P(A > B) = e^{R_A} / (e^{R_A} + e^{R_B}), evaluated through log-sum-exp.
double bradley_terry(double reward_a, double reward_b);

struct MseGrads {
  double loss = 0.0;
  Matrix prediction;
};

// sum over rows of the per-row mean squared error.
MseGrads row_mse(const Matrix& prediction, const Matrix& target);

}  // namespace sirl::nn

#endif  // SIRL_NN_LOSSES_HPP_
