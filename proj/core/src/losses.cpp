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

#include "sirl/nn/losses.hpp"

#include <algorithm>
#include <cmath>

#include "sirl/error.hpp"

namespace sirl::nn {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector squared_distances(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DataError("distance operands differ in shape");
  return (a - b).rowwise().squaredNorm();
}

TripletGrads triplet_loss(const Matrix& anchor, const Matrix& positive,
                          const Matrix& negative, double margin) {
  if (margin < 0.0) throw ConfigError("triplet margin must be non-negative");
  const Vector d_pos = squared_distances(anchor, positive);
  const Vector d_neg = squared_distances(anchor, negative);

  TripletGrads g;
  g.anchor = Matrix::Zero(anchor.rows(), anchor.cols());
  g.positive = Matrix::Zero(anchor.rows(), anchor.cols());
  g.negative = Matrix::Zero(anchor.rows(), anchor.cols());
  for (Eigen::Index i = 0; i < anchor.rows(); ++i) {
    const double hinge = d_pos[i] - d_neg[i] + margin;
    if (hinge <= 0.0) continue;
    g.loss += hinge;
    g.positive.row(i) = -2.0 * (anchor.row(i) - positive.row(i));
    g.negative.row(i) = 2.0 * (anchor.row(i) - negative.row(i));
    g.anchor.row(i) = 2.0 * (negative.row(i) - positive.row(i));
  }
  return g;
}

SimilarityGrads similarity_loss(const Matrix& first, const Matrix& second,
                                const Matrix& odd, double margin) {
  TripletGrads a = triplet_loss(first, second, odd, margin);
  TripletGrads b = triplet_loss(second, first, odd, margin);
  SimilarityGrads g;
  g.loss = a.loss + b.loss;
  g.first = a.anchor + b.positive;
  g.second = a.positive + b.anchor;
  g.odd = a.negative + b.negative;
  return g;
}

PreferenceGrads preference_loss(const Vector& reward_a, const Vector& reward_b,
                                const Vector& labels, double l2_weight) {
  if (reward_a.size() != reward_b.size() || reward_a.size() != labels.size())
    throw DataError("preference batch vectors differ in length");
  PreferenceGrads g;
  g.reward_a.resize(reward_a.size());
  g.reward_b.resize(reward_b.size());
  for (Eigen::Index i = 0; i < reward_a.size(); ++i) {
    const double margin = reward_a[i] - reward_b[i];
    const double label = labels[i];
    // -log P(A>B) = softplus(-margin), -log P(B>A) = softplus(margin)
    g.loss += label * softplus(-margin) + (1.0 - label) * softplus(margin);
    g.loss += l2_weight * (reward_a[i] * reward_a[i] + reward_b[i] * reward_b[i]);
    const double d_margin = sigmoid(margin) - label;
    g.reward_a[i] = d_margin + 2.0 * l2_weight * reward_a[i];
    g.reward_b[i] = -d_margin + 2.0 * l2_weight * reward_b[i];
  }
  return g;
}

double bradley_terry(double reward_a, double reward_b) {
  const double hi = std::max(reward_a, reward_b);
  const double log_norm = hi + std::log(std::exp(reward_a - hi) + std::exp(reward_b - hi));
  return std::exp(reward_a - log_norm);
}

MseGrads row_mse(const Matrix& prediction, const Matrix& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
    throw DataError("reconstruction and target differ in shape");
  const double width = static_cast<double>(prediction.cols());
  const Matrix diff = prediction - target;
  MseGrads g;
  g.loss = diff.squaredNorm() / width;
  g.prediction = (2.0 / width) * diff;
  return g;
}

}  // namespace sirl::nn
