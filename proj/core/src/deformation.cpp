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

#include "sirl/env/deformation.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "sirl/error.hpp"

namespace sirl::env {

namespace {

// Solves T x = rhs where T = tridiag(-1, 2, -1) (the negated second
// difference with clamped ends). T is symmetric positive definite.
std::vector<double> solve_second_difference(const std::vector<double>& rhs) {
  const std::size_t n = rhs.size();
  std::vector<double> c(n, 0.0), d(n, 0.0), x(n, 0.0);
  double denom = 2.0;
  c[0] = -1.0 / denom;
  d[0] = rhs[0] / denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = 2.0 + c[i - 1];
    c[i] = -1.0 / denom;
    d[i] = (rhs[i] + d[i - 1]) / denom;
  }
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

// Unscaled (K^T K)^{-1} e_k on the interior; K^T K = T^2.
std::vector<double> raw_profile(std::size_t interior, std::size_t k) {
  std::vector<double> e(interior, 0.0);
  e[k] = 1.0;
  return solve_second_difference(solve_second_difference(e));
}

double peak_scale(std::size_t num_states) {
  static std::mutex mu;
  static std::map<std::size_t, double> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find(num_states); it != cache.end()) return it->second;
  const std::size_t interior = num_states - 2;
  double peak = 0.0;
  for (std::size_t k = 0; k < interior; ++k) {
    const auto col = raw_profile(interior, k);
    peak = std::max(peak, *std::max_element(col.begin(), col.end()));
  }
  cache[num_states] = peak;
  return peak;
}

void check_states(std::size_t num_states) {
  if (num_states < 3) throw DataError("deformation needs at least one interior waypoint");
}

}  // namespace

nn::Matrix acceleration_norm(std::size_t num_states) {
  check_states(num_states);
  const Eigen::Index interior = static_cast<Eigen::Index>(num_states - 2);
  nn::Matrix k = nn::Matrix::Zero(interior, interior);
  for (Eigen::Index i = 0; i < interior; ++i) {
    k(i, i) = -2.0;
    if (i > 0) k(i, i - 1) = 1.0;
    if (i + 1 < interior) k(i, i + 1) = 1.0;
  }
  nn::Matrix a = nn::Matrix::Identity(num_states, num_states);
  a.block(1, 1, interior, interior) = peak_scale(num_states) * (k.transpose() * k);
  return a;
}

std::vector<double> deformation_profile(std::size_t num_states, std::size_t state_index) {
  check_states(num_states);
  if (state_index == 0 || state_index + 1 >= num_states)
    throw DataError("deformations apply to interior waypoints only");
  const std::size_t interior = num_states - 2;
  const double scale = peak_scale(num_states);
  const auto col = raw_profile(interior, state_index - 1);
  std::vector<double> profile(num_states, 0.0);
  for (std::size_t i = 0; i < interior; ++i) profile[i + 1] = col[i] / scale;
  return profile;
}

Waypoints deform(const Waypoints& waypoints, const DeformationSpec& spec) {
  if (static_cast<std::size_t>(waypoints.cols()) != spec.direction.size())
    throw DataError("deformation direction width does not match waypoint channels");
  const auto profile = deformation_profile(static_cast<std::size_t>(waypoints.rows()),
                                           spec.state_index);
  Waypoints out = waypoints;
  for (Eigen::Index s = 0; s < waypoints.rows(); ++s) {
    const double w = spec.magnitude * profile[static_cast<std::size_t>(s)];
    for (Eigen::Index c = 0; c < waypoints.cols(); ++c)
      out(s, c) += w * spec.direction[static_cast<std::size_t>(c)];
  }
  return out;
}

}  // namespace sirl::env
