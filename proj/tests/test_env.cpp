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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "sirl/env/arm_lite.hpp"
#include "sirl/env/dataset.hpp"
#include "sirl/env/deformation.hpp"
#include "sirl/env/grid_robot.hpp"
#include "sirl/error.hpp"
#include "sirl/random.hpp"
#include "test_util.hpp"

using namespace sirl;
using namespace sirl::env;

namespace {

// Every length-8 move string with four R (x+1) and four U (y+1), sorted.
std::vector<std::string> brute_force_moves() {
  std::vector<std::string> out;
  for (unsigned mask = 0; mask < 256; ++mask) {
    if (__builtin_popcount(mask) != 4) continue;
    std::string s;
    for (int bit = 7; bit >= 0; --bit) s += (mask >> bit) & 1u ? 'R' : 'U';
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Cell> walk(const std::string& moves) {
  std::vector<Cell> cells{{0, 0}};
  for (char m : moves) {
    Cell c = cells.back();
    (m == 'R' ? c.x : c.y) += 1;
    cells.push_back(c);
  }
  return cells;
}

// Dense reference for the deformation operator.
nn::Matrix dense_inverse_column(std::size_t num_states, std::size_t index) {
  const Eigen::Index m = static_cast<Eigen::Index>(num_states - 2);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    k(i, i) = -2.0;
    if (i > 0) k(i, i - 1) = 1.0;
    if (i + 1 < m) k(i, i + 1) = 1.0;
  }
  const Eigen::MatrixXd g = k.transpose() * k;
  const Eigen::MatrixXd g_inv = g.fullPivLu().inverse();
  const double c = g_inv.maxCoeff();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m + 2, m + 2);
  a.block(1, 1, m, m) = c * g;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m + 2);
  e[static_cast<Eigen::Index>(index)] = 1.0;
  return a.fullPivLu().solve(e);
}

}  // namespace

TEST_CASE("grid enumeration matches brute force path by path") {
  const std::vector<Trajectory> all = grid_enumerate(GridScene{});
  const std::vector<std::string> moves = brute_force_moves();
  REQUIRE(moves.size() == 70);
  REQUIRE(all.size() == 70 * grid::kEndAnglesDeg.size());
  CHECK(all.size() == 490);
  std::size_t i = 0;
  for (const std::string& m : moves) {
    const std::vector<Cell> expected = walk(m);
    for (int angle : grid::kEndAnglesDeg) {
      const Trajectory& t = all[i++];
      CHECK(grid_cells(t) == expected);
      CHECK(grid_end_angle_deg(t) == angle);
      CHECK(t.width() == grid::kInputWidth);
      CHECK(t.input.back() == doctest::Approx(angle * std::numbers::pi / 180.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("grid trajectories are distinct") {
  const std::vector<Trajectory> all = grid_enumerate(GridScene{});
  std::vector<std::vector<double>> inputs;
  for (const auto& t : all) inputs.push_back(t.input);
  std::sort(inputs.begin(), inputs.end());
  CHECK(std::adjacent_find(inputs.begin(), inputs.end()) == inputs.end());
}

TEST_CASE("grid features follow the distance definitions") {
  const GridScene scene;
  const Trajectory t = make_grid_trajectory(walk("RRRRUUUU"), -60);
  double d1 = 0, d2 = 0, d3 = 0;
  for (const Cell& c : walk("RRRRUUUU")) {
    d1 += std::hypot(c.x - 1.0, c.y - 3.0);
    d2 += std::hypot(c.x - 3.0, c.y - 0.0);
    d3 += std::hypot(c.x - 2.0, c.y - 2.0);
  }
  const FeatureVector f = grid_features(t, scene);
  CHECK(f[0] == doctest::Approx(d1 / 9.0).epsilon(1e-14));
  CHECK(f[1] == doctest::Approx(d2 / 9.0).epsilon(1e-14));
  CHECK(f[2] == doctest::Approx(d3 / 9.0).epsilon(1e-14));
  CHECK(f[3] == 60.0);
}

TEST_CASE("grid scene validation rejects objects off the grid") {
  GridScene s;
  s.laptop = {5, 0};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  CHECK_THROWS_AS(make_grid_trajectory(walk("RRRR"), 0), DataError);
}

TEST_CASE("normalized pool features span the unit interval") {
  const Dataset d = build_dataset(default_scene(EnvId::kGridRobot), 0, 0);
  REQUIRE(d.size() == 490);
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    double lo = 1e9, hi = -1e9;
    for (const auto& f : d.features) {
      lo = std::min(lo, f[k]);
      hi = std::max(hi, f[k]);
    }
    CHECK(lo == 0.0);
    CHECK(hi == doctest::Approx(1.0).epsilon(1e-15));
  }
  for (std::size_t i = 0; i < d.size(); ++i)
    CHECK(d.features[i] == d.normalizer.apply(d.raw_features[i]));
}

TEST_CASE("deformation profile matches a dense solve") {
  for (std::size_t n : {3u, 4u, 9u, 21u, 40u}) {
    const nn::Matrix a = acceleration_norm(n);
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const std::vector<double> fast = deformation_profile(n, k);
      const nn::Matrix dense = dense_inverse_column(n, k);
      REQUIRE(fast.size() == n);
      for (std::size_t i = 0; i < n; ++i) {
        INFO("n=" << n << " k=" << k << " i=" << i);
        CHECK(std::abs(fast[i] - dense(static_cast<Eigen::Index>(i), 0)) < 1e-10);
      }
      // A times the profile reproduces the push on the interior.
      Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(fast.data(), static_cast<Eigen::Index>(n));
      const Eigen::VectorXd ap = a * p;
      for (std::size_t i = 1; i + 1 < n; ++i)
        CHECK(std::abs(ap[static_cast<Eigen::Index>(i)] - (i == k ? 1.0 : 0.0)) < 1e-9);
    }
  }
}

TEST_CASE("deformation profiles peak at exactly one over all pushes") {
  const std::size_t n = arm::kStates;
  double peak = 0.0;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const auto p = deformation_profile(n, k);
    CHECK(p.front() == 0.0);
    CHECK(p.back() == 0.0);
    peak = std::max(peak, *std::max_element(p.begin(), p.end()));
  }
  CHECK(peak == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("deform is linear in magnitude and keeps the endpoints") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Waypoints w = sirl::testing::random_matrix(arm::kStates, arm::kChannels, rng);
    DeformationSpec s1{1 + rng.uniform_index(arm::kStates - 2), rng.uniform(-2, 2),
                       {rng.normal(), rng.normal(), rng.normal(), rng.normal()}};
    DeformationSpec s2 = s1;
    s2.magnitude = rng.uniform(-2, 2);
    DeformationSpec sum = s1;
    sum.magnitude = s1.magnitude + s2.magnitude;
    const Waypoints d1 = deform(w, s1) - w;
    const Waypoints d2 = deform(w, s2) - w;
    const Waypoints ds = deform(w, sum) - w;
    CHECK((ds - d1 - d2).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(d1.row(0).isZero());
    CHECK(d1.row(arm::kStates - 1).isZero());
  }
}

TEST_CASE("deform rejects endpoints and shape mismatches") {
  const Waypoints w = Waypoints::Zero(5, 2);
  CHECK_THROWS_AS(deform(w, {0, 1.0, {1.0, 0.0}}), DataError);
  CHECK_THROWS_AS(deform(w, {4, 1.0, {1.0, 0.0}}), DataError);
  CHECK_THROWS_AS(deform(w, {2, 1.0, {1.0}}), DataError);
}

TEST_CASE("arm trajectory layout and feature definitions") {
  const ArmScene scene;
  const double tilt = 0.4;
  const Waypoints w = straight_line({0.2, -0.3, 0.1, tilt}, {0.8, 0.3, 0.5, tilt});
  const Trajectory t = make_arm_trajectory(w, scene);
  REQUIRE(t.width() == arm::kInputWidth);
  double h = 0, laptop = 0, human = 0;
  for (std::size_t s = 0; s < arm::kStates; ++s) {
    const double u = static_cast<double>(s) / (arm::kStates - 1);
    const double x = 0.2 + 0.6 * u, y = -0.3 + 0.6 * u, z = 0.1 + 0.4 * u;
    CHECK(t.state(s)[0] == doctest::Approx(x).epsilon(1e-14));
    h += z;
    laptop += std::hypot(x - 0.35, y + 0.15);
    // The human faces -x, so "front" is -dx and "side" is -dy.
    const double dx = x - 0.85, dy = y - 0.25;
    human += std::hypot(-dx / 1.0, -dy / 0.5);
  }
  const FeatureVector f = armlite_features(t, scene);
  CHECK(f[0] == doctest::Approx(h / 21).epsilon(1e-12));
  CHECK(f[1] == doctest::Approx(tilt).epsilon(1e-12));
  CHECK(f[2] == doctest::Approx(laptop / 21).epsilon(1e-12));
  CHECK(f[3] == doctest::Approx(human / 21).epsilon(1e-12));
}

TEST_CASE("arm waypoints are clamped to the workspace") {
  const ArmScene scene;
  const Waypoints w = straight_line({-1.0, -2.0, -0.5, -3.0}, {2.0, 2.0, 2.0, 3.0});
  const Trajectory t = make_arm_trajectory(w, scene);
  for (std::size_t s = 0; s < arm::kStates; ++s) {
    for (int c = 0; c < 3; ++c) {
      CHECK(t.state(s)[c] >= scene.box_min[c]);
      CHECK(t.state(s)[c] <= scene.box_max[c]);
    }
  }
  const FeatureVector f = armlite_features(t, scene);
  CHECK(f[1] <= std::numbers::pi / 2 + 1e-12);
}

TEST_CASE("arm sampling is seeded and stays in the workspace") {
  const ArmScene scene;
  const auto a = armlite_sample(scene, 40, 9);
  const auto b = armlite_sample(scene, 40, 9);
  const auto c = armlite_sample(scene, 40, 10);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  for (const auto& t : a) {
    CHECK(t.width() == arm::kInputWidth);
    for (std::size_t s = 0; s < arm::kStates; ++s)
      for (int k = 0; k < 3; ++k) {
        CHECK(t.state(s)[k] >= scene.box_min[k]);
        CHECK(t.state(s)[k] <= scene.box_max[k]);
      }
    for (double v : armlite_features(t, scene)) CHECK(std::isfinite(v));
  }
  CHECK_THROWS_AS(armlite_sample(scene, 0, 1), ConfigError);
}

TEST_CASE("scene files round trip") {
  sirl::testing::TempDir dir("scene");
  Scene s = default_scene(EnvId::kArmLite);
  s.arm.human_xy = {0.7, -0.1};
  save_scene(dir / "scene.json", s);
  CHECK(load_scene(dir / "scene.json") == s);
  Scene g = default_scene(EnvId::kGridRobot);
  g.grid.laptop = {4, 1};
  save_scene(dir / "grid.json", g);
  CHECK(load_scene(dir / "grid.json") == g);
}

TEST_CASE("datasets round trip through disk") {
  sirl::testing::TempDir dir("dataset");
  const Dataset d = build_dataset(default_scene(EnvId::kArmLite), 25, 4);
  save_dataset(dir / "pool", d);
  const Dataset e = load_dataset(dir / "pool");
  CHECK(e.trajectories == d.trajectories);
  CHECK(e.features == d.features);
  CHECK(e.raw_features == d.raw_features);
  CHECK(e.scene == d.scene);
  CHECK(dataset_digest(e) == dataset_digest(d));
  CHECK_THROWS_AS(load_dataset(dir / "missing"), DataError);
}
