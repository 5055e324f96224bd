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

#include "sirl/env/dataset.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sirl/error.hpp"
#include "sirl/nn/checkpoint.hpp"

namespace sirl::env {

namespace {

using json = nlohmann::json;

std::string join(std::span<const double> values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += format_double(values[i]);
  }
  return s;
}

std::vector<double> split_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
  return out;
}

template <std::size_t N>
std::array<double, N> fixed(const std::vector<double>& v, const std::string& key) {
  if (v.size() != N) throw DataError("manifest key '" + key + "' has the wrong arity");
  std::array<double, N> a{};
  std::copy(v.begin(), v.end(), a.begin());
  return a;
}

Cell read_cell(const Manifest& m, const std::string& key) {
  const auto v = fixed<2>(split_doubles(m.require(key)), key);
  return {static_cast<int>(v[0]), static_cast<int>(v[1])};
}

void write_cell(Manifest& m, const std::string& key, const Cell& c) {
  m.set(key, std::to_string(c.x) + "," + std::to_string(c.y));
}

}  // namespace

Scene default_scene(EnvId env) {
  Scene s;
  s.env = env;
  return s;
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scene file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("scene file " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    Scene s = default_scene(parse_env(j.at("env").get<std::string>()));
    auto cell = [&](const char* key, Cell& c) {
      if (j.contains(key)) {
        auto v = j.at(key).get<std::array<int, 2>>();
        c = {v[0], v[1]};
      }
    };
    cell("obstacle1", s.grid.obstacle1);
    cell("obstacle2", s.grid.obstacle2);
    cell("laptop", s.grid.laptop);
    if (j.contains("box_min")) s.arm.box_min = j.at("box_min").get<std::array<double, 3>>();
    if (j.contains("box_max")) s.arm.box_max = j.at("box_max").get<std::array<double, 3>>();
    if (j.contains("table_z")) s.arm.table_z = j.at("table_z").get<double>();
    if (j.contains("laptop_xy")) s.arm.laptop_xy = j.at("laptop_xy").get<std::array<double, 2>>();
    if (j.contains("human_xy")) s.arm.human_xy = j.at("human_xy").get<std::array<double, 2>>();
    if (j.contains("human_facing")) s.arm.human_facing = j.at("human_facing").get<double>();
    if (j.contains("tilt_range")) {
      auto r = j.at("tilt_range").get<std::array<double, 2>>();
      s.arm.tilt_min = r[0];
      s.arm.tilt_max = r[1];
    }
    if (j.contains("front_scale")) s.arm.front_scale = j.at("front_scale").get<double>();
    if (j.contains("side_scale")) s.arm.side_scale = j.at("side_scale").get<double>();
    if (s.env == EnvId::kGridRobot) {
      s.grid.validate();
    } else {
      s.arm.validate();
    }
    return s;
  } catch (const json::exception& e) {
    throw ConfigError("scene file " + path.string() + ": " + e.what());
  } catch (const UsageError& e) {
    throw ConfigError(e.what());
  }
}

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  json j;
  j["env"] = to_string(scene.env);
  if (scene.env == EnvId::kGridRobot) {
    j["obstacle1"] = {scene.grid.obstacle1.x, scene.grid.obstacle1.y};
    j["obstacle2"] = {scene.grid.obstacle2.x, scene.grid.obstacle2.y};
    j["laptop"] = {scene.grid.laptop.x, scene.grid.laptop.y};
  } else {
    const ArmScene& a = scene.arm;
    j["box_min"] = a.box_min;
    j["box_max"] = a.box_max;
    j["table_z"] = a.table_z;
    j["laptop_xy"] = a.laptop_xy;
    j["human_xy"] = a.human_xy;
    j["human_facing"] = a.human_facing;
    j["tilt_range"] = {a.tilt_min, a.tilt_max};
    j["front_scale"] = a.front_scale;
    j["side_scale"] = a.side_scale;
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write scene file " + path.string());
  out << j.dump(2) << '\n';
}

FeatureVector compute_features(const Trajectory& trajectory, const Scene& scene) {
  if (trajectory.env != scene.env) throw DataError("trajectory and scene environments differ");
  return scene.env == EnvId::kGridRobot ? grid_features(trajectory, scene.grid)
                                        : armlite_features(trajectory, scene.arm);
}

FeatureNormalizer FeatureNormalizer::fit(std::span<const FeatureVector> pool) {
  if (pool.size() < 2) throw DataError("feature normalization needs at least two trajectories");
  FeatureNormalizer n;
  n.min = pool.front();
  n.max = pool.front();
  for (const FeatureVector& f : pool) {
    for (std::size_t d = 0; d < kFeatureCount; ++d) {
      n.min[d] = std::min(n.min[d], f[d]);
      n.max[d] = std::max(n.max[d], f[d]);
    }
  }
  for (std::size_t d = 0; d < kFeatureCount; ++d) n.degenerate[d] = !(n.max[d] > n.min[d]);
  return n;
}

FeatureVector FeatureNormalizer::apply(const FeatureVector& raw) const {
  FeatureVector out{};
  for (std::size_t d = 0; d < kFeatureCount; ++d)
    out[d] = degenerate[d] ? 0.0 : (raw[d] - min[d]) / (max[d] - min[d]);
  return out;
}

std::size_t Dataset::input_width() const {
  return trajectories.empty() ? 0 : trajectories.front().width();
}

Dataset build_dataset(const Scene& scene, std::size_t count, std::uint64_t seed,
                      const ArmSampleOptions& options) {
  Dataset ds;
  ds.scene = scene;
  ds.seed = seed;
  ds.trajectories = scene.env == EnvId::kGridRobot
                        ? grid_enumerate(scene.grid)
                        : armlite_sample(scene.arm, count, seed, options);
  ds.raw_features.reserve(ds.trajectories.size());
  for (const Trajectory& t : ds.trajectories) ds.raw_features.push_back(compute_features(t, scene));
  ds.normalizer = FeatureNormalizer::fit(ds.raw_features);
  ds.features.reserve(ds.raw_features.size());
  for (const FeatureVector& f : ds.raw_features) ds.features.push_back(ds.normalizer.apply(f));
  return ds;
}

void write_scene(Manifest& m, const Scene& scene) {
  m.set("env", to_string(scene.env));
  if (scene.env == EnvId::kGridRobot) {
    write_cell(m, "scene.obstacle1", scene.grid.obstacle1);
    write_cell(m, "scene.obstacle2", scene.grid.obstacle2);
    write_cell(m, "scene.laptop", scene.grid.laptop);
  } else {
    const ArmScene& a = scene.arm;
    m.set("scene.box_min", join(a.box_min));
    m.set("scene.box_max", join(a.box_max));
    m.set("scene.table_z", a.table_z);
    m.set("scene.laptop_xy", join(a.laptop_xy));
    m.set("scene.human_xy", join(a.human_xy));
    m.set("scene.human_facing", a.human_facing);
    m.set("scene.tilt_range", join(std::array<double, 2>{a.tilt_min, a.tilt_max}));
    m.set("scene.front_scale", a.front_scale);
    m.set("scene.side_scale", a.side_scale);
  }
}

Scene read_scene(const Manifest& m) {
  Scene s = default_scene(parse_env(m.require("env")));
  if (s.env == EnvId::kGridRobot) {
    s.grid.obstacle1 = read_cell(m, "scene.obstacle1");
    s.grid.obstacle2 = read_cell(m, "scene.obstacle2");
    s.grid.laptop = read_cell(m, "scene.laptop");
  } else {
    ArmScene& a = s.arm;
    a.box_min = fixed<3>(split_doubles(m.require("scene.box_min")), "scene.box_min");
    a.box_max = fixed<3>(split_doubles(m.require("scene.box_max")), "scene.box_max");
    a.table_z = m.require_double("scene.table_z");
    a.laptop_xy = fixed<2>(split_doubles(m.require("scene.laptop_xy")), "scene.laptop_xy");
    a.human_xy = fixed<2>(split_doubles(m.require("scene.human_xy")), "scene.human_xy");
    a.human_facing = m.require_double("scene.human_facing");
    const auto r = fixed<2>(split_doubles(m.require("scene.tilt_range")), "scene.tilt_range");
    a.tilt_min = r[0];
    a.tilt_max = r[1];
    a.front_scale = m.require_double("scene.front_scale");
    a.side_scale = m.require_double("scene.side_scale");
  }
  return s;
}

std::uint64_t dataset_digest(const Dataset& d) {
  std::uint64_t h = fnv1a64(to_string(d.env()));
  for (const auto& t : d.trajectories) {
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(t.input.data()),
                                 t.input.size() * sizeof(double)),
                h);
  }
  for (const auto& f : d.features) {
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(f.data()), f.size() * sizeof(double)),
                h);
  }
  return h;
}

void save_dataset(const std::filesystem::path& stem, const Dataset& ds) {
  if (ds.trajectories.empty()) throw DataError("refusing to save an empty dataset");
  Manifest m;
  m.set("format", "sirl-dataset-v1");
  write_scene(m, ds.scene);
  const Trajectory& first = ds.trajectories.front();
  m.set("horizon", first.num_states - 1);
  m.set("state_dim", first.state_dim);
  m.set("input_width", first.width());
  m.set("count", ds.trajectories.size());
  m.set("seed", ds.seed);
  m.set("normalizer.min", join(ds.normalizer.min));
  m.set("normalizer.max", join(ds.normalizer.max));
  std::string flags;
  for (std::size_t d = 0; d < kFeatureCount; ++d) flags += (d ? "," : "") + std::string(ds.normalizer.degenerate[d] ? "1" : "0");
  m.set("normalizer.degenerate", flags);
  m.set("payload", nn::payload_path(stem).filename().string());

  const auto bin = nn::payload_path(stem);
  if (bin.has_parent_path()) std::filesystem::create_directories(bin.parent_path());
  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + bin.string());
  for (const Trajectory& t : ds.trajectories) {
    if (t.width() != first.width()) throw DataError("dataset trajectories differ in width");
    write_doubles_le(out, t.input);
  }
  for (const FeatureVector& f : ds.raw_features) write_doubles_le(out, f);
  for (const FeatureVector& f : ds.features) write_doubles_le(out, f);
  if (!out) throw DataError("failed writing " + bin.string());
  m.write(nn::manifest_path(stem));
}

Dataset load_dataset(const std::filesystem::path& stem) {
  const Manifest m = Manifest::read(nn::manifest_path(stem));
  if (m.require("format") != "sirl-dataset-v1")
    throw DataError("unsupported dataset format " + m.require("format"));
  Dataset ds;
  ds.scene = read_scene(m);
  ds.seed = m.require_uint("seed");
  const std::size_t count = m.require_uint("count");
  const std::size_t width = m.require_uint("input_width");
  const std::size_t state_dim = m.require_uint("state_dim");
  const std::size_t num_states = m.require_uint("horizon") + 1;
  ds.normalizer.min = fixed<4>(split_doubles(m.require("normalizer.min")), "normalizer.min");
  ds.normalizer.max = fixed<4>(split_doubles(m.require("normalizer.max")), "normalizer.max");
  const auto flags = fixed<4>(split_doubles(m.require("normalizer.degenerate")), "normalizer.degenerate");
  for (std::size_t d = 0; d < kFeatureCount; ++d) ds.normalizer.degenerate[d] = flags[d] != 0.0;

  const auto bin = stem.parent_path() / m.require("payload");
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw DataError("cannot read dataset payload " + bin.string());
  const auto values = read_doubles_le(in, count * (width + 2 * kFeatureCount));
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("dataset payload has trailing bytes");

  std::size_t k = 0;
  for (std::size_t i = 0; i < count; ++i) {
    Trajectory t;
    t.env = ds.scene.env;
    t.num_states = num_states;
    t.state_dim = state_dim;
    t.input.assign(values.begin() + k, values.begin() + k + width);
    k += width;
    ds.trajectories.push_back(std::move(t));
  }
  for (auto* dest : {&ds.raw_features, &ds.features}) {
    for (std::size_t i = 0; i < count; ++i) {
      FeatureVector f{};
      std::copy_n(values.begin() + k, kFeatureCount, f.begin());
      k += kFeatureCount;
      dest->push_back(f);
    }
  }
  return ds;
}

}  // namespace sirl::env
