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

#include "sirl/nn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "sirl/error.hpp"

namespace sirl::nn {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::pair<Eigen::Index, Eigen::Index> parse_shape(const std::string& s) {
  const auto parts = split(s, 'x');
  if (parts.size() != 2) throw DataError("malformed layer shape '" + s + "'");
  try {
    return {std::stoll(parts[0]), std::stoll(parts[1])};
  } catch (const std::exception&) {
    throw DataError("malformed layer shape '" + s + "'");
  }
}

std::string payload_checksum(const std::vector<std::pair<std::string, MlpParams>>& sections) {
  std::string digests;
  for (const auto& [name, params] : sections) digests += name + ':' + hex64(checksum(params)) + ';';
  return hex64(fnv1a64(digests));
}

}  // namespace

const MlpParams& Checkpoint::section(const std::string& name) const {
  for (const auto& [n, p] : sections) {
    if (n == name) return p;
  }
  throw DataError("checkpoint has no section '" + name + "'");
}

std::filesystem::path manifest_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".manifest");
}

std::filesystem::path payload_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".bin");
}

void save_checkpoint(const std::filesystem::path& stem, const Checkpoint& checkpoint) {
  Manifest m = checkpoint.manifest;
  std::string names;
  std::size_t total = 0;
  for (const auto& [name, params] : checkpoint.sections) {
    if (!names.empty()) names += ',';
    names += name;
    m.set(name + ".layers", params.layers.size());
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
      const Layer& l = params.layers[i];
      m.set(name + ".layer." + std::to_string(i),
            std::to_string(l.weight.rows()) + "x" + std::to_string(l.weight.cols()));
    }
    total += params.parameter_count();
  }
  m.set("sections", names);
  m.set("payload", payload_path(stem).filename().string());
  m.set("payload.doubles", total);
  m.set("payload.checksum", payload_checksum(checkpoint.sections));

  const auto bin = payload_path(stem);
  if (bin.has_parent_path()) std::filesystem::create_directories(bin.parent_path());
  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + bin.string());
  for (const auto& [name, params] : checkpoint.sections) {
    const auto flat = params.flatten();
    write_doubles_le(out, flat);
  }
  if (!out) throw DataError("failed writing " + bin.string());
  m.write(manifest_path(stem));
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  Checkpoint cp;
  cp.manifest = Manifest::read(manifest_path(stem));
  const auto bin = stem.parent_path() / cp.manifest.require("payload");
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint payload " + bin.string());

  std::size_t total = 0;
  for (const std::string& name : split(cp.manifest.require("sections"), ',')) {
    if (name.empty()) continue;
    MlpParams params;
    const auto layers = cp.manifest.require_uint(name + ".layers");
    for (std::uint64_t i = 0; i < layers; ++i) {
      auto [rows, cols] = parse_shape(cp.manifest.require(name + ".layer." + std::to_string(i)));
      if (!params.layers.empty() && params.layers.back().weight.cols() != rows)
        throw DataError("checkpoint layer shapes do not chain in section " + name);
      params.layers.push_back({Matrix::Zero(rows, cols), RowVector::Zero(cols)});
    }
    const auto values = read_doubles_le(in, params.parameter_count());
    params.assign_flat(values);
    total += params.parameter_count();
    cp.sections.emplace_back(name, std::move(params));
  }
  if (total != cp.manifest.require_uint("payload.doubles"))
    throw DataError("checkpoint payload size disagrees with its manifest");
  if (in.peek() != std::char_traits<char>::eof())
    throw DataError("checkpoint payload has trailing bytes");
  if (cp.manifest.contains("payload.checksum") &&
      cp.manifest.require("payload.checksum") != payload_checksum(cp.sections))
    throw DataError("checkpoint payload checksum mismatch in " + bin.string());
  return cp;
}

}  // namespace sirl::nn
