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

#ifndef SIRL_MANIFEST_HPP_
#define SIRL_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sirl {

// Ordered `key = value` text file. Used for checkpoint, dataset and run
// manifests. Keys may not contain '=' and values may not contain newlines.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

  bool contains(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;

  // Throw DataError when the key is absent or malformed.
  std::string require(const std::string& key) const;
  double require_double(const std::string& key) const;
  std::int64_t require_int(const std::string& key) const;
  std::uint64_t require_uint(const std::string& key) const;
  bool require_bool(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string to_string() const;
  static Manifest parse(const std::string& text);

  void write(const std::filesystem::path& path) const;
  static Manifest read(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);
double parse_double(const std::string& text);

// Little-endian IEEE-754 binary64 arrays.
void write_doubles_le(std::ostream& out, std::span<const double> values);
std::vector<double> read_doubles_le(std::istream& in, std::size_t count);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace sirl

#endif  // SIRL_MANIFEST_HPP_
