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

#include "sirl/nn/mlp.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "sirl/error.hpp"
#include "sirl/random.hpp"

namespace sirl::nn {

std::size_t MlpParams::input_width() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.rows());
}

std::size_t MlpParams::output_width() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.cols());
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

MlpShape MlpParams::shape() const {
  MlpShape s;
  s.input = input_width();
  s.output = output_width();
  for (std::size_t i = 0; i + 1 < layers.size(); ++i)
    s.hidden.push_back(static_cast<std::size_t>(layers[i].weight.cols()));
  return s;
}

MlpParams MlpParams::zeros_like() const {
  MlpParams z;
  z.layers.reserve(layers.size());
  for (const Layer& l : layers) {
    z.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()),
                        RowVector::Zero(l.bias.size())});
  }
  return z;
}

MlpParams& MlpParams::operator+=(const MlpParams& other) {
  if (other.layers.size() != layers.size())
    throw DataError("parameter structures differ in depth");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight += other.layers[i].weight;
    layers[i].bias += other.layers[i].bias;
  }
  return *this;
}

MlpParams& MlpParams::operator*=(double scale) {
  for (Layer& l : layers) {
    l.weight *= scale;
    l.bias *= scale;
  }
  return *this;
}

std::vector<double> MlpParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const Layer& l : layers) {
    out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

void MlpParams::assign_flat(std::span<const double> values) {
  if (values.size() != parameter_count())
    throw DataError("flat parameter vector has the wrong length");
  std::size_t k = 0;
  for (Layer& l : layers) {
    std::copy_n(values.data() + k, l.weight.size(), l.weight.data());
    k += static_cast<std::size_t>(l.weight.size());
    std::copy_n(values.data() + k, l.bias.size(), l.bias.data());
    k += static_cast<std::size_t>(l.bias.size());
  }
}

bool MlpParams::all_finite() const {
  for (const Layer& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool MlpParams::operator==(const MlpParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& a = layers[i];
    const Layer& b = other.layers[i];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.bias.size() != b.bias.size())
      return false;
    if (a.weight != b.weight || a.bias != b.bias) return false;
  }
  return true;
}

MlpParams init_params(const MlpShape& shape, std::uint64_t seed) {
  std::vector<std::size_t> widths;
  widths.push_back(shape.input);
  widths.insert(widths.end(), shape.hidden.begin(), shape.hidden.end());
  widths.push_back(shape.output);
  for (std::size_t w : widths) {
    if (w == 0) throw ConfigError("layer widths must be positive");
  }

  Rng rng(seed);
  MlpParams params;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t fan_in = widths[i];
    const std::size_t fan_out = widths[i + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Layer layer{Matrix(fan_in, fan_out), RowVector::Zero(fan_out)};
    for (Eigen::Index k = 0; k < layer.weight.size(); ++k)
      layer.weight.data()[k] = rng.uniform(-bound, bound);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

namespace {

void check_input(const MlpParams& params, const Matrix& batch) {
  if (params.layers.empty()) throw DataError("network has no layers");
  if (static_cast<std::size_t>(batch.cols()) != params.input_width()) {
    std::ostringstream os;
    os << "input width " << batch.cols() << " does not match network input width "
       << params.input_width();
    throw DataError(os.str());
  }
}

}  // namespace

Matrix mlp_forward(const MlpParams& params, const Matrix& batch) {
  check_input(params, batch);
  Matrix x = batch;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const Layer& l = params.layers[i];
    Matrix z = x * l.weight;
    z.rowwise() += l.bias;
    if (i + 1 < params.layers.size()) z = z.cwiseMax(0.0);
    x = std::move(z);
  }
  return x;
}

ForwardTrace mlp_forward_traced(const MlpParams& params, const Matrix& batch) {
  check_input(params, batch);
  ForwardTrace trace;
  trace.layer_inputs.reserve(params.layers.size());
  trace.pre_activations.reserve(params.layers.size());
  Matrix x = batch;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const Layer& l = params.layers[i];
    Matrix z = x * l.weight;
    z.rowwise() += l.bias;
    trace.layer_inputs.push_back(std::move(x));
    if (i + 1 < params.layers.size()) {
      x = z.cwiseMax(0.0);
    } else {
      x = z;
    }
    trace.pre_activations.push_back(std::move(z));
  }
  trace.output = std::move(x);
  return trace;
}

Gradients mlp_backward(const MlpParams& params, const ForwardTrace& trace,
                       const Matrix& upstream, bool input_grad) {
  if (trace.layer_inputs.size() != params.layers.size())
    throw DataError("forward trace does not belong to these parameters");
  if (upstream.rows() != trace.output.rows() || upstream.cols() != trace.output.cols())
    throw DataError("upstream gradient shape does not match network output");

  Gradients g;
  g.params = params.zeros_like();
  Matrix delta = upstream;
  for (std::size_t i = params.layers.size(); i-- > 0;) {
    if (i + 1 < params.layers.size()) {
      // ReLU: gradient passes only where the pre-activation was positive.
      delta = (trace.pre_activations[i].array() > 0.0).select(delta, 0.0);
    }
    g.params.layers[i].weight.noalias() = trace.layer_inputs[i].transpose() * delta;
    g.params.layers[i].bias = delta.colwise().sum();
    if (i == 0 && !input_grad) {
      delta.resize(0, 0);
      break;
    }
    Matrix next = delta * params.layers[i].weight.transpose();
    delta = std::move(next);
  }
  g.input = std::move(delta);
  return g;
}

std::uint64_t checksum(const MlpParams& params) {
  // FNV-1a over the raw IEEE-754 bits.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : params.flatten()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace sirl::nn
