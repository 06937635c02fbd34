// Copyright 2026 The scriptmatch Authors.
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

#include "scriptmatch/params.hpp"

#include <stdexcept>

#include "scriptmatch/tokenizer.hpp"

namespace scriptmatch {

ModelParams zero_params(const ModelShape& shape, const Hyper& hyper) {
  ModelParams p;
  p.shape = shape;
  p.hyper = hyper;
  const Dims& d = shape.dims;
  for (Slot s : kAllSlots) {
    const int k = slot_index(s);
    const int values = shape.vocab.size(s);
    p.script_head[k] = Matrix(values, d.text);
    p.reliability_head[k].assign(d.text, 0.0);
    p.token_weight[k] = Matrix(d.state, input_width(shape, s));
    p.token_bias[k].assign(d.state, 0.0);
    p.state_proj[k] = Matrix(d.match, d.state);
    p.script_proj[k] = Matrix(d.match, values);
  }
  p.conflict_weight.fill(0.0);
  p.conflict_bias = 0.0;
  p.base_bilinear = Matrix(shape.pair_embed_size(), d.text);
  return p;
}

std::vector<ParamField> param_layout(const ModelShape& shape) {
  ModelParams p = zero_params(shape);
  std::vector<ParamField> out;
  std::size_t offset = 0;
  visit_blocks(p, [&](const std::string& name, std::span<double> block) {
    out.push_back({name, offset, block.size()});
    offset += block.size();
  });
  return out;
}

std::size_t param_count(const ModelShape& shape) {
  const auto layout = param_layout(shape);
  return layout.back().offset + layout.back().size;
}

std::vector<double> flatten_params(const ModelParams& params) {
  std::vector<double> flat;
  visit_blocks(params, [&](const std::string&, std::span<const double> block) {
    flat.insert(flat.end(), block.begin(), block.end());
  });
  return flat;
}

void unflatten_params(std::span<const double> flat, ModelParams& params) {
  std::size_t expected = 0;
  visit_blocks(params, [&](const std::string&, std::span<double> block) {
    expected += block.size();
  });
  if (flat.size() != expected)
    throw std::invalid_argument("unflatten_params: expected " + std::to_string(expected) +
                                " values, got " + std::to_string(flat.size()));
  std::size_t offset = 0;
  visit_blocks(params, [&](const std::string&, std::span<double> block) {
    for (double& v : block) v = flat[offset++];
  });
}

std::string field_at(const ModelShape& shape, std::size_t flat_index) {
  for (const auto& f : param_layout(shape))
    if (flat_index >= f.offset && flat_index < f.offset + f.size) return f.name;
  return "out-of-range";
}

void add_scaled(ModelParams& params, double alpha, const ModelParams& other) {
  std::vector<std::span<const double>> src;
  visit_blocks(other, [&](const std::string&, std::span<const double> b) { src.push_back(b); });
  std::size_t i = 0;
  visit_blocks(params, [&](const std::string&, std::span<double> b) {
    const auto& s = src[i++];
    for (std::size_t j = 0; j < b.size(); ++j) b[j] += alpha * s[j];
  });
}

void set_zero(ModelParams& params) {
  visit_blocks(params, [](const std::string&, std::span<double> b) {
    for (double& v : b) v = 0.0;
  });
}

}  // namespace scriptmatch
