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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scriptmatch/domain.hpp"

namespace scriptmatch {

// Row-major dense matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }

  bool operator==(const Matrix&) const = default;
};

struct Hyper {
  double lambda_gamma = 1.0;
  double lambda_delta = 1.0;
  double alpha_lower = 0.9;
  double alpha_upper = 0.9;
  double tau = 0.5;
  double lambda_ipl = 1.0;
  double lambda_csc = 0.5;
  double lambda_align = 0.5;
  double eps = 1e-8;
  double kappa = 4.0;  // cosine scale in slot compatibility

  bool operator==(const Hyper&) const = default;
};

// Learnable state plus the (non-learnable) hyperparameters. Also used as the
// gradient accumulator, in which case `hyper` is ignored.
struct ModelParams {
  ModelShape shape;
  PerSlot<Matrix> script_head;                   // W_pi^k: V_k x D_t
  PerSlot<std::vector<double>> reliability_head; // w_rho^k: D_t
  PerSlot<Matrix> token_weight;                  // A^k: D_s x |mask_k|
  PerSlot<std::vector<double>> token_bias;       // b^k: D_s
  PerSlot<Matrix> state_proj;                    // W_s^k: D_m x D_s
  PerSlot<Matrix> script_proj;                   // U_pi^k: D_m x V_k
  PerSlot<double> conflict_weight{};             // w_Delta
  double conflict_bias = 0.0;                    // b_Delta
  Matrix base_bilinear;                          // B: D_pair x D_t
  Hyper hyper;

  bool operator==(const ModelParams&) const = default;
};

ModelParams zero_params(const ModelShape& shape, const Hyper& hyper = {});

// Visits every learnable block in flattening order:
//   script_head[k], reliability_head[k], token_weight[k], token_bias[k],
//   state_proj[k], script_proj[k] (each for k in slot order), conflict_weight,
//   conflict_bias, base_bilinear.
// Hyperparameters are not part of the flat vector.
template <class P, class F>
void visit_blocks(P& params, F&& fn) {
  auto name = [](const char* base, int k) {
    return std::string(base) + "[" + std::string(slot_name(kAllSlots[k])) + "]";
  };
  for (int k = 0; k < kNumSlots; ++k) {
    auto& m = params.script_head[k];
    fn(name("script_head", k), std::span(m.data.data(), m.data.size()));
  }
  for (int k = 0; k < kNumSlots; ++k) {
    auto& v = params.reliability_head[k];
    fn(name("reliability_head", k), std::span(v.data(), v.size()));
  }
  for (int k = 0; k < kNumSlots; ++k) {
    auto& m = params.token_weight[k];
    fn(name("token_weight", k), std::span(m.data.data(), m.data.size()));
  }
  for (int k = 0; k < kNumSlots; ++k) {
    auto& v = params.token_bias[k];
    fn(name("token_bias", k), std::span(v.data(), v.size()));
  }
  for (int k = 0; k < kNumSlots; ++k) {
    auto& m = params.state_proj[k];
    fn(name("state_proj", k), std::span(m.data.data(), m.data.size()));
  }
  for (int k = 0; k < kNumSlots; ++k) {
    auto& m = params.script_proj[k];
    fn(name("script_proj", k), std::span(m.data.data(), m.data.size()));
  }
  fn(std::string("conflict_weight"),
     std::span(params.conflict_weight.data(), params.conflict_weight.size()));
  fn(std::string("conflict_bias"), std::span(&params.conflict_bias, 1));
  fn(std::string("base_bilinear"),
     std::span(params.base_bilinear.data.data(), params.base_bilinear.data.size()));
}

struct ParamField {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

std::vector<ParamField> param_layout(const ModelShape& shape);
std::size_t param_count(const ModelShape& shape);

std::vector<double> flatten_params(const ModelParams& params);
// Throws std::invalid_argument when flat.size() != param_count(params.shape).
void unflatten_params(std::span<const double> flat, ModelParams& params);

// Name of the block owning a flat coordinate, e.g. "token_weight[contact]".
std::string field_at(const ModelShape& shape, std::size_t flat_index);

// params += alpha * other (learnable blocks only)
void add_scaled(ModelParams& params, double alpha, const ModelParams& other);
void set_zero(ModelParams& params);

}  // namespace scriptmatch
