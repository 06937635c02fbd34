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

#include <span>
#include <string_view>
#include <vector>

#include "scriptmatch/domain.hpp"
#include "scriptmatch/params.hpp"

namespace scriptmatch {

// Fields of the flat descriptor, in layout order.
enum class DescriptorField { kHuman, kObject, kUnion, kPose, kGeometry, kPart, kContext, kCategory };

std::string_view field_name(DescriptorField f);
int field_offset(const ModelShape& shape, DescriptorField f);
int field_size(const ModelShape& shape, DescriptorField f);

struct FieldRef {
  DescriptorField field;
  std::vector<int> components;  // empty: whole field

  bool operator==(const FieldRef&) const = default;
};

// Fixed per-slot input sets:
//   body        pose, body parts
//   contact     hand/head distances, body parts, union region
//   geometry    all geometry components
//   affordance  object appearance, category one-hot
//   motion      pose, human appearance
//   state       object appearance, union region
// Context feeds no slot; it only enters the base scorer.
// Throws std::invalid_argument for an out-of-range slot.
std::vector<FieldRef> input_mask(Slot slot);

// Flat-descriptor indices read by a slot, ascending.
std::vector<int> input_indices(const ModelShape& shape, Slot slot);
int input_width(const ModelShape& shape, Slot slot);

// Concatenates the descriptor fields and appends the category one-hot.
// Throws std::invalid_argument on a size mismatch or unknown category.
std::vector<double> flatten_descriptor(const PairDescriptor& x, const ModelShape& shape);

StateTokens tokenize(const PairDescriptor& x, const ModelParams& params);
StateTokens tokenize_flat(std::span<const double> x, const ModelParams& params);

// Reverse pass of tokenize_flat. Adds dL/dA^k and dL/db^k into `grad` and,
// when grad_x is non-empty, dL/dx into grad_x.
void tokenize_backward(std::span<const double> x, const StateTokens& grad_tokens,
                       const ModelParams& params, ModelParams& grad,
                       std::span<double> grad_x = {});

}  // namespace scriptmatch
