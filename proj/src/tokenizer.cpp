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

#include "scriptmatch/tokenizer.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>

#include "scriptmatch/kernels.hpp"

namespace scriptmatch {
namespace {

constexpr std::array<DescriptorField, 8> kFieldOrder = {
    DescriptorField::kHuman, DescriptorField::kObject, DescriptorField::kUnion,
    DescriptorField::kPose,  DescriptorField::kGeometry, DescriptorField::kPart,
    DescriptorField::kContext, DescriptorField::kCategory};

using LayoutKey = std::tuple<int, int, int, int, int, int>;

LayoutKey key_of(const ModelShape& shape) {
  const Dims& d = shape.dims;
  return {d.feature, d.pose, d.part, d.context, static_cast<int>(shape.categories.size()), d.state};
}

// Per-slot gather indices, cached per descriptor layout.
const PerSlot<std::vector<int>>& cached_indices(const ModelShape& shape) {
  thread_local std::map<LayoutKey, PerSlot<std::vector<int>>> cache;
  const LayoutKey key = key_of(shape);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  PerSlot<std::vector<int>> idx;
  for (Slot s : kAllSlots) {
    auto& out = idx[slot_index(s)];
    for (const FieldRef& ref : input_mask(s)) {
      const int off = field_offset(shape, ref.field);
      if (ref.components.empty()) {
        for (int i = 0; i < field_size(shape, ref.field); ++i) out.push_back(off + i);
      } else {
        for (int c : ref.components) out.push_back(off + c);
      }
    }
    std::sort(out.begin(), out.end());
  }
  return cache.emplace(key, std::move(idx)).first->second;
}

void append_checked(std::vector<double>& out, const std::vector<double>& field, int expected,
                    DescriptorField f) {
  if (static_cast<int>(field.size()) != expected)
    throw std::invalid_argument("descriptor field " + std::string(field_name(f)) + ": expected " +
                                std::to_string(expected) + " values, got " +
                                std::to_string(field.size()));
  out.insert(out.end(), field.begin(), field.end());
}

}  // namespace

std::string_view field_name(DescriptorField f) {
  switch (f) {
    case DescriptorField::kHuman:
      return "human";
    case DescriptorField::kObject:
      return "object";
    case DescriptorField::kUnion:
      return "union";
    case DescriptorField::kPose:
      return "pose";
    case DescriptorField::kGeometry:
      return "geometry";
    case DescriptorField::kPart:
      return "part";
    case DescriptorField::kContext:
      return "context";
    case DescriptorField::kCategory:
      return "category";
  }
  return "?";
}

int field_size(const ModelShape& shape, DescriptorField f) {
  const Dims& d = shape.dims;
  switch (f) {
    case DescriptorField::kHuman:
    case DescriptorField::kObject:
    case DescriptorField::kUnion:
      return d.feature;
    case DescriptorField::kPose:
      return d.pose;
    case DescriptorField::kGeometry:
      return Dims::kGeometry;
    case DescriptorField::kPart:
      return d.part;
    case DescriptorField::kContext:
      return d.context;
    case DescriptorField::kCategory:
      return static_cast<int>(shape.categories.size());
  }
  return 0;
}

int field_offset(const ModelShape& shape, DescriptorField f) {
  int off = 0;
  for (DescriptorField g : kFieldOrder) {
    if (g == f) return off;
    off += field_size(shape, g);
  }
  return off;
}

std::vector<FieldRef> input_mask(Slot slot) {
  using F = DescriptorField;
  switch (slot) {
    case Slot::kBody:
      return {{F::kPose, {}}, {F::kPart, {}}};
    case Slot::kContact:
      return {{F::kGeometry, {kHandDistance, kHeadDistance}}, {F::kPart, {}}, {F::kUnion, {}}};
    case Slot::kGeometry:
      return {{F::kGeometry, {}}};
    case Slot::kAffordance:
      return {{F::kObject, {}}, {F::kCategory, {}}};
    case Slot::kMotion:
      return {{F::kPose, {}}, {F::kHuman, {}}};
    case Slot::kState:
      return {{F::kObject, {}}, {F::kUnion, {}}};
  }
  throw std::invalid_argument("input_mask: unknown slot " +
                              std::to_string(static_cast<int>(slot)));
}

std::vector<int> input_indices(const ModelShape& shape, Slot slot) {
  if (slot_index(slot) < 0 || slot_index(slot) >= kNumSlots)
    throw std::invalid_argument("input_indices: unknown slot");
  return cached_indices(shape)[slot_index(slot)];
}

int input_width(const ModelShape& shape, Slot slot) {
  return static_cast<int>(cached_indices(shape)[slot_index(slot)].size());
}

std::vector<double> flatten_descriptor(const PairDescriptor& x, const ModelShape& shape) {
  const Dims& d = shape.dims;
  std::vector<double> out;
  out.reserve(shape.descriptor_size());
  append_checked(out, x.human, d.feature, DescriptorField::kHuman);
  append_checked(out, x.object, d.feature, DescriptorField::kObject);
  append_checked(out, x.union_region, d.feature, DescriptorField::kUnion);
  append_checked(out, x.pose, d.pose, DescriptorField::kPose);
  append_checked(out, x.geometry, Dims::kGeometry, DescriptorField::kGeometry);
  append_checked(out, x.part, d.part, DescriptorField::kPart);
  append_checked(out, x.context, d.context, DescriptorField::kContext);
  const int cat = shape.category_index(x.object_category);
  if (cat < 0) throw std::invalid_argument("unknown object category: " + x.object_category);
  for (int c = 0; c < static_cast<int>(shape.categories.size()); ++c)
    out.push_back(c == cat ? 1.0 : 0.0);
  return out;
}

StateTokens tokenize(const PairDescriptor& x, const ModelParams& params) {
  return tokenize_flat(flatten_descriptor(x, params.shape), params);
}

StateTokens tokenize_flat(std::span<const double> x, const ModelParams& params) {
  const ModelShape& shape = params.shape;
  if (static_cast<int>(x.size()) != shape.descriptor_size())
    throw std::invalid_argument("tokenize: descriptor has " + std::to_string(x.size()) +
                                " values, expected " + std::to_string(shape.descriptor_size()));
  const auto& indices = cached_indices(shape);
  const auto& kt = kernels::active();
  StateTokens out;
  std::vector<double> gathered;
  for (int k = 0; k < kNumSlots; ++k) {
    const auto& idx = indices[k];
    gathered.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) gathered[i] = x[idx[i]];
    const Matrix& a = params.token_weight[k];
    auto& token = out.token[k];
    token.resize(a.rows);
    kt.gemv(a.data.data(), a.rows, a.cols, gathered.data(), token.data());
    for (int r = 0; r < a.rows; ++r) token[r] += params.token_bias[k][r];
  }
  return out;
}

void tokenize_backward(std::span<const double> x, const StateTokens& grad_tokens,
                       const ModelParams& params, ModelParams& grad, std::span<double> grad_x) {
  const auto& indices = cached_indices(params.shape);
  const auto& kt = kernels::active();
  std::vector<double> gathered;
  std::vector<double> gin;
  for (int k = 0; k < kNumSlots; ++k) {
    const auto& idx = indices[k];
    const auto& g = grad_tokens.token[k];
    gathered.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) gathered[i] = x[idx[i]];
    Matrix& ga = grad.token_weight[k];
    kt.ger(1.0, g.data(), g.size(), gathered.data(), gathered.size(), ga.data.data());
    kt.axpy(1.0, g.data(), grad.token_bias[k].data(), g.size());
    if (!grad_x.empty()) {
      const Matrix& a = params.token_weight[k];
      gin.assign(idx.size(), 0.0);
      kt.gemv_t_acc(a.data.data(), a.rows, a.cols, g.data(), gin.data());
      for (std::size_t i = 0; i < idx.size(); ++i) grad_x[idx[i]] += gin[i];
    }
  }
}

}  // namespace scriptmatch
