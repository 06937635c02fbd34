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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "scriptmatch/tokenizer.hpp"

using namespace scriptmatch;

namespace {

std::set<DescriptorField> fields(Slot s) {
  std::set<DescriptorField> out;
  for (const auto& r : input_mask(s)) out.insert(r.field);
  return out;
}

}  // namespace

TEST(InputMask, DocumentedFieldSets) {
  using F = DescriptorField;
  EXPECT_EQ(fields(Slot::kContact), (std::set<F>{F::kGeometry, F::kPart, F::kUnion}));
  EXPECT_EQ(fields(Slot::kGeometry), (std::set<F>{F::kGeometry}));
  EXPECT_EQ(fields(Slot::kAffordance), (std::set<F>{F::kObject, F::kCategory}));
  EXPECT_EQ(fields(Slot::kBody), (std::set<F>{F::kPose, F::kPart}));
  EXPECT_EQ(fields(Slot::kMotion), (std::set<F>{F::kPose, F::kHuman}));
  EXPECT_EQ(fields(Slot::kState), (std::set<F>{F::kObject, F::kUnion}));
  for (Slot s : kAllSlots) EXPECT_FALSE(fields(s).count(F::kContext));
  // Contact reads only the distance components of the geometry field.
  for (const auto& r : input_mask(Slot::kContact)) {
    if (r.field == F::kGeometry) {
      EXPECT_EQ(r.components, (std::vector<int>{kHandDistance, kHeadDistance}));
    }
  }
  EXPECT_THROW(input_mask(static_cast<Slot>(9)), std::invalid_argument);
}

TEST(Tokenize, ZeroDescriptorZeroBias) {
  Rng rng(1);
  const ModelShape shape = oracle::small_shape();
  ModelParams p = oracle::random_params(rng, shape);
  for (auto& b : p.token_bias) std::fill(b.begin(), b.end(), 0.0);
  const std::vector<double> x(shape.descriptor_size(), 0.0);
  const StateTokens t = tokenize_flat(x, p);
  for (const auto& tok : t.token)
    for (double v : tok) EXPECT_EQ(v, 0.0);
}

TEST(Tokenize, PoseChangesOnlyBodyAndMotion) {
  Rng rng(2);
  const ModelShape shape = oracle::small_shape();
  const ModelParams p = oracle::random_params(rng, shape);
  auto x = oracle::descriptor(rng, shape);
  const StateTokens a = tokenize_flat(x, p);
  const int off = field_offset(shape, DescriptorField::kPose);
  for (int i = 0; i < shape.dims.pose; ++i) x[off + i] += 0.5 + i;
  const StateTokens b = tokenize_flat(x, p);
  for (Slot s : kAllSlots) {
    const bool reads_pose = s == Slot::kBody || s == Slot::kMotion;
    EXPECT_EQ(a.token[slot_index(s)] != b.token[slot_index(s)], reads_pose) << slot_name(s);
  }
}

TEST(Tokenize, MaskingInvariant) {
  Rng rng(3);
  const ModelShape shape = oracle::small_shape();
  const ModelParams p = oracle::random_params(rng, shape);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = oracle::descriptor(rng, shape);
    const StateTokens base = tokenize_flat(x, p);
    for (Slot s : kAllSlots) {
      const auto idx = input_indices(shape, s);
      auto y = x;
      for (int i = 0; i < shape.descriptor_size(); ++i)
        if (!std::binary_search(idx.begin(), idx.end(), i)) y[i] += rng.normal();
      EXPECT_EQ(tokenize_flat(y, p).token[slot_index(s)], base.token[slot_index(s)]);
    }
  }
}

TEST(Tokenize, MatchesMatrixVectorOracle) {
  Rng rng(4);
  const ModelShape shape = oracle::small_shape();
  const ModelParams p = oracle::random_params(rng, shape);
  const auto x = oracle::descriptor(rng, shape);
  const StateTokens t = tokenize_flat(x, p);
  for (int k = 0; k < kNumSlots; ++k) {
    const auto idx = input_indices(shape, kAllSlots[k]);
    ASSERT_EQ(static_cast<int>(idx.size()), p.token_weight[k].cols);
    for (int r = 0; r < p.token_weight[k].rows; ++r) {
      double acc = p.token_bias[k][r];
      for (std::size_t i = 0; i < idx.size(); ++i) acc += p.token_weight[k](r, i) * x[idx[i]];
      EXPECT_NEAR(t.token[k][r], acc, 1e-12);
    }
  }
}

TEST(Tokenize, DescriptorJacobianMatchesFiniteDifferences) {
  Rng rng(5);
  const ModelShape shape = oracle::small_shape();
  const ModelParams p = oracle::random_params(rng, shape);
  const auto x = oracle::descriptor(rng, shape);
  // Scalar objective: a fixed random linear read-out of all tokens.
  StateTokens read;
  for (int k = 0; k < kNumSlots; ++k) {
    read.token[k].resize(shape.dims.state);
    for (double& v : read.token[k]) v = rng.normal();
  }
  auto objective = [&](const std::vector<double>& xx) {
    const StateTokens t = tokenize_flat(xx, p);
    double acc = 0.0;
    for (int k = 0; k < kNumSlots; ++k)
      for (int r = 0; r < shape.dims.state; ++r) acc += read.token[k][r] * t.token[k][r];
    return acc;
  };
  ModelParams grad = zero_params(shape);
  std::vector<double> gx(x.size(), 0.0);
  tokenize_backward(x, read, p, grad, gx);
  const double h = 1e-5;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto up = x, down = x;
    up[i] += h;
    down[i] -= h;
    const double fd = (objective(up) - objective(down)) / (2 * h);
    const double rel = std::abs(fd - gx[i]) / std::max({std::abs(fd), std::abs(gx[i]), 1e-6});
    EXPECT_LT(rel, 1e-4) << "component " << i;
  }
}

TEST(Tokenize, SizeMismatchThrows) {
  Rng rng(6);
  const ModelShape shape = oracle::small_shape();
  const ModelParams p = oracle::random_params(rng, shape);
  EXPECT_THROW(tokenize_flat(std::vector<double>(3, 0.0), p), std::invalid_argument);
}

TEST(FlattenDescriptor, LayoutAndErrors) {
  const ModelShape shape = oracle::small_shape();
  PairDescriptor d;
  d.human.assign(3, 1.0);
  d.object.assign(3, 2.0);
  d.union_region.assign(3, 3.0);
  d.pose.assign(2, 4.0);
  d.geometry.assign(Dims::kGeometry, 5.0);
  d.part.assign(3, 6.0);
  d.context.assign(2, 7.0);
  d.object_category = "ball";
  const auto x = flatten_descriptor(d, shape);
  ASSERT_EQ(static_cast<int>(x.size()), shape.descriptor_size());
  EXPECT_EQ(x[field_offset(shape, DescriptorField::kContext)], 7.0);
  const int cat = field_offset(shape, DescriptorField::kCategory);
  EXPECT_EQ(x[cat + 0], 0.0);
  EXPECT_EQ(x[cat + 1], 1.0);
  d.object_category = "piano";
  EXPECT_THROW(flatten_descriptor(d, shape), std::invalid_argument);
  d.object_category = "cup";
  d.pose.pop_back();
  EXPECT_THROW(flatten_descriptor(d, shape), std::invalid_argument);
}
