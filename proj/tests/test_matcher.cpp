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

#include <cmath>

#include "oracles.hpp"
#include "scriptmatch/matcher.hpp"
#include "scriptmatch/script_bank.hpp"
#include "scriptmatch/selfcheck.hpp"
#include "scriptmatch/tokenizer.hpp"

using namespace scriptmatch;

namespace {

PerSlot<double> logit_of(PerSlot<double> probs) {
  for (double& p : probs) p = std::log(p / (1.0 - p));
  return probs;
}

}  // namespace

TEST(Coverage, EqualSlotsGiveTheirCommonValue) {
  PerSlot<double> m{}, rho;
  rho.fill(0.7);
  EXPECT_NEAR(coverage(m, rho, 1e-8), 0.5, 1e-7);
}

TEST(Coverage, SingleEffectiveSlot) {
  const PerSlot<double> m = logit_of({0.9, 0.5, 0.5, 0.5, 0.5, 0.5});
  const PerSlot<double> rho = {1, 1e-12, 1e-12, 1e-12, 1e-12, 1e-12};
  EXPECT_NEAR(coverage(m, rho, 1e-8), 0.9, 1e-6);
}

TEST(Coverage, TwoSlotGeometricMean) {
  const PerSlot<double> m = logit_of({0.9, 0.1, 0.5, 0.5, 0.5, 0.5});
  const PerSlot<double> rho = {1, 1, 0, 0, 0, 0};
  EXPECT_NEAR(coverage(m, rho, 1e-8), 0.3, 1e-7);
}

TEST(Conflict, ZeroResidualsGiveBiasOnly) {
  PerSlot<double> m, rho, w;
  m.fill(1e3);
  rho.fill(0.8);
  w.fill(1.0);
  EXPECT_NEAR(conflict(m, rho, w, -2.0), 0.11920292202211755, 1e-12);
}

TEST(Conflict, ZeroWeightsGiveOneHalf) {
  PerSlot<double> m = {3, -2, 0, 1, 5, -7}, rho = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, w{};
  EXPECT_DOUBLE_EQ(conflict(m, rho, w, 0.0), 0.5);
}

TEST(Conflict, UnitWeightsHalfResiduals) {
  PerSlot<double> m{}, rho, w;
  rho.fill(1.0);
  w.fill(1.0);
  EXPECT_NEAR(conflict(m, rho, w, -2.0), 0.7310585786300049, 1e-12);
}

TEST(Calibrate, Examples) {
  Hyper h;
  EXPECT_NEAR(calibrate(0.0, 1.0, 0.0, h), 0.0, 1e-7);
  Hyper off = h;
  off.lambda_gamma = off.lambda_delta = 0.0;
  EXPECT_DOUBLE_EQ(calibrate(2.5, 0.2, 0.9, off), 2.5);
  Hyper two = h;
  two.lambda_delta = 2.0;
  EXPECT_NEAR(calibrate(1.0, 0.3, 0.7311, two), -1.6662, 5e-5);
}

TEST(SlotCompat, IdenticalAndOrthogonalProjections) {
  Matrix eye(2, 2);
  eye(0, 0) = eye(1, 1) = 1.0;
  const std::vector<double> a = {0.3, 0.4}, b = {0.6, 0.8}, c = {-0.8, 0.6};
  EXPECT_NEAR(slot_compat_one(a, b, eye, eye, 4.0), 4.0, 1e-12);
  EXPECT_NEAR(slot_compat_one(a, c, eye, eye, 4.0), 0.0, 1e-12);
  const std::vector<double> zero = {0.0, 0.0};
  EXPECT_EQ(slot_compat_one(zero, b, eye, eye, 4.0), 0.0);
}

TEST(BaseLogit, ZeroMatrixAndNegatedText) {
  Rng rng(5);
  const ModelShape shape = oracle::small_shape();
  ModelParams p = oracle::random_params(rng, shape);
  const auto x = oracle::descriptor(rng, shape);
  auto t = oracle::unit(rng, shape.dims.text);
  const double s = base_logit_flat(x, t, p);
  for (double& v : t) v = -v;
  EXPECT_NEAR(base_logit_flat(x, t, p), -s, 1e-12);
  p.base_bilinear.data.assign(p.base_bilinear.data.size(), 0.0);
  EXPECT_EQ(base_logit_flat(x, t, p), 0.0);
}

TEST(BaseLogit, ContextOnlyEntersTheBaseScore) {
  Rng rng(6);
  const ModelShape shape = oracle::small_shape();
  const ModelParams p = oracle::random_params(rng, shape);
  auto x = oracle::descriptor(rng, shape);
  const auto t = oracle::unit(rng, shape.dims.text);
  const CandidateTrace a = trace_candidate(x, t, nullptr, p);
  x[field_offset(shape, DescriptorField::kContext)] += 1.0;
  const CandidateTrace b = trace_candidate(x, t, nullptr, p);
  EXPECT_EQ(a.m, b.m);
  EXPECT_EQ(a.gamma, b.gamma);
  EXPECT_NE(a.s_base, b.s_base);
}

TEST(ScoreCandidate, MatchesComposedOracle) {
  Rng rng(7);
  const ModelShape shape = oracle::small_shape();
  for (int trial = 0; trial < 100; ++trial) {
    const ModelParams p = oracle::random_params(rng, shape);
    const auto x = oracle::descriptor(rng, shape);
    const auto t = oracle::unit(rng, shape.dims.text);
    const int dropped = trial % 7 - 1;
    ScoreOptions opt;
    opt.dropped_slot = dropped;
    const CandidateTrace tr = trace_candidate(x, t, nullptr, p, opt);
    const oracle::Forward f = oracle::forward(x, t, oracle::derive(t, p), p, dropped);
    for (int k = 0; k < kNumSlots; ++k) EXPECT_NEAR(tr.m[k], f.m[k], 1e-9);
    EXPECT_NEAR(tr.gamma, f.gamma, 1e-9);
    EXPECT_NEAR(tr.delta, f.delta, 1e-9);
    EXPECT_NEAR(tr.s_base, f.s, 1e-9);
    EXPECT_NEAR(tr.s_hat, f.s_hat, 1e-9);
  }
}

TEST(ScoreCandidate, DroppedSlotHasNoInfluence) {
  Rng rng(8);
  const ModelShape shape = oracle::small_shape();
  const ModelParams p = oracle::random_params(rng, shape);
  const auto t = oracle::unit(rng, shape.dims.text);
  ScoreOptions opt;
  opt.dropped_slot = slot_index(Slot::kGeometry);
  auto x = oracle::descriptor(rng, shape);
  const CandidateTrace a = trace_candidate(x, t, nullptr, p, opt);
  // Geometry-only fields feed no other slot.
  const int g = field_offset(shape, DescriptorField::kGeometry);
  x[g + kOffsetX] += 2.0;
  x[g + kIou] -= 1.0;
  const CandidateTrace b = trace_candidate(x, t, nullptr, p, opt);
  EXPECT_NEAR(a.gamma, b.gamma, 1e-15);
  EXPECT_NEAR(a.delta, b.delta, 1e-15);
}

TEST(ScoreCandidate, CalibrationDisabledIsBaseline) {
  Rng rng(9);
  const ModelShape shape = oracle::small_shape();
  ModelParams p = oracle::random_params(rng, shape);
  p.hyper.lambda_gamma = p.hyper.lambda_delta = 0.0;
  const auto x = oracle::descriptor(rng, shape);
  const auto t = oracle::unit(rng, shape.dims.text);
  const CandidateTrace tr = trace_candidate(x, t, nullptr, p);
  EXPECT_EQ(tr.s_hat, tr.s_base);
}

TEST(MatcherProperties, GammaMonotone) {
  EXPECT_EQ(check_gamma_monotonicity(10000, 1).violations, 0);
}

TEST(MatcherProperties, DeltaAntimonotone) {
  EXPECT_EQ(check_delta_antimonotonicity(10000, 2).violations, 0);
}

TEST(MatcherProperties, CalibrationOrdering) {
  EXPECT_EQ(check_calibration_ordering(10000, 3).violations, 0);
}

TEST(MatcherProperties, CalibrationOrderingCatchesFlippedConflict) {
  ScoreOptions fault;
  fault.flip_conflict_sign = true;
  EXPECT_GT(check_calibration_ordering(1000, 3, fault).violations, 0);
}

TEST(MatcherProperties, PermutationInvariant) {
  EXPECT_EQ(check_permutation_invariance(10000, 4).violations, 0);
}

TEST(MatcherProperties, Bounds) { EXPECT_EQ(check_match_bounds(10000, 5).violations, 0); }

TEST(MatcherProperties, MonotoneAgainstOracle) {
  // Same property evaluated on the straight-line oracle, as a cross-check of
  // the property harness itself.
  Rng rng(10);
  for (int i = 0; i < 2000; ++i) {
    PerSlot<double> m, rho, w;
    for (int k = 0; k < 6; ++k) {
      m[k] = rng.uniform(-6, 6);
      rho[k] = rng.uniform();
      w[k] = rng.uniform(0, 4);
    }
    auto m2 = m;
    m2[rng.below(6)] += rng.uniform(0, 3);
    EXPECT_GE(oracle::coverage(m2, rho, 1e-8), oracle::coverage(m, rho, 1e-8));
    EXPECT_LE(oracle::conflict(m2, rho, w, -1.0), oracle::conflict(m, rho, w, -1.0));
  }
}
