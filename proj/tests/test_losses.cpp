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
#include <limits>

#include "oracles.hpp"
#include "scriptmatch/error.hpp"
#include "scriptmatch/losses.hpp"
#include "scriptmatch/selfcheck.hpp"

using namespace scriptmatch;

namespace {

// Two orthonormal phrases and a model whose calibrated logit is exactly the
// first descriptor entry when the phrase is e0 (and 0 for e1).
struct Controlled {
  ModelShape shape = oracle::small_shape();
  ModelParams params;
  ScriptBank bank;

  Controlled() {
    params = zero_params(shape);
    params.hyper.lambda_gamma = 0.0;
    params.hyper.lambda_delta = 0.0;
    for (int c = 0; c < shape.dims.text; ++c) params.base_bilinear(0, c) = c == 0 ? 1.0 : 0.0;
    std::vector<Phrase> ph(2);
    for (int i = 0; i < 2; ++i) {
      ph[i].id = i;
      ph[i].verb = i == 0 ? "hold" : "kick";
      ph[i].object_category = "cup";
      ph[i].text = ph[i].verb + " cup";
      ph[i].embedding.assign(shape.dims.text, 0.0);
      ph[i].embedding[i] = 1.0;
    }
    bank = ScriptBank(ph, {}, 1, 0);
    bank.refresh(params);
  }

  Candidate candidate(double s_hat, int label, int phrase = 0) const {
    Candidate c;
    std::vector<double> x(shape.descriptor_size(), 0.0);
    x[0] = s_hat;
    x[field_offset(shape, DescriptorField::kCategory)] = 1.0;
    c.x = std::make_shared<std::vector<double>>(x);
    c.phrase = phrase;
    c.label = label;
    return c;
  }
};

double dshat(const Controlled& f, const Batch& b, const Objective& o = {}) {
  // B(0, 0) multiplies x[0] * t[0], so its gradient is dL/ds_hat * x[0].
  const double x0 = (*b.items.at(0).x)[0];
  return grad_total(b, f.bank, f.params, o).grad[param_layout(f.shape).back().offset] / x0;
}

}  // namespace

TEST(LossHoi, Examples) {
  Controlled f;
  Batch b;
  b.items = {f.candidate(0.0, 1)};
  EXPECT_NEAR(loss_hoi(b, f.bank, f.params), std::log(2.0), 1e-12);
  b.items = {f.candidate(1.0, 1), f.candidate(-1.0, 1)};
  EXPECT_NEAR(loss_hoi(b, f.bank, f.params), 0.8132616875182228, 1e-12);
  b.items = {f.candidate(40.0, 1)};
  EXPECT_LT(loss_hoi(b, f.bank, f.params), 1e-15);
  b.items = {f.candidate(3.0, 0)};
  EXPECT_EQ(loss_hoi(b, f.bank, f.params), 0.0);
}

TEST(IntervalBounds, Examples) {
  Hyper h;
  auto b = interval_bounds(1.0, 0.0, h);
  EXPECT_DOUBLE_EQ(b.lower, 0.9);
  EXPECT_DOUBLE_EQ(b.upper, 1.0);
  b = interval_bounds(0.0, 1.0, h);
  EXPECT_DOUBLE_EQ(b.lower, 0.0);
  EXPECT_NEAR(b.upper, 0.1, 1e-15);
  b = interval_bounds(0.5, 0.5, h);
  EXPECT_NEAR(b.lower, 0.225, 1e-15);
  EXPECT_NEAR(b.upper, 0.775, 1e-15);
  // Coverage slightly above 1 (the epsilon slack) is clamped.
  b = interval_bounds(1.0 + 1e-9, 0.0, h);
  EXPECT_DOUBLE_EQ(b.lower, 0.9);
}

TEST(IntervalBounds, OrderedOnGrid) {
  Rng rng(1);
  for (int a = 0; a < 200; ++a) {
    Hyper h;
    h.alpha_lower = rng.uniform();
    h.alpha_upper = rng.uniform();
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j <= 100; ++j) {
        const auto b = interval_bounds(i / 100.0, j / 100.0, h);
        ASSERT_LE(b.lower, b.upper);
      }
  }
}

TEST(LossIpl, HingeExample) {
  Controlled f;
  // gamma = 1 (all reliabilities 0 via an override), delta ~ 0, p = 0.5.
  Script flat;
  for (int k = 0; k < kNumSlots; ++k) {
    flat.dist[k].assign(f.shape.vocab.size(kAllSlots[k]), 1.0 / f.shape.vocab.size(kAllSlots[k]));
    flat.reliability[k] = 0.0;
  }
  ScriptBank bank(f.bank.phrases(), {{0, flat}}, 1, 0);
  ModelParams p = f.params;
  p.conflict_bias = -60.0;
  p.hyper.alpha_lower = 0.8;
  bank.refresh(p);
  Batch b;
  b.items = {f.candidate(0.0, 0)};
  EXPECT_NEAR(loss_ipl(b, bank, p), 0.09, 1e-12);
}

TEST(LossIpl, DisabledIntervalIsZero) {
  Rng rng(2);
  const ModelShape shape = oracle::small_shape();
  ModelParams p = oracle::random_params(rng, shape);
  p.hyper.alpha_lower = p.hyper.alpha_upper = 0.0;
  ScriptBank bank(oracle::phrases(rng, shape, 4), {}, 2, 0);
  bank.refresh(p);
  Batch b;
  for (int i = 0; i < 8; ++i) {
    Candidate c;
    c.x = std::make_shared<std::vector<double>>(oracle::descriptor(rng, shape));
    c.phrase = i % 4;
    b.items.push_back(c);
  }
  EXPECT_EQ(loss_ipl(b, bank, p), 0.0);
}

TEST(LossIpl, GradientSign) {
  Controlled f;
  f.params.conflict_bias = -60.0;  // delta ~ 0, gamma ~ 0.5 from zero compat
  const IntervalLabel bounds = interval_bounds(0.5, 0.0, f.params.hyper);
  Batch below;
  below.items = {f.candidate(-3.0, 0)};  // p = 0.047 < l = 0.45
  EXPECT_LT(dshat(f, below), 0.0);
  // Push u below p: strong conflict and low coverage.
  Controlled g;
  g.params.conflict_bias = 60.0;
  Batch b2;
  b2.items = {g.candidate(3.0, 0)};  // p = 0.95 > u ~ 0.55
  EXPECT_GT(dshat(g, b2), 0.0);
  EXPECT_GT(bounds.lower, 0.0);
}

TEST(LossCsc, Examples) {
  Controlled f;
  ModelParams p = f.params;
  p.hyper.tau = 1.0;
  Batch b;
  Candidate c = f.candidate(1.0, 1);
  c.counterfactuals = {Counterfactual{1, Slot::kBody, f.bank.script(1)}};
  b.items = {c};
  EXPECT_NEAR(loss_csc(b, f.bank, p), 0.31326168751822286, 1e-12);

  // All logits equal with four counterfactuals.
  Candidate d = f.candidate(0.0, 1);
  d.counterfactuals.clear();
  for (int i = 0; i < 4; ++i) {
    Counterfactual v{-1, kAllSlots[i], f.bank.script(0)};
    d.counterfactuals.push_back(v);
  }
  b.items = {d};
  for (double tau : {0.1, 0.5, 3.0}) {
    p.hyper.tau = tau;
    EXPECT_NEAR(loss_csc(b, f.bank, p), std::log(5.0), 1e-12);
  }
  // A dominant anchor drives the loss to zero.
  b.items = {f.candidate(60.0, 1)};
  b.items[0].counterfactuals = c.counterfactuals;
  p.hyper.tau = 1.0;
  EXPECT_LT(loss_csc(b, f.bank, p), 1e-20);
}

TEST(LossCsc, ObjectShortcutCarriesNoBaseGradient) {
  // Virtual counterfactuals share the anchor's object and text, hence its
  // base logit: the contrast cannot be solved through the base scorer.
  Rng rng(3);
  const ModelShape shape = oracle::small_shape();
  ModelParams p = oracle::random_params(rng, shape);
  p.hyper.lambda_ipl = 0.0;
  ScriptBank bank(oracle::phrases(rng, shape, 1), {}, 4, 0);
  bank.refresh(p);
  Batch b;
  Candidate c;
  c.x = std::make_shared<std::vector<double>>(oracle::descriptor(rng, shape));
  c.phrase = 0;
  c.label = 0;
  c.counterfactuals = bank.counterfactual_index(0);
  ASSERT_EQ(c.counterfactuals.size(), 4u);
  for (const auto& cf : c.counterfactuals) ASSERT_TRUE(cf.is_virtual());
  b.items = {c};
  const GradientResult g = grad_total(b, bank, p);
  ASSERT_GT(g.terms.csc, 0.0);
  const ParamField base = param_layout(shape).back();
  ASSERT_EQ(base.name, "base_bilinear");
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < base.size; ++i) worst = std::max(worst, std::abs(g.grad[base.offset + i]));
  for (double v : g.grad) scale = std::max(scale, std::abs(v));
  EXPECT_LT(worst, 1e-12 * std::max(1.0, scale));
  EXPECT_GT(scale, 1e-6);  // the slot path does receive signal
}

TEST(LossAlign, Examples) {
  Controlled f;
  Batch b;
  // gamma = sigma(0) = 0.5 on every slot, delta = sigma(0) = 0.5.
  b.items = {f.candidate(0.0, 1)};
  EXPECT_NEAR(loss_align(b, f.bank, f.params), 2.0 * std::log(2.0), 1e-6);
  b.items = {f.candidate(0.0, 0)};
  EXPECT_EQ(loss_align(b, f.bank, f.params), 0.0);
}

TEST(LossTotal, Composition) {
  Controlled f;
  Batch empty;
  EXPECT_EQ(loss_total(empty, f.bank, f.params), 0.0);

  Batch b;
  b.items = {f.candidate(0.7, 1), f.candidate(-0.4, 0), f.candidate(1.3, 0, 1)};
  b.items[0].counterfactuals = {Counterfactual{1, Slot::kBody, f.bank.script(1)}};
  ModelParams p = f.params;
  p.hyper.lambda_ipl = p.hyper.lambda_csc = p.hyper.lambda_align = 0.0;
  EXPECT_DOUBLE_EQ(loss_total(b, f.bank, p), loss_hoi(b, f.bank, p));
  p.hyper.lambda_ipl = p.hyper.lambda_csc = p.hyper.lambda_align = 1.0;
  const double sum = loss_hoi(b, f.bank, p) + loss_ipl(b, f.bank, p) + loss_csc(b, f.bank, p) +
                     loss_align(b, f.bank, p);
  EXPECT_NEAR(loss_total(b, f.bank, p), sum, 1e-14);
}

TEST(Losses, MatchStraightLineOracleOnRandomConfigurations) {
  Rng rng(4);
  const ModelShape shape = oracle::small_shape();
  for (int trial = 0; trial < 100; ++trial) {
    const ModelParams p = oracle::random_params(rng, shape, 0.7);
    ScriptBank bank(oracle::phrases(rng, shape, 5), {}, 3, trial);
    bank.refresh(p);
    Batch b;
    for (int i = 0; i < 7; ++i) {
      Candidate c;
      c.x = std::make_shared<std::vector<double>>(oracle::descriptor(rng, shape));
      c.phrase = rng.below(bank.size());
      c.label = rng.bernoulli(0.4) ? 1 : 0;
      b.items.push_back(c);
    }
    Objective o;
    o.anchor_threshold = rng.uniform(0, 0.6);
    o.closed_world = trial % 5 == 0;
    attach_counterfactuals(b, bank, p, o);

    std::vector<oracle::ScoredCandidate> scored;
    for (const auto& c : b.items) {
      const auto& t = bank.phrase(c.phrase).embedding;
      const oracle::Forward f = oracle::forward(*c.x, t, oracle::derive(t, p), p);
      oracle::ScoredCandidate sc{c.label, f.s_hat, f.gamma, f.delta, {}};
      for (const auto& cf : c.counterfactuals) {
        const auto& ct = cf.is_virtual() ? t : bank.phrase(cf.phrase_index).embedding;
        const Script s = cf.is_virtual() ? cf.script : oracle::derive(ct, p);
        sc.cf_s_hat.push_back(oracle::forward(*c.x, ct, s, p).s_hat);
      }
      scored.push_back(sc);
    }
    const oracle::Terms want = oracle::losses(scored, p.hyper, o.closed_world);
    const LossTerms got = loss_terms(b, bank, p, o);
    EXPECT_NEAR(got.hoi, want.hoi, 1e-9);
    EXPECT_NEAR(got.ipl, want.ipl, 1e-9);
    EXPECT_NEAR(got.csc, want.csc, 1e-9);
    EXPECT_NEAR(got.align, want.align, 1e-9);
    EXPECT_NEAR(got.total, want.total, 1e-9);
    EXPECT_GE(got.total, 0.0);
  }
}

TEST(Gradients, ThreeCompositionsMatchFiniteDifferences) {
  for (BatchKind kind :
       {BatchKind::kPositivesOnly, BatchKind::kUnannotatedOnly, BatchKind::kMixed}) {
    const GradFixture f = make_grad_fixture(kind, 17);
    const Objective o;
    const GradCheckReport r = check_gradients(f.batch, f.bank, f.params, o, 1e-5, 1e-4);
    EXPECT_TRUE(r.passed) << batch_kind_name(kind) << " " << to_json(r);
    if (kind == BatchKind::kMixed) {
      EXPECT_GT(r.terms.csc, 0.0);
    }
    if (kind != BatchKind::kPositivesOnly) {
      EXPECT_GT(r.terms.ipl, 0.0);
    }
  }
}

TEST(Gradients, NonDetachedBoundsAndClosedWorld) {
  Objective attached;
  attached.detach_interval_bounds = false;
  const GradFixture f = make_grad_fixture(BatchKind::kMixed, 23, attached);
  EXPECT_TRUE(check_gradients(f.batch, f.bank, f.params, attached).passed);
  Objective closed;
  closed.closed_world = true;
  EXPECT_TRUE(check_gradients(f.batch, f.bank, f.params, closed).passed);
  Objective drop;
  drop.score.dropped_slot = slot_index(Slot::kContact);
  EXPECT_TRUE(check_gradients(f.batch, f.bank, f.params, drop).passed);
}

TEST(Gradients, HandDerivedClosedForm) {
  // One positive, calibration off: dL/dB(r, c) = (sigma(s) - 1) pair_r t_c,
  // and the conflict bias enters only through the alignment term:
  // d/db [-log(1 - delta)] = delta.
  Controlled f;
  ModelParams p = f.params;
  p.hyper.lambda_align = 1.0;
  p.hyper.lambda_csc = 0.0;
  Batch b;
  b.items = {f.candidate(0.8, 1)};
  const GradientResult g = grad_total(b, f.bank, p);
  const double s = 0.8;
  const double sig = 1.0 / (1.0 + std::exp(-s));
  const ParamField base = param_layout(f.shape).back();
  EXPECT_NEAR(g.grad[base.offset], (sig - 1.0) * 0.8, 1e-12);
  // Only column 0 of row 0 sees a nonzero t_c * pair_r product.
  for (std::size_t i = 1; i < base.size; ++i) EXPECT_EQ(g.grad[base.offset + i], 0.0);
  std::size_t bias = 0;
  for (const auto& fld : param_layout(f.shape)) {
    if (fld.name == "conflict_bias") bias = fld.offset;
  }
  const double delta = 0.5;  // zero weights, zero bias
  EXPECT_NEAR(g.grad[bias], delta * (1.0 - delta) / (1.0 - delta + 1e-8), 1e-9);
}

TEST(Gradients, ZeroWhenNothingIsActive) {
  Controlled f;
  ModelParams p = f.params;
  p.hyper.lambda_ipl = p.hyper.lambda_csc = p.hyper.lambda_align = 0.0;
  Batch b;
  b.items = {f.candidate(0.3, 0), f.candidate(-2.0, 0)};
  for (double v : grad_total(b, f.bank, p).grad) EXPECT_EQ(v, 0.0);
}

TEST(Gradients, IndependentOfThreadCount) {
  const GradFixture f = make_grad_fixture(BatchKind::kMixed, 31);
  Batch big;
  for (int r = 0; r < 9; ++r)
    for (const auto& c : f.batch.items) big.items.push_back(c);
  const GradientResult one = grad_total(big, f.bank, f.params, {}, 1);
  for (int threads : {2, 3, 8}) {
    const GradientResult many = grad_total(big, f.bank, f.params, {}, threads);
    EXPECT_EQ(one.grad, many.grad);
    EXPECT_EQ(one.terms.total, many.terms.total);
  }
}

TEST(Gradients, NonFiniteIntermediateIsReported) {
  GradFixture f = make_grad_fixture(BatchKind::kPositivesOnly, 5);
  f.params.base_bilinear.data[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    grad_total(f.batch, f.bank, f.params);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("base_logit"), std::string::npos) << e.what();
  }
}

TEST(Gradients, FlippedConflictSignIsCaught) {
  Objective fault;
  fault.score.flip_conflict_sign = true;
  const GradFixture f = make_grad_fixture(BatchKind::kPositivesOnly, 3, fault);
  EXPECT_FALSE(check_gradients(f.batch, f.bank, f.params, fault).passed);
}

TEST(Gradients, TinyToleranceDocumentsFloatLimits) {
  const GradFixture f = make_grad_fixture(BatchKind::kMixed, 3);
  EXPECT_FALSE(check_gradients(f.batch, f.bank, f.params, {}, 1e-5, 1e-12).passed);
}
