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

#include "scriptmatch/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "scriptmatch/config.hpp"
#include "scriptmatch/eval.hpp"
#include "scriptmatch/kernels.hpp"
#include "scriptmatch/rng.hpp"
#include "scriptmatch/tokenizer.hpp"
#include "scriptmatch/trainer.hpp"

namespace scriptmatch {
namespace {

using nlohmann::ordered_json;

PerSlot<double> random_slots(Rng& rng, double lo, double hi) {
  PerSlot<double> v{};
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

std::vector<double> random_unit(Rng& rng, int n) {
  std::vector<double> v(n);
  double norm = 0.0;
  for (double& x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

std::vector<double> random_descriptor(Rng& rng, const ModelShape& shape) {
  std::vector<double> x(shape.descriptor_size());
  for (double& v : x) v = rng.normal();
  const int off = field_offset(shape, DescriptorField::kCategory);
  const int n = field_size(shape, DescriptorField::kCategory);
  const int hot = rng.below(n);
  for (int c = 0; c < n; ++c) x[off + c] = c == hot ? 1.0 : 0.0;
  return x;
}

std::vector<Phrase> tiny_phrases(Rng& rng, const ModelShape& shape) {
  const char* verbs[] = {"hold", "lift", "hold", "kick", "lift"};
  std::vector<Phrase> phrases;
  for (int i = 0; i < 5; ++i) {
    Phrase p;
    p.id = i;
    p.verb = verbs[i];
    p.object_category = shape.categories[i % shape.categories.size()];
    p.text = p.verb + " " + p.object_category;
    p.embedding = random_unit(rng, shape.dims.text);
    phrases.push_back(std::move(p));
  }
  return phrases;
}

ModelParams random_params(const ModelShape& shape, std::uint64_t seed, double scale) {
  ModelParams p = init_params(shape, Hyper{}, seed);
  std::vector<double> flat = flatten_params(p);
  for (double& v : flat) v *= scale;
  unflatten_params(flat, p);
  p.conflict_bias = -2.0;
  return p;
}

ordered_json property_json(const PropertyResult& r) {
  return {{"draws", r.draws}, {"violations", r.violations}};
}

CheckItem property_item(const PropertyResult& r) {
  return {r.name, r.violations == 0 && r.draws > 0, property_json(r)};
}

// --- evaluator oracles --------------------------------------------------

// AP straight from the definition: every distinct score is a threshold; the
// prefix above it is matched greedily from scratch.
std::optional<double> brute_force_ap(const std::vector<RankedPrediction>& preds,
                                     const std::vector<GroundTruth>& truth, int phrase,
                                     double iou_thr) {
  std::vector<const GroundTruth*> gts;
  for (const auto& g : truth)
    if (g.phrase == phrase) gts.push_back(&g);
  if (gts.empty()) return std::nullopt;
  std::vector<const RankedPrediction*> mine;
  for (const auto& p : preds)
    if (p.phrase == phrase && !p.suppressed) mine.push_back(&p);
  std::stable_sort(mine.begin(), mine.end(), [](auto* a, auto* b) {
    if (a->score != b->score) return a->score > b->score;
    if (a->scene != b->scene) return a->scene < b->scene;
    return a->pair < b->pair;
  });
  std::vector<double> thresholds;
  for (auto* p : mine) thresholds.push_back(p->score);
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<std::pair<double, double>> curve;  // (recall, precision)
  for (double t : thresholds) {
    std::vector<bool> used(gts.size(), false);
    int tp = 0, n = 0;
    for (auto* p : mine) {
      if (p->score < t) break;
      ++n;
      int best = -1;
      double best_iou = iou_thr;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (used[g] || gts[g]->scene != p->scene) continue;
        const double o = std::min(iou(p->human, gts[g]->human), iou(p->object, gts[g]->object));
        if (o >= best_iou && (best < 0 || o > best_iou)) {
          best = static_cast<int>(g);
          best_iou = o;
        }
      }
      if (best >= 0) {
        used[best] = true;
        ++tp;
      }
    }
    curve.push_back({static_cast<double>(tp) / gts.size(), static_cast<double>(tp) / n});
  }
  double ap = 0.0, prev_recall = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    double best_prec = 0.0;
    for (std::size_t j = i; j < curve.size(); ++j) best_prec = std::max(best_prec, curve[j].second);
    ap += (curve[i].first - prev_recall) * best_prec;
    prev_recall = curve[i].first;
  }
  return ap;
}

// A kept set is correct iff every prediction is suppressed exactly when an
// earlier-ranked kept prediction of the same scene and pair duplicates it.
bool suppression_consistent(const std::vector<RankedPrediction>& out, const ScriptBank& bank,
                            const SuppressionThresholds& th) {
  for (std::size_t q = 0; q < out.size(); ++q) {
    bool dup = false;
    for (std::size_t p = 0; p < out.size(); ++p) {
      if (p == q || out[p].suppressed) continue;
      if (out[p].scene != out[q].scene || out[p].pair != out[q].pair) continue;
      if (!ranks_before(out[p], out[q])) continue;
      if (duplicates(out[p], out[q], bank, th)) dup = true;
    }
    if (dup != out[q].suppressed) return false;
  }
  return true;
}

Box random_box(Rng& rng) {
  const double x = rng.uniform(0, 80), y = rng.uniform(0, 80);
  return {x, y, x + rng.uniform(10, 40), y + rng.uniform(10, 40)};
}

Box jitter(Rng& rng, const Box& b, double amount) {
  return {b.x1 + rng.uniform(-amount, amount), b.y1 + rng.uniform(-amount, amount),
          b.x2 + rng.uniform(-amount, amount), b.y2 + rng.uniform(-amount, amount)};
}

CheckItem check_evaluator(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x6576616c));
  int fixtures = 0, ap_mismatch = 0, sup_mismatch = 0;
  double worst = 0.0;

  // Bank with paraphrase pairs so that suppression actually fires.
  ModelShape shape = tiny_shape();
  std::vector<Phrase> phrases = tiny_phrases(rng, shape);
  phrases[1].embedding = phrases[0].embedding;
  ModelParams params = random_params(shape, seed, 1.0);
  ScriptBank bank(phrases, {}, 2, seed);
  bank.refresh(params);

  for (int f = 0; f < 300; ++f) {
    const int n_scenes = 1 + rng.below(10);
    std::vector<GroundTruth> truth;
    std::vector<RankedPrediction> preds;
    const int n_preds = 1 + rng.below(30);
    for (int s = 0; s < n_scenes; ++s) {
      const int n_gt = rng.below(4);
      for (int g = 0; g < n_gt; ++g)
        truth.push_back({s, random_box(rng), random_box(rng), rng.below(3)});
    }
    for (int i = 0; i < n_preds; ++i) {
      RankedPrediction p;
      p.scene = rng.below(n_scenes);
      p.pair = rng.below(2);
      p.phrase = rng.below(3);
      // At most one prediction per (scene, pair, phrase).
      if (std::any_of(preds.begin(), preds.end(), [&](const RankedPrediction& q) {
            return q.scene == p.scene && q.pair == p.pair && q.phrase == p.phrase;
          }))
        continue;
      // Coarse scores produce ties.
      p.score = std::round(rng.uniform(0, 4)) / 4.0;
      std::vector<const GroundTruth*> here;
      for (const auto& g : truth)
        if (g.scene == p.scene) here.push_back(&g);
      if (!here.empty() && rng.bernoulli(0.7)) {
        const GroundTruth& g = *here[rng.below(static_cast<int>(here.size()))];
        p.human = jitter(rng, g.human, 6.0);
        p.object = jitter(rng, g.object, 6.0);
      } else {
        p.human = random_box(rng);
        p.object = random_box(rng);
      }
      for (double& m : p.match.compat) m = std::round(rng.uniform(-2, 2));
      preds.push_back(p);
    }
    ++fixtures;
    const SuppressionThresholds th;
    const auto out = rank_and_suppress(preds, bank, th);
    if (!suppression_consistent(out, bank, th)) ++sup_mismatch;
    for (int v = 0; v < 3; ++v) {
      const auto a = average_precision(out, truth, v, 0.5);
      const auto b = brute_force_ap(out, truth, v, 0.5);
      if (a.has_value() != b.has_value()) {
        ++ap_mismatch;
        continue;
      }
      if (a) {
        const double d = std::abs(*a - *b);
        worst = std::max(worst, d);
        if (d > 1e-12) ++ap_mismatch;
      }
    }
  }
  const double hm1 = harmonic_mean(32.6, 22.5), hm2 = harmonic_mean(30.7, 19.8);
  const bool hm_ok = std::abs(hm1 - 26.6) < 0.05 && std::abs(hm2 - 24.1) < 0.05 &&
                     harmonic_mean(0.0, 0.0) == 0.0;
  CheckItem item{"evaluator_oracles", ap_mismatch == 0 && sup_mismatch == 0 && hm_ok, {}};
  item.detail = {{"fixtures", fixtures},        {"ap_mismatches", ap_mismatch},
                 {"max_ap_diff", worst},        {"suppression_mismatches", sup_mismatch},
                 {"hm", {hm1, hm2}}};
  return item;
}

CheckItem check_interval_grid(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x67726964));
  int cells = 0, violations = 0;
  for (int a = 0; a < 100; ++a) {
    Hyper h;
    h.alpha_lower = rng.uniform();
    h.alpha_upper = rng.uniform();
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j <= 100; ++j) {
        const IntervalLabel b = interval_bounds(i / 100.0, j / 100.0, h);
        ++cells;
        if (!(b.lower <= b.upper)) ++violations;
      }
  }
  // Dead zone: an unannotated candidate inside its interval costs nothing.
  const ModelShape shape = tiny_shape();
  Rng frng(mix_seed(seed, 0x646561));
  auto phrases = tiny_phrases(frng, shape);
  int inside = 0, dead_zone_violations = 0;
  for (int d = 0; d < 400; ++d) {
    const ModelParams params = random_params(shape, mix_seed(seed, 1000 + d), 2.0);
    ScriptBank bank(phrases, {}, 0, seed);
    bank.refresh(params);
    Candidate c;
    c.x = std::make_shared<std::vector<double>>(random_descriptor(frng, shape));
    c.phrase = frng.below(bank.size());
    c.label = 0;
    const CandidateTrace tr = trace_candidate(*c.x, bank.phrase(c.phrase).embedding, nullptr,
                                              params, {});
    const IntervalLabel b = interval_bounds(tr.gamma, tr.delta, params.hyper);
    const double p = 1.0 / (1.0 + std::exp(-tr.s_hat));
    Batch batch;
    batch.items.push_back(c);
    const double loss = loss_ipl(batch, bank, params);
    if (p >= b.lower && p <= b.upper) {
      ++inside;
      if (loss != 0.0) ++dead_zone_violations;
    } else if (!(loss > 0.0)) {
      ++dead_zone_violations;
    }
  }
  CheckItem item{"interval_sanity", violations == 0 && dead_zone_violations == 0 && inside > 0,
                 {}};
  item.detail = {{"grid_cells", cells},
                 {"order_violations", violations},
                 {"dead_zone_draws", 400},
                 {"inside", inside},
                 {"dead_zone_violations", dead_zone_violations}};
  return item;
}

CheckItem check_counterfactual_contract(std::uint64_t seed) {
  Config config;
  config.seed = seed;
  const std::vector<Phrase> phrases =
      make_phrases(config.rulebook, config.dims.text, config.data.embedding_seed);
  const ModelParams params = initial_params(config, phrases);
  ScriptBank bank = make_bank(config, phrases);
  bank.refresh(params);
  int total = 0, bad = 0, real = 0;
  for (int v = 0; v < bank.size(); ++v) {
    const Script& anchor = bank.script(v);
    for (const Counterfactual& cf : bank.counterfactual_index(v)) {
      ++total;
      if (!cf.is_virtual()) ++real;
      if (cf.phrase_index == v) {
        ++bad;
        continue;
      }
      const Script& other = cf.is_virtual() ? cf.script : bank.script(cf.phrase_index);
      int differing = 0;
      bool right_slot = false;
      for (Slot s : kAllSlots)
        if (anchor.argmax(s) != other.argmax(s)) {
          ++differing;
          right_slot = s == cf.slot;
        }
      if (differing != 1 || !right_slot) ++bad;
    }
  }
  // Equal logits everywhere: zero parameters make every s_hat identical.
  ModelParams zero = zero_params(params.shape, params.hyper);
  ScriptBank zbank = make_bank(config, phrases);
  zbank.refresh(zero);
  Batch batch;
  Candidate c;
  Rng rng(mix_seed(seed, 0x637363));
  c.x = std::make_shared<std::vector<double>>(random_descriptor(rng, zero.shape));
  c.phrase = 0;
  c.label = 1;
  c.counterfactuals = zbank.counterfactuals(0, 4, seed);
  batch.items.push_back(c);
  const double csc = loss_csc(batch, zbank, zero);
  const bool csc_ok = c.counterfactuals.size() == 4 && std::abs(csc - std::log(5.0)) < 1e-9;
  CheckItem item{"counterfactual_contract", bad == 0 && total > 0 && csc_ok, {}};
  item.detail = {{"phrases", bank.size()},
                 {"counterfactuals", total},
                 {"real", real},
                 {"violations", bad},
                 {"csc_equal_logits", csc},
                 {"log5", std::log(5.0)}};
  return item;
}

CheckItem check_flatten(std::uint64_t seed) {
  const ModelShape shape = tiny_shape();
  const ModelParams p = random_params(shape, seed, 1.0);
  const std::vector<double> flat = flatten_params(p);
  ModelParams q = zero_params(shape, p.hyper);
  unflatten_params(flat, q);
  const bool ok = flat.size() == param_count(shape) && q == p && flatten_params(q) == flat;
  return {"flatten_bijection", ok, {{"coordinates", flat.size()}}};
}

CheckItem check_kernels(std::uint64_t seed) {
  using namespace kernels;
  const KernelTable& ref = scalar_table();
  ordered_json detail;
  detail["active"] = std::string(isa_name(active_isa()));
  double worst = 0.0;
  int variants = 0;
  for (const KernelTable* t : {avx2_table(), neon_table()}) {
    if (t == nullptr) continue;
    if ((t == avx2_table() && !isa_available(Isa::kAvx2)) ||
        (t == neon_table() && !isa_available(Isa::kNeon)))
      continue;
    ++variants;
    Rng rng(mix_seed(seed, 0x6b65726e));
    auto vec = [&](std::size_t n) {
      std::vector<double> v(n);
      for (double& x : v) x = rng.normal();
      return v;
    };
    auto rel = [](double a, double b, double scale) { return std::abs(a - b) / std::max(1.0, scale); };
    for (std::size_t rows = 0; rows <= 19; ++rows)
      for (std::size_t cols = 0; cols <= 37; cols += 3) {
        const auto a = vec(rows * cols), x = vec(cols), y = vec(rows);
        double sabs = 0.0;
        for (std::size_t i = 0; i < cols; ++i) sabs += std::abs(x[i] * x[i]);
        worst = std::max(worst, rel(ref.dot(x.data(), x.data(), cols), t->dot(x.data(), x.data(), cols), sabs));
        // axpy
        auto y1 = x, y2 = x;
        const auto z = vec(cols);
        ref.axpy(0.7, z.data(), y1.data(), cols);
        t->axpy(0.7, z.data(), y2.data(), cols);
        for (std::size_t i = 0; i < cols; ++i) worst = std::max(worst, rel(y1[i], y2[i], std::abs(y1[i])));
        // gemv
        std::vector<double> g1(rows), g2(rows);
        ref.gemv(a.data(), rows, cols, x.data(), g1.data());
        t->gemv(a.data(), rows, cols, x.data(), g2.data());
        for (std::size_t r = 0; r < rows; ++r) worst = std::max(worst, rel(g1[r], g2[r], 1.0 + cols));
        // gemv_t_acc
        auto h1 = x, h2 = x;
        ref.gemv_t_acc(a.data(), rows, cols, y.data(), h1.data());
        t->gemv_t_acc(a.data(), rows, cols, y.data(), h2.data());
        for (std::size_t c = 0; c < cols; ++c) worst = std::max(worst, rel(h1[c], h2[c], 1.0 + rows));
        // ger
        auto a1 = a, a2 = a;
        ref.ger(0.3, y.data(), rows, x.data(), cols, a1.data());
        t->ger(0.3, y.data(), rows, x.data(), cols, a2.data());
        for (std::size_t i = 0; i < a1.size(); ++i) worst = std::max(worst, rel(a1[i], a2[i], std::abs(a1[i])));
      }
  }
  const bool ok = worst <= 1e-12;
  detail["variants"] = variants;
  detail["max_rel_diff"] = worst;
  return {"kernel_equivalence", ok, detail};
}

}  // namespace

std::string batch_kind_name(BatchKind kind) {
  switch (kind) {
    case BatchKind::kPositivesOnly: return "positives_only";
    case BatchKind::kUnannotatedOnly: return "unannotated_only";
    case BatchKind::kMixed: return "mixed_counterfactuals";
  }
  return "?";
}

ModelShape tiny_shape() {
  ModelShape shape;
  shape.dims.text = 4;
  shape.dims.feature = 3;
  shape.dims.pose = 2;
  shape.dims.part = 3;
  shape.dims.context = 2;
  shape.dims.state = 3;
  shape.dims.match = 3;
  shape.categories = {"cup", "ball"};
  return shape;
}

GradFixture make_grad_fixture(BatchKind kind, std::uint64_t seed, const Objective& objective) {
  const ModelShape shape = tiny_shape();
  Rng rng(mix_seed(seed, 0x66697874));
  GradFixture f;
  f.params = random_params(shape, mix_seed(seed, 1), 1.5);
  f.bank = ScriptBank(tiny_phrases(rng, shape), {}, 3, mix_seed(seed, 2));
  f.bank.refresh(f.params);
  const int n = 6;
  for (int i = 0; i < n; ++i) {
    Candidate c;
    c.x = std::make_shared<std::vector<double>>(random_descriptor(rng, shape));
    c.phrase = i % f.bank.size();
    switch (kind) {
      case BatchKind::kPositivesOnly: c.label = 1; break;
      case BatchKind::kUnannotatedOnly: c.label = 0; break;
      case BatchKind::kMixed: c.label = i % 2; break;
    }
    f.batch.items.push_back(std::move(c));
  }
  if (kind == BatchKind::kMixed) {
    Objective anchored = objective;
    anchored.anchor_threshold = 0.0;  // every candidate anchors
    attach_counterfactuals(f.batch, f.bank, f.params, anchored);
  }
  return f;
}

PropertyResult check_gamma_monotonicity(int draws, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x67616d));
  PropertyResult r{"gamma_monotonicity", draws, 0};
  for (int d = 0; d < draws; ++d) {
    const PerSlot<double> m = random_slots(rng, -8, 8), rho = random_slots(rng, 0, 1);
    PerSlot<double> m2 = m;
    m2[rng.below(kNumSlots)] += rng.uniform(0, 4);
    if (coverage(m2, rho, 1e-8) < coverage(m, rho, 1e-8)) ++r.violations;
  }
  return r;
}

PropertyResult check_delta_antimonotonicity(int draws, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x64656c));
  PropertyResult r{"delta_antimonotonicity", draws, 0};
  for (int d = 0; d < draws; ++d) {
    const PerSlot<double> m = random_slots(rng, -8, 8), rho = random_slots(rng, 0, 1);
    const PerSlot<double> w = random_slots(rng, 0, 5);
    const double b = rng.uniform(-4, 4);
    PerSlot<double> m2 = m;
    m2[rng.below(kNumSlots)] += rng.uniform(0, 4);
    if (conflict(m2, rho, w, b) > conflict(m, rho, w, b)) ++r.violations;
  }
  return r;
}

PropertyResult check_calibration_ordering(int draws, std::uint64_t seed,
                                          const ScoreOptions& options) {
  Rng rng(mix_seed(seed, 0x63616c));
  PropertyResult r{"calibration_ordering", draws, 0};
  const ModelShape shape = tiny_shape();
  const ModelParams base = random_params(shape, seed, 1.5);
  for (int d = 0; d < draws; ++d) {
    Hyper h;
    h.lambda_gamma = rng.uniform(0.01, 3);
    h.lambda_delta = rng.uniform(0.01, 3);
    const double s = rng.uniform(-6, 6);
    const double g1 = rng.uniform(0.01, 1), g2 = rng.uniform(0.01, 1);
    const double d1 = rng.uniform(0, 1), d2 = rng.uniform(0, 1);
    // Coverage raises, conflict lowers the calibrated logit.
    const double lo_g = std::min(g1, g2), hi_g = std::max(g1, g2);
    const double lo_d = std::min(d1, d2), hi_d = std::max(d1, d2);
    bool bad = calibrate(s, hi_g, d1, h) < calibrate(s, lo_g, d1, h) ||
               calibrate(s, g1, hi_d, h) > calibrate(s, g1, lo_d, h);
    // Same ordering through the scoring pipeline: a larger conflict bias
    // raises delta only, so s_hat must drop.
    ModelParams p = base;
    p.hyper = h;
    const auto x = random_descriptor(rng, shape);
    const auto t = random_unit(rng, shape.dims.text);
    const CandidateTrace a = trace_candidate(x, t, nullptr, p, options);
    p.conflict_bias += rng.uniform(0.5, 2.0);
    const CandidateTrace b = trace_candidate(x, t, nullptr, p, options);
    if (b.delta > a.delta && b.gamma == a.gamma && b.s_base == a.s_base && !(b.s_hat < a.s_hat))
      bad = true;
    if (bad) ++r.violations;
  }
  return r;
}

PropertyResult check_permutation_invariance(int draws, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x706572));
  PropertyResult r{"slot_permutation_invariance", draws, 0};
  std::array<int, kNumSlots> perm{};
  for (int d = 0; d < draws; ++d) {
    const PerSlot<double> m = random_slots(rng, -8, 8), rho = random_slots(rng, 0, 1);
    const PerSlot<double> w = random_slots(rng, -3, 3);
    const double b = rng.uniform(-4, 4);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = kNumSlots - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    PerSlot<double> pm{}, prho{}, pw{};
    for (int k = 0; k < kNumSlots; ++k) {
      pm[k] = m[perm[k]];
      prho[k] = rho[perm[k]];
      pw[k] = w[perm[k]];
    }
    const double g = coverage(m, rho, 1e-8), pg = coverage(pm, prho, 1e-8);
    const double c = conflict(m, rho, w, b), pc = conflict(pm, prho, pw, b);
    if (std::abs(g - pg) > 1e-12 * std::max(1.0, g) || std::abs(c - pc) > 1e-12) ++r.violations;
  }
  return r;
}

PropertyResult check_match_bounds(int draws, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x626e64));
  PropertyResult r{"match_bounds", draws, 0};
  const double eps = 1e-8;
  for (int d = 0; d < draws; ++d) {
    const double scale = rng.bernoulli(0.2) ? 60.0 : 8.0;
    const PerSlot<double> m = random_slots(rng, -scale, scale);
    PerSlot<double> rho = random_slots(rng, 0, 1);
    if (rng.bernoulli(0.05)) rho.fill(0.0);
    const PerSlot<double> w = random_slots(rng, -3, 3);
    const double g = coverage(m, rho, eps);
    const double c = conflict(m, rho, w, rng.uniform(-4, 4));
    if (!(g > 0.0 && g <= 1.0 + eps) || !(c > 0.0 && c < 1.0)) ++r.violations;
  }
  return r;
}

bool CheckReport::passed() const {
  return !items.empty() &&
         std::all_of(items.begin(), items.end(), [](const CheckItem& i) { return i.passed; });
}

ordered_json CheckReport::to_json() const {
  ordered_json j;
  j["passed"] = passed();
  j["items"] = ordered_json::array();
  for (const auto& i : items)
    j["items"].push_back({{"name", i.name}, {"passed", i.passed}, {"detail", i.detail}});
  return j;
}

CheckReport run_self_check(const CheckOptions& options) {
  CheckReport report;
  Objective objective;
  objective.score.flip_conflict_sign = options.flip_conflict_sign;

  for (BatchKind kind :
       {BatchKind::kPositivesOnly, BatchKind::kUnannotatedOnly, BatchKind::kMixed}) {
    const GradFixture f = make_grad_fixture(kind, options.seed, objective);
    const GradCheckReport g =
        check_gradients(f.batch, f.bank, f.params, objective, options.step, options.tol);
    report.items.push_back({"gradient_" + batch_kind_name(kind), g.passed,
                            ordered_json::parse(to_json(g))});
  }

  report.items.push_back(property_item(check_gamma_monotonicity(options.draws, options.seed)));
  report.items.push_back(
      property_item(check_delta_antimonotonicity(options.draws, options.seed)));
  report.items.push_back(property_item(
      check_calibration_ordering(options.draws, options.seed, objective.score)));
  report.items.push_back(
      property_item(check_permutation_invariance(options.draws, options.seed)));
  report.items.push_back(property_item(check_match_bounds(options.draws, options.seed)));
  report.items.push_back(check_interval_grid(options.seed));
  report.items.push_back(check_evaluator(options.seed));
  report.items.push_back(check_counterfactual_contract(options.seed));
  report.items.push_back(check_flatten(options.seed));
  report.items.push_back(check_kernels(options.seed));
  return report;
}

}  // namespace scriptmatch
