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

#include "scriptmatch/losses.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "json.hpp"
#include "scriptmatch/error.hpp"
#include "scriptmatch/parallel.hpp"

namespace scriptmatch {
namespace {

constexpr std::size_t kChunk = 16;

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x)
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// One (pair, script) evaluation: the candidate itself or one of its
// counterfactuals.
struct Eval {
  std::size_t item = 0;
  int cf = -1;  // -1: the candidate's own phrase
};

struct Upstream {
  double shat = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
};

struct Workspace {
  std::vector<Eval> evals;
  std::vector<CandidateTrace> traces;
  std::vector<Upstream> up;
  std::vector<IntervalLabel> bounds;  // per item; unused for annotated items
  LossTerms terms;
};

const Script* fixed_script_for(const ScriptBank& bank, int phrase) {
  return bank.is_override(phrase) ? &bank.script(phrase) : nullptr;
}

const std::vector<double>& text_of(const ScriptBank& bank, int phrase) {
  return bank.phrase(phrase).embedding;
}

void check_finite(const CandidateTrace& tr, std::size_t eval) {
  auto fail = [&](const char* op, double v) {
    throw NumericError(std::string(op) + ": non-finite value " + std::to_string(v) +
                       " in evaluation " + std::to_string(eval));
  };
  for (double m : tr.m)
    if (!std::isfinite(m)) fail("slot_compat", m);
  if (!std::isfinite(tr.gamma)) fail("coverage", tr.gamma);
  if (!std::isfinite(tr.delta)) fail("conflict", tr.delta);
  if (!std::isfinite(tr.s_base)) fail("base_logit", tr.s_base);
  if (!std::isfinite(tr.s_hat)) fail("calibrate", tr.s_hat);
}

void forward(const Batch& batch, const ScriptBank& bank, const ModelParams& params,
             const Objective& obj, int threads, Workspace& ws) {
  ws.evals.clear();
  for (std::size_t i = 0; i < batch.items.size(); ++i) {
    ws.evals.push_back({i, -1});
    for (std::size_t c = 0; c < batch.items[i].counterfactuals.size(); ++c)
      ws.evals.push_back({i, static_cast<int>(c)});
  }
  ws.traces.assign(ws.evals.size(), {});
  const std::size_t chunks = (ws.evals.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t chunk) {
    const std::size_t end = std::min(ws.evals.size(), (chunk + 1) * kChunk);
    for (std::size_t e = chunk * kChunk; e < end; ++e) {
      const Eval& ev = ws.evals[e];
      const Candidate& cand = batch.items[ev.item];
      if (ev.cf < 0) {
        ws.traces[e] = trace_candidate(*cand.x, text_of(bank, cand.phrase),
                                       fixed_script_for(bank, cand.phrase), params, obj.score);
      } else {
        const Counterfactual& cf = cand.counterfactuals[ev.cf];
        // Virtual scripts are constants; real phrases follow the bank's rule.
        const Script* fixed = cf.is_virtual() ? &cf.script : fixed_script_for(bank, cf.phrase_index);
        const auto& t = cf.is_virtual() ? text_of(bank, cand.phrase) : text_of(bank, cf.phrase_index);
        ws.traces[e] = trace_candidate(*cand.x, t, fixed, params, obj.score);
      }
      check_finite(ws.traces[e], e);
    }
  });
}

// Computes the loss terms and per-evaluation upstream derivatives.
void reduce_losses(const Batch& batch, const ModelParams& params, const Objective& obj,
                   const std::vector<IntervalLabel>* frozen_bounds, Workspace& ws) {
  const Hyper& h = params.hyper;
  ws.up.assign(ws.evals.size(), {});
  ws.bounds.assign(batch.items.size(), {});
  std::size_t n_pos = 0, n_neg = 0, n_anchor = 0;
  for (const auto& c : batch.items) {
    if (c.label == 1)
      ++n_pos;
    else
      ++n_neg;
    if (!c.counterfactuals.empty()) ++n_anchor;
  }
  LossTerms t;
  // Evaluation index of each item's own trace.
  std::vector<std::size_t> own(batch.items.size());
  for (std::size_t e = 0; e < ws.evals.size(); ++e)
    if (ws.evals[e].cf < 0) own[ws.evals[e].item] = e;

  for (std::size_t i = 0; i < batch.items.size(); ++i) {
    const Candidate& c = batch.items[i];
    const std::size_t e = own[i];
    const CandidateTrace& tr = ws.traces[e];
    Upstream& u = ws.up[e];
    const double s = tr.s_hat;
    if (c.label == 1) {
      const double inv = 1.0 / static_cast<double>(n_pos);
      t.hoi += softplus(-s) * inv;
      u.shat += (sigmoid(s) - 1.0) * inv;
      t.align += (-std::log(tr.gamma + h.eps) - std::log(1.0 - tr.delta + h.eps)) * inv;
      u.gamma += h.lambda_align * (-1.0 / (tr.gamma + h.eps)) * inv;
      u.delta += h.lambda_align * (1.0 / (1.0 - tr.delta + h.eps)) * inv;
    } else if (obj.closed_world) {
      const double inv = 1.0 / static_cast<double>(n_neg);
      t.ipl += softplus(s) * inv;
      u.shat += h.lambda_ipl * sigmoid(s) * inv;
    } else {
      const double inv = 1.0 / static_cast<double>(n_neg);
      const double p = sigmoid(s);
      const IntervalLabel b = frozen_bounds ? (*frozen_bounds)[i] : interval_bounds(tr.gamma, tr.delta, h);
      ws.bounds[i] = b;
      const double below = std::max(0.0, b.lower - p);
      const double above = std::max(0.0, p - b.upper);
      t.ipl += (below * below + above * above) * inv;
      const double d_p = -2.0 * below + 2.0 * above;
      u.shat += h.lambda_ipl * d_p * p * (1.0 - p) * inv;
      if (!obj.detach_interval_bounds && !frozen_bounds) {
        const double d_l = 2.0 * below;
        const double d_u = -2.0 * above;
        const double g_clamped = std::min(tr.gamma, 1.0);
        const double gate = tr.gamma < 1.0 ? 1.0 : 0.0;
        u.gamma += h.lambda_ipl * inv * gate *
                   (d_l * h.alpha_lower * (1.0 - tr.delta) + d_u * h.alpha_upper * tr.delta);
        u.delta += h.lambda_ipl * inv *
                   (d_l * (-h.alpha_lower * g_clamped) + d_u * (-h.alpha_upper * (1.0 - g_clamped)));
      }
    }
  }

  // Counterfactual contrast, one softmax group per anchor.
  if (n_anchor > 0) {
    const double inv = 1.0 / static_cast<double>(n_anchor);
    std::size_t e = 0;
    while (e < ws.evals.size()) {
      const std::size_t item = ws.evals[e].item;
      std::size_t end = e + 1;
      while (end < ws.evals.size() && ws.evals[end].item == item) ++end;
      if (end - e > 1) {
        double mx = -INFINITY;
        for (std::size_t j = e; j < end; ++j) mx = std::max(mx, ws.traces[j].s_hat / h.tau);
        double z = 0.0;
        for (std::size_t j = e; j < end; ++j) z += std::exp(ws.traces[j].s_hat / h.tau - mx);
        const double lse = mx + std::log(z);
        t.csc += (lse - ws.traces[e].s_hat / h.tau) * inv;
        for (std::size_t j = e; j < end; ++j) {
          const double soft = std::exp(ws.traces[j].s_hat / h.tau - lse);
          ws.up[j].shat += h.lambda_csc * inv * (soft - (j == e ? 1.0 : 0.0)) / h.tau;
        }
      }
      e = end;
    }
  }
  t.total = t.hoi + h.lambda_ipl * t.ipl + h.lambda_csc * t.csc + h.lambda_align * t.align;
  ws.terms = t;
}

LossTerms evaluate(const Batch& batch, const ScriptBank& bank, const ModelParams& params,
                   const Objective& obj, const std::vector<IntervalLabel>* frozen, int threads) {
  Workspace ws;
  forward(batch, bank, params, obj, threads, ws);
  reduce_losses(batch, params, obj, frozen, ws);
  return ws.terms;
}

}  // namespace

IntervalLabel interval_bounds(double gamma, double delta, const Hyper& hyper) {
  const double g = std::clamp(gamma, 0.0, 1.0);
  return {hyper.alpha_lower * g * (1.0 - delta), 1.0 - hyper.alpha_upper * delta * (1.0 - g)};
}

void attach_counterfactuals(Batch& batch, const ScriptBank& bank, const ModelParams& params,
                            const Objective& objective) {
  for (Candidate& c : batch.items) {
    c.counterfactuals.clear();
    bool anchor = c.label == 1;
    if (!anchor && objective.anchor_threshold < 1.0) {
      const CandidateTrace tr = trace_candidate(*c.x, text_of(bank, c.phrase),
                                                fixed_script_for(bank, c.phrase), params,
                                                objective.score);
      anchor = tr.gamma * (1.0 - tr.delta) > objective.anchor_threshold;
    }
    if (anchor) c.counterfactuals = bank.counterfactual_index(c.phrase);
  }
}

LossTerms loss_terms(const Batch& batch, const ScriptBank& bank, const ModelParams& params,
                     const Objective& objective, int threads) {
  return evaluate(batch, bank, params, objective, nullptr, threads);
}

double loss_hoi(const Batch& b, const ScriptBank& bank, const ModelParams& p, const Objective& o) {
  return loss_terms(b, bank, p, o).hoi;
}
double loss_ipl(const Batch& b, const ScriptBank& bank, const ModelParams& p, const Objective& o) {
  return loss_terms(b, bank, p, o).ipl;
}
double loss_csc(const Batch& b, const ScriptBank& bank, const ModelParams& p, const Objective& o) {
  return loss_terms(b, bank, p, o).csc;
}
double loss_align(const Batch& b, const ScriptBank& bank, const ModelParams& p,
                  const Objective& o) {
  return loss_terms(b, bank, p, o).align;
}
double loss_total(const Batch& b, const ScriptBank& bank, const ModelParams& p,
                  const Objective& o) {
  return loss_terms(b, bank, p, o).total;
}

GradientResult grad_total(const Batch& batch, const ScriptBank& bank, const ModelParams& params,
                          const Objective& objective, int threads) {
  Workspace ws;
  forward(batch, bank, params, objective, threads, ws);
  reduce_losses(batch, params, objective, nullptr, ws);

  const std::size_t chunks = (ws.evals.size() + kChunk - 1) / kChunk;
  std::vector<ModelParams> partial(chunks);
  parallel_for(chunks, threads, [&](std::size_t chunk) {
    ModelParams g = zero_params(params.shape);
    const std::size_t end = std::min(ws.evals.size(), (chunk + 1) * kChunk);
    for (std::size_t e = chunk * kChunk; e < end; ++e) {
      const Upstream& u = ws.up[e];
      if (u.shat == 0.0 && u.gamma == 0.0 && u.delta == 0.0) continue;
      const Eval& ev = ws.evals[e];
      const Candidate& cand = batch.items[ev.item];
      const auto& t = (ev.cf < 0 || cand.counterfactuals[ev.cf].is_virtual())
                          ? text_of(bank, cand.phrase)
                          : text_of(bank, cand.counterfactuals[ev.cf].phrase_index);
      backward_candidate(ws.traces[e], *cand.x, t, u.shat, u.gamma, u.delta, params, g);
    }
    partial[chunk] = std::move(g);
  });

  GradientResult out;
  out.terms = ws.terms;
  out.grad.assign(param_count(params.shape), 0.0);
  for (const ModelParams& g : partial) {
    const auto flat = flatten_params(g);
    for (std::size_t i = 0; i < flat.size(); ++i) out.grad[i] += flat[i];
  }
  for (double v : out.grad)
    if (!std::isfinite(v)) throw NumericError("grad_total: non-finite gradient entry");
  return out;
}

GradCheckReport check_gradients(const Batch& batch, const ScriptBank& bank,
                                const ModelParams& params, const Objective& objective,
                                double step, double tol) {
  GradCheckReport report;
  report.tol = tol;
  const GradientResult analytic = grad_total(batch, bank, params, objective);
  report.terms = analytic.terms;

  std::optional<std::vector<IntervalLabel>> frozen;
  if (objective.detach_interval_bounds && !objective.closed_world) {
    Workspace ws;
    forward(batch, bank, params, objective, 1, ws);
    reduce_losses(batch, params, objective, nullptr, ws);
    frozen = ws.bounds;
  }
  const std::vector<double> base = flatten_params(params);
  ModelParams probe = params;
  std::vector<double> flat = base;
  report.coordinates = base.size();
  for (std::size_t i = 0; i < base.size(); ++i) {
    flat[i] = base[i] + step;
    unflatten_params(flat, probe);
    const double up = evaluate(batch, bank, probe, objective, frozen ? &*frozen : nullptr, 1).total;
    flat[i] = base[i] - step;
    unflatten_params(flat, probe);
    const double down =
        evaluate(batch, bank, probe, objective, frozen ? &*frozen : nullptr, 1).total;
    flat[i] = base[i];
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.grad[i];
    const double rel =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
    if (i == 0 || rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_index = i;
      report.analytic_at_worst = a;
      report.numeric_at_worst = numeric;
    }
  }
  report.worst_field = field_at(params.shape, report.worst_index);
  report.passed = report.max_rel_err < tol;
  return report;
}

std::string to_json(const GradCheckReport& r) {
  nlohmann::ordered_json j;
  j["max_rel_err"] = r.max_rel_err;
  j["worst_field"] = r.worst_field;
  j["worst_index"] = r.worst_index;
  j["analytic_at_worst"] = r.analytic_at_worst;
  j["numeric_at_worst"] = r.numeric_at_worst;
  j["coordinates"] = r.coordinates;
  j["tol"] = r.tol;
  j["passed"] = r.passed;
  j["losses"] = {{"hoi", r.terms.hoi},
                 {"ipl", r.terms.ipl},
                 {"csc", r.terms.csc},
                 {"align", r.terms.align},
                 {"total", r.terms.total}};
  return j.dump();
}

}  // namespace scriptmatch
