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

#include "scriptmatch/matcher.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "scriptmatch/kernels.hpp"
#include "scriptmatch/script_bank.hpp"
#include "scriptmatch/tokenizer.hpp"

namespace scriptmatch {
namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_text(std::span<const double> t, const ModelParams& params) {
  if (static_cast<int>(t.size()) != params.shape.dims.text)
    throw std::invalid_argument("phrase embedding has " + std::to_string(t.size()) +
                                " entries, expected " + std::to_string(params.shape.dims.text));
}

// B t, then dotted with the pair embedding gathered from the flat descriptor.
double bilinear(std::span<const double> x_flat, std::span<const double> t,
                const ModelParams& params) {
  const auto& kt = kernels::active();
  const Matrix& b = params.base_bilinear;
  const int head = 3 * params.shape.dims.feature;
  const int ctx_off = field_offset(params.shape, DescriptorField::kContext);
  double s = 0.0;
  for (int r = 0; r < head; ++r) s += x_flat[r] * kt.dot(b.row(r).data(), t.data(), t.size());
  for (int c = 0; c < params.shape.dims.context; ++c)
    s += x_flat[ctx_off + c] * kt.dot(b.row(head + c).data(), t.data(), t.size());
  return s;
}

}  // namespace

double slot_compat_one(std::span<const double> token, std::span<const double> dist,
                       const Matrix& state_proj, const Matrix& script_proj, double kappa) {
  const auto& kt = kernels::active();
  std::vector<double> a(state_proj.rows), b(script_proj.rows);
  kt.gemv(state_proj.data.data(), state_proj.rows, state_proj.cols, token.data(), a.data());
  kt.gemv(script_proj.data.data(), script_proj.rows, script_proj.cols, dist.data(), b.data());
  const double na = std::sqrt(kt.dot(a.data(), a.data(), a.size()));
  const double nb = std::sqrt(kt.dot(b.data(), b.data(), b.size()));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return kappa * kt.dot(a.data(), b.data(), a.size()) / (na * nb);
}

PerSlot<double> slot_compat(const StateTokens& tokens, const Script& script,
                            const ModelParams& params) {
  PerSlot<double> m{};
  for (int k = 0; k < kNumSlots; ++k)
    m[k] = slot_compat_one(tokens.token[k], script.dist[k], params.state_proj[k],
                           params.script_proj[k], params.hyper.kappa);
  return m;
}

double coverage(const PerSlot<double>& m, const PerSlot<double>& rho, double eps) {
  double num = 0.0;
  double den = 0.0;
  for (int k = 0; k < kNumSlots; ++k) {
    num += rho[k] * std::log(sigmoid(m[k]) + eps);
    den += rho[k];
  }
  return std::exp(num / (den + eps));
}

double conflict(const PerSlot<double>& m, const PerSlot<double>& rho,
                const PerSlot<double>& weight, double bias) {
  double z = bias;
  for (int k = 0; k < kNumSlots; ++k) z += weight[k] * rho[k] * (1.0 - sigmoid(m[k]));
  return sigmoid(z);
}

double conflict(const PerSlot<double>& m, const PerSlot<double>& rho, const ModelParams& params) {
  return conflict(m, rho, params.conflict_weight, params.conflict_bias);
}

double base_logit(const PairDescriptor& x, std::span<const double> t, const ModelParams& params) {
  return base_logit_flat(flatten_descriptor(x, params.shape), t, params);
}

double base_logit_flat(std::span<const double> x_flat, std::span<const double> t,
                       const ModelParams& params) {
  check_text(t, params);
  if (static_cast<int>(x_flat.size()) != params.shape.descriptor_size())
    throw std::invalid_argument("base_logit: descriptor size mismatch");
  return bilinear(x_flat, t, params);
}

double calibrate(double s, double gamma, double delta, const Hyper& hyper) {
  return s + hyper.lambda_gamma * std::log(gamma + hyper.eps) - hyper.lambda_delta * delta;
}

MatchResult score_candidate(const PairDescriptor& x, const Phrase& phrase,
                            const ModelParams& params, const ScoreOptions& options) {
  const auto flat = flatten_descriptor(x, params.shape);
  return trace_candidate(flat, phrase.embedding, nullptr, params, options).result();
}

MatchResult score_candidate(const PairDescriptor& x, const Phrase& phrase, const Script& script,
                            const ModelParams& params, const ScoreOptions& options) {
  const auto flat = flatten_descriptor(x, params.shape);
  return trace_candidate(flat, phrase.embedding, &script, params, options).result();
}

MatchResult CandidateTrace::result() const {
  MatchResult r;
  r.compat = m;
  r.gamma = gamma;
  r.delta = delta;
  r.s_base = s_base;
  r.s_hat = s_hat;
  return r;
}

CandidateTrace trace_candidate(std::span<const double> x_flat, std::span<const double> t,
                               const Script* fixed_script, const ModelParams& params,
                               const ScoreOptions& options) {
  check_text(t, params);
  const auto& kt = kernels::active();
  const Hyper& h = params.hyper;
  CandidateTrace tr;
  tr.tokens = tokenize_flat(x_flat, params);
  tr.script_is_learnable = fixed_script == nullptr;
  tr.dropped_slot = options.dropped_slot;
  tr.script = fixed_script ? *fixed_script : derive_script(t, params);

  double z_delta = params.conflict_bias;
  for (int k = 0; k < kNumSlots; ++k) {
    const Matrix& ws = params.state_proj[k];
    const Matrix& up = params.script_proj[k];
    auto& a = tr.state_vec[k];
    auto& b = tr.script_vec[k];
    a.resize(ws.rows);
    b.resize(up.rows);
    kt.gemv(ws.data.data(), ws.rows, ws.cols, tr.tokens.token[k].data(), a.data());
    kt.gemv(up.data.data(), up.rows, up.cols, tr.script.dist[k].data(), b.data());
    tr.state_norm[k] = std::sqrt(kt.dot(a.data(), a.data(), a.size()));
    tr.script_norm[k] = std::sqrt(kt.dot(b.data(), b.data(), b.size()));
    if (tr.state_norm[k] == 0.0 || tr.script_norm[k] == 0.0) {
      tr.cosine[k] = 0.0;
    } else {
      tr.cosine[k] = kt.dot(a.data(), b.data(), a.size()) / (tr.state_norm[k] * tr.script_norm[k]);
    }
    tr.m[k] = h.kappa * tr.cosine[k];
    tr.sig[k] = sigmoid(tr.m[k]);
    tr.rho[k] = (k == options.dropped_slot) ? 0.0 : tr.script.reliability[k];
    tr.rho_sum += tr.rho[k];
    tr.log_sum += tr.rho[k] * std::log(tr.sig[k] + h.eps);
    z_delta += params.conflict_weight[k] * tr.rho[k] * (1.0 - tr.sig[k]);
  }
  tr.gamma = std::exp(tr.log_sum / (tr.rho_sum + h.eps));
  tr.delta = sigmoid(z_delta);
  tr.s_base = bilinear(x_flat, t, params);
  const double conflict_sign = options.flip_conflict_sign ? 1.0 : -1.0;
  tr.s_hat = tr.s_base + h.lambda_gamma * std::log(tr.gamma + h.eps) +
             conflict_sign * h.lambda_delta * tr.delta;
  return tr;
}

void backward_candidate(const CandidateTrace& tr, std::span<const double> x_flat,
                        std::span<const double> t, double g_shat, double g_gamma,
                        double g_delta, const ModelParams& params, ModelParams& grad,
                        std::span<double> grad_x) {
  const auto& kt = kernels::active();
  const Hyper& h = params.hyper;

  // s_hat = s + lg log(gamma + eps) - ld delta
  const double g_s = g_shat;
  g_gamma += g_shat * h.lambda_gamma / (tr.gamma + h.eps);
  g_delta -= g_shat * h.lambda_delta;

  // gamma = exp(N / (R + eps))
  const double denom = tr.rho_sum + h.eps;
  const double g_logg = g_gamma * tr.gamma;
  const double g_n = g_logg / denom;
  const double g_r = -g_logg * tr.log_sum / (denom * denom);

  // delta = sigmoid(w . res + b)
  const double g_z = g_delta * tr.delta * (1.0 - tr.delta);
  grad.conflict_bias += g_z;

  PerSlot<double> g_rho{};
  PerSlot<std::vector<double>> g_dist;
  StateTokens g_tokens;
  std::vector<double> g_a, g_b;
  for (int k = 0; k < kNumSlots; ++k) {
    const double rho = tr.rho[k];
    const double sig = tr.sig[k];
    const double res = rho * (1.0 - sig);
    grad.conflict_weight[k] += g_z * res;
    const double g_res = g_z * params.conflict_weight[k];

    g_rho[k] = g_n * std::log(sig + h.eps) + g_r + g_res * (1.0 - sig);
    const double g_sig = g_n * rho / (sig + h.eps) - g_res * rho;
    const double g_m = g_sig * sig * (1.0 - sig);

    const Matrix& ws = params.state_proj[k];
    const Matrix& up = params.script_proj[k];
    g_tokens.token[k].assign(ws.cols, 0.0);
    g_dist[k].assign(up.cols, 0.0);
    const double na = tr.state_norm[k];
    const double nb = tr.script_norm[k];
    if (na == 0.0 || nb == 0.0 || g_m == 0.0) continue;

    // m = kappa (a.b)/(|a||b|)
    const double g_cos = g_m * h.kappa;
    const auto& a = tr.state_vec[k];
    const auto& b = tr.script_vec[k];
    const double c = tr.cosine[k];
    g_a.resize(a.size());
    g_b.resize(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      g_a[i] = g_cos * (b[i] / (na * nb) - c * a[i] / (na * na));
      g_b[i] = g_cos * (a[i] / (na * nb) - c * b[i] / (nb * nb));
    }
    // a = W_s S, b = U P
    kt.ger(1.0, g_a.data(), g_a.size(), tr.tokens.token[k].data(), ws.cols,
           grad.state_proj[k].data.data());
    kt.gemv_t_acc(ws.data.data(), ws.rows, ws.cols, g_a.data(), g_tokens.token[k].data());
    kt.ger(1.0, g_b.data(), g_b.size(), tr.script.dist[k].data(), up.cols,
           grad.script_proj[k].data.data());
    kt.gemv_t_acc(up.data.data(), up.rows, up.cols, g_b.data(), g_dist[k].data());
  }

  // A dropped slot carries a constant zero reliability.
  if (tr.dropped_slot >= 0) g_rho[tr.dropped_slot] = 0.0;
  if (tr.script_is_learnable) derive_script_backward(t, tr.script, g_dist, g_rho, grad);

  tokenize_backward(x_flat, g_tokens, params, grad, grad_x);

  // s = e^T B t
  if (g_s != 0.0) {
    Matrix& gb = grad.base_bilinear;
    const int head = 3 * params.shape.dims.feature;
    const int ctx_off = field_offset(params.shape, DescriptorField::kContext);
    for (int r = 0; r < head; ++r)
      kt.axpy(g_s * x_flat[r], t.data(), gb.data.data() + static_cast<std::size_t>(r) * gb.cols,
              t.size());
    for (int c = 0; c < params.shape.dims.context; ++c)
      kt.axpy(g_s * x_flat[ctx_off + c], t.data(),
              gb.data.data() + static_cast<std::size_t>(head + c) * gb.cols, t.size());
    if (!grad_x.empty()) {
      const Matrix& b = params.base_bilinear;
      for (int r = 0; r < head; ++r)
        grad_x[r] += g_s * kt.dot(b.row(r).data(), t.data(), t.size());
      for (int c = 0; c < params.shape.dims.context; ++c)
        grad_x[ctx_off + c] += g_s * kt.dot(b.row(head + c).data(), t.data(), t.size());
    }
  }
}

}  // namespace scriptmatch
