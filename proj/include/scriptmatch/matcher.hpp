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
#include <vector>

#include "scriptmatch/domain.hpp"
#include "scriptmatch/params.hpp"

namespace scriptmatch {

struct ScoreOptions {
  // Slot whose reliability is forced to 0 (slot-removal ablation), or -1.
  int dropped_slot = -1;
  // Self-test mutation: flips the sign of the conflict term in the forward
  // pass only. Never set outside `check`.
  bool flip_conflict_sign = false;
};

// kappa * cos(W_s S, U_pi P) for one slot; 0 when either projection is zero.
double slot_compat_one(std::span<const double> token, std::span<const double> dist,
                       const Matrix& state_proj, const Matrix& script_proj, double kappa);

PerSlot<double> slot_compat(const StateTokens& tokens, const Script& script,
                            const ModelParams& params);

// exp( sum_k rho_k log(sigmoid(m_k) + eps) / (sum_k rho_k + eps) )
double coverage(const PerSlot<double>& m, const PerSlot<double>& rho, double eps);

// sigmoid( w . [rho_k (1 - sigmoid(m_k))]_k + b )
double conflict(const PerSlot<double>& m, const PerSlot<double>& rho,
                const PerSlot<double>& weight, double bias);
double conflict(const PerSlot<double>& m, const PerSlot<double>& rho, const ModelParams& params);

// [f_h, f_o, f_u, r_ctx]^T B t
double base_logit(const PairDescriptor& x, std::span<const double> t, const ModelParams& params);
double base_logit_flat(std::span<const double> x_flat, std::span<const double> t,
                       const ModelParams& params);

// s + lambda_gamma log(gamma + eps) - lambda_delta delta
double calibrate(double s, double gamma, double delta, const Hyper& hyper);

MatchResult score_candidate(const PairDescriptor& x, const Phrase& phrase,
                            const ModelParams& params, const ScoreOptions& options = {});
MatchResult score_candidate(const PairDescriptor& x, const Phrase& phrase, const Script& script,
                            const ModelParams& params, const ScoreOptions& options = {});

// Full forward record of one (pair, script) evaluation, kept for the reverse
// pass.
struct CandidateTrace {
  StateTokens tokens;
  Script script;
  bool script_is_learnable = false;
  int dropped_slot = -1;
  PerSlot<std::vector<double>> state_vec;   // W_s S
  PerSlot<std::vector<double>> script_vec;  // U_pi P
  PerSlot<double> state_norm{};
  PerSlot<double> script_norm{};
  PerSlot<double> cosine{};
  PerSlot<double> m{};
  PerSlot<double> sig{};
  PerSlot<double> rho{};  // effective reliability after slot dropping
  double rho_sum = 0.0;
  double log_sum = 0.0;
  double gamma = 1.0;
  double delta = 0.0;
  double s_base = 0.0;
  double s_hat = 0.0;

  MatchResult result() const;
};

// When `fixed_script` is null the script is derived from `t` and receives
// gradients; otherwise it is a constant.
CandidateTrace trace_candidate(std::span<const double> x_flat, std::span<const double> t,
                               const Script* fixed_script, const ModelParams& params,
                               const ScoreOptions& options = {});

// Adds the parameter gradient of g_shat*s_hat + g_gamma*gamma + g_delta*delta
// (upstream derivatives treated as constants) into `grad`. When grad_x is
// non-empty the descriptor gradient is accumulated there as well.
void backward_candidate(const CandidateTrace& trace, std::span<const double> x_flat,
                        std::span<const double> t, double g_shat, double g_gamma,
                        double g_delta, const ModelParams& params, ModelParams& grad,
                        std::span<double> grad_x = {});

}  // namespace scriptmatch
