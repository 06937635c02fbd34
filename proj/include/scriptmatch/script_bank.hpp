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

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "scriptmatch/domain.hpp"
#include "scriptmatch/params.hpp"

namespace scriptmatch {

// P^k = softmax(W_pi^k t), rho^k = sigmoid(w_rho^k . t).
// Throws std::invalid_argument when t does not have params.shape.dims.text entries.
Script derive_script(std::span<const double> t, const ModelParams& params);

// Reverse pass of derive_script: adds into grad.script_head and
// grad.reliability_head given dL/dP^k and dL/drho^k.
void derive_script_backward(std::span<const double> t, const Script& script,
                            const PerSlot<std::vector<double>>& grad_dist,
                            const PerSlot<double>& grad_reliability, ModelParams& grad);

// Fixed embedding table: a verb sub-vector shared by phrases with the same
// verb, an object sub-vector shared by phrases with the same object, and a
// per-phrase random tail, concatenated and L2-normalized.
void assign_embeddings(std::vector<Phrase>& phrases, int dim, std::uint64_t seed);

// Least-squares fit (ridge-regularized) of script_head / reliability_head so
// that derive_script reproduces `targets` on `phrases`. Fits centered logits.
void fit_script_heads(ModelParams& params, const std::vector<Phrase>& phrases,
                      const std::vector<Script>& targets, double ridge = 1e-6);

struct Counterfactual {
  int phrase_index = -1;  // -1: virtual script
  Slot slot = Slot::kBody;
  Script script;

  bool is_virtual() const { return phrase_index < 0; }
};

class ScriptBank {
 public:
  ScriptBank() = default;
  // Throws std::invalid_argument on duplicate ids or an override for an
  // unknown id. Overrides are hand-authored scripts that replace derivation.
  explicit ScriptBank(std::vector<Phrase> phrases, std::map<int, Script> overrides = {},
                      int counterfactual_count = 4, std::uint64_t counterfactual_seed = 0);

  int size() const { return static_cast<int>(phrases_.size()); }
  const std::vector<Phrase>& phrases() const { return phrases_; }
  const Phrase& phrase(int index) const { return phrases_[index]; }
  int index_of(int id) const;  // -1 if absent
  bool is_override(int index) const { return overridden_[index]; }
  const std::map<int, Script>& overrides() const { return overrides_; }

  // Cached scripts; valid after refresh().
  const Script& script(int index) const { return scripts_[index]; }
  const std::vector<Counterfactual>& counterfactual_index(int index) const { return cf_index_[index]; }
  int counterfactual_count() const { return cf_count_; }

  // Recomputes every derived script and the counterfactual index.
  void refresh(const ModelParams& params);

  // Up to n candidates whose scripts differ from phrase `index` in the argmax
  // of exactly one slot. Real phrases of the same object category come
  // first, visiting slots in an order sampled proportionally to rho (seeded);
  // the remainder are virtual scripts with one slot moved to a one-hot on a
  // different value. Never returns the phrase itself.
  std::vector<Counterfactual> counterfactuals(int index, int n, std::uint64_t seed) const;

 private:
  std::vector<Phrase> phrases_;
  std::map<int, Script> overrides_;
  std::vector<bool> overridden_;
  std::map<int, int> id_to_index_;
  std::vector<Script> scripts_;
  std::vector<std::vector<Counterfactual>> cf_index_;
  int cf_count_ = 4;
  std::uint64_t cf_seed_ = 0;
};

}  // namespace scriptmatch
