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
#include <string>
#include <vector>

#include "json.hpp"
#include "scriptmatch/losses.hpp"
#include "scriptmatch/script_bank.hpp"

namespace scriptmatch {

enum class BatchKind { kPositivesOnly, kUnannotatedOnly, kMixed };

std::string batch_kind_name(BatchKind kind);

// Tiny random model, bank and batch for gradient checking. kMixed attaches
// counterfactual sets (real and virtual) to its anchors.
struct GradFixture {
  ModelParams params;
  ScriptBank bank;
  Batch batch;
};

ModelShape tiny_shape();
GradFixture make_grad_fixture(BatchKind kind, std::uint64_t seed, const Objective& objective = {});

struct PropertyResult {
  std::string name;
  int draws = 0;
  int violations = 0;
};

// Random-draw property suites over the matcher. `options` is applied where
// the property is evaluated through the scoring pipeline.
PropertyResult check_gamma_monotonicity(int draws, std::uint64_t seed);
PropertyResult check_delta_antimonotonicity(int draws, std::uint64_t seed);
// Larger gamma (equal delta) raises s_hat; larger conflict (via the conflict
// bias, equal gamma and base logit) lowers it, evaluated end to end.
PropertyResult check_calibration_ordering(int draws, std::uint64_t seed,
                                          const ScoreOptions& options = {});
PropertyResult check_permutation_invariance(int draws, std::uint64_t seed);
PropertyResult check_match_bounds(int draws, std::uint64_t seed);

struct CheckOptions {
  double tol = 1e-4;
  double step = 1e-5;
  int draws = 2000;
  std::uint64_t seed = 0;
  bool flip_conflict_sign = false;  // mutation fault
};

struct CheckItem {
  std::string name;
  bool passed = false;
  nlohmann::ordered_json detail;
};

struct CheckReport {
  std::vector<CheckItem> items;
  bool passed() const;
  nlohmann::ordered_json to_json() const;
};

// Gradient checks, matcher and interval invariants, evaluator oracles,
// counterfactual contract and kernel equivalence.
CheckReport run_self_check(const CheckOptions& options);

}  // namespace scriptmatch
