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

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "scriptmatch/domain.hpp"
#include "scriptmatch/matcher.hpp"
#include "scriptmatch/params.hpp"
#include "scriptmatch/script_bank.hpp"

namespace scriptmatch {

struct Candidate {
  std::shared_ptr<const std::vector<double>> x;  // flat descriptor, shared per pair
  int phrase = 0;                                // bank index
  int label = 0;                                 // y: 1 annotated, 0 unannotated
  // Contrast set C(v); non-empty only for anchors.
  std::vector<Counterfactual> counterfactuals;
};

struct Batch {
  std::vector<Candidate> items;
};

struct Objective {
  // Unannotated candidates become hard negatives (binary cross-entropy) in
  // place of the interval term.
  bool closed_world = false;
  // Interval bounds act as targets: no gradient flows through l and u.
  bool detach_interval_bounds = true;
  // Unannotated candidates anchor the contrast term when
  // gamma (1 - delta) exceeds this.
  double anchor_threshold = 0.5;
  ScoreOptions score;
};

struct LossTerms {
  double hoi = 0.0;
  double ipl = 0.0;  // hard-negative BCE under closed_world
  double csc = 0.0;
  double align = 0.0;
  double total = 0.0;
};

// l = alpha_l G (1 - D), u = 1 - alpha_u D (1 - G), with G clamped to [0, 1].
IntervalLabel interval_bounds(double gamma, double delta, const Hyper& hyper);

// Attaches C(v) from the bank's counterfactual index to every annotated
// candidate and every unannotated candidate with gamma (1 - delta) above
// objective.anchor_threshold (none when the threshold is >= 1).
// under the current parameters. Clears any previous sets.
void attach_counterfactuals(Batch& batch, const ScriptBank& bank, const ModelParams& params,
                            const Objective& objective);

LossTerms loss_terms(const Batch& batch, const ScriptBank& bank, const ModelParams& params,
                     const Objective& objective = {}, int threads = 1);

double loss_hoi(const Batch& batch, const ScriptBank& bank, const ModelParams& params,
                const Objective& objective = {});
double loss_ipl(const Batch& batch, const ScriptBank& bank, const ModelParams& params,
                const Objective& objective = {});
double loss_csc(const Batch& batch, const ScriptBank& bank, const ModelParams& params,
                const Objective& objective = {});
double loss_align(const Batch& batch, const ScriptBank& bank, const ModelParams& params,
                  const Objective& objective = {});
double loss_total(const Batch& batch, const ScriptBank& bank, const ModelParams& params,
                  const Objective& objective = {});

struct GradientResult {
  LossTerms terms;
  std::vector<double> grad;  // same layout as flatten_params
};

// Reverse-mode gradient of loss_total. Per-candidate contributions are summed
// in fixed-size chunks and the chunks reduced in order, so the result does
// not depend on `threads`. Throws NumericError naming the operation when an
// intermediate is not finite.
GradientResult grad_total(const Batch& batch, const ScriptBank& bank, const ModelParams& params,
                          const Objective& objective = {}, int threads = 1);

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  std::string worst_field;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  std::size_t coordinates = 0;
  LossTerms terms;
  double tol = 0.0;
  bool passed = false;
};

// Magnitude floor in the relative-error denominator.
inline constexpr double kGradCheckFloor = 1e-6;

// Compares grad_total against central differences on every coordinate.
// With detached interval bounds the differenced objective keeps l and u
// frozen at the unperturbed parameters, which is the function the analytic
// gradient differentiates.
GradCheckReport check_gradients(const Batch& batch, const ScriptBank& bank,
                                const ModelParams& params, const Objective& objective,
                                double step = 1e-5, double tol = 1e-4);

std::string to_json(const GradCheckReport& report);

}  // namespace scriptmatch
