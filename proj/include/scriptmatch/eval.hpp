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

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scriptmatch/domain.hpp"
#include "scriptmatch/matcher.hpp"
#include "scriptmatch/params.hpp"
#include "scriptmatch/script_bank.hpp"
#include "scriptmatch/synthgen.hpp"

namespace scriptmatch {

inline constexpr const char* kPredictionSchema = "scriptmatch/predictions/1";

struct RankedPrediction {
  int scene = 0;
  int pair = 0;  // index into scene.pairs
  Box human;
  Box object;
  int phrase = 0;  // phrase id
  double score = 0.0;
  MatchResult match;
  bool suppressed = false;
  int suppressor = -1;  // phrase id of the kept prediction that removed it
};

// Same scene and pair, score descending, then phrase id ascending.
bool ranks_before(const RankedPrediction& a, const RankedPrediction& b);

struct SuppressionThresholds {
  double text = 0.95;    // cos(t_p, t_q) >
  double script = 0.05;  // mean per-slot JS divergence <
  double align = 0.90;   // cos(m_p, m_q) >
};

double cosine(const std::vector<double>& a, const std::vector<double>& b);
// Natural-log Jensen-Shannon divergence, in [0, log 2].
double js_divergence(const std::vector<double>& p, const std::vector<double>& q);
double mean_script_divergence(const Script& a, const Script& b);

// Pairwise duplicate rule between a kept prediction p and a candidate q.
bool duplicates(const RankedPrediction& p, const RankedPrediction& q, const ScriptBank& bank,
                const SuppressionThresholds& th);

// Greedy pass in rank order. Returns every prediction, sorted by
// (scene, score desc, phrase id asc, pair), with suppression flags set.
std::vector<RankedPrediction> rank_and_suppress(std::vector<RankedPrediction> predictions,
                                                const ScriptBank& bank,
                                                const SuppressionThresholds& th);

struct GroundTruth {
  int scene = 0;
  Box human;
  Box object;
  int phrase = 0;
};

// Latent interactions (z = 1) of the given scenes.
std::vector<GroundTruth> ground_truth(const std::vector<SceneRecord>& scenes);

// All-point interpolated AP of one phrase. Predictions of other phrases are
// ignored. Tied scores form one threshold. Greedy matching in score order;
// each ground truth matched at most once, choosing the unmatched one with the
// highest min(IoU_h, IoU_o) >= iou. Returns nullopt when there is no ground
// truth for the phrase.
std::optional<double> average_precision(const std::vector<RankedPrediction>& predictions,
                                        const std::vector<GroundTruth>& truth, int phrase,
                                        double iou);

double harmonic_mean(double seen, double unseen);

struct SplitSpec {
  std::vector<int> unseen;          // phrase ids held out of training
  std::vector<int> train_positives; // per bank index: annotated training positives
  int rare_cutoff = 10;
};

struct PhraseAp {
  int phrase = 0;
  std::optional<double> ap;
  std::optional<double> ap_known_object;
  int n_truth = 0;
  bool seen = true;
  bool rare = false;
};

struct MapReport {
  double full = 0, rare = 0, non_rare = 0, seen = 0, unseen = 0, known_object = 0, hm = 0;
  std::vector<PhraseAp> per_phrase;
};

// Suppressed predictions are ignored. Known-Object keeps predictions of
// phrase v only in scenes containing v's object category.
MapReport mean_average_precision(const std::vector<RankedPrediction>& predictions,
                                 const std::vector<SceneRecord>& scenes, const ScriptBank& bank,
                                 const SplitSpec& split, double iou);

struct FprReport {
  std::optional<double> fpr;  // absent when there are no probes
  int probes = 0;
  int hits = 0;
};

// Fraction of probes among the top-k kept predictions of each scene.
FprReport affordance_conflict_fpr(const std::vector<RankedPrediction>& predictions,
                                  const std::vector<SceneRecord>& scenes, const Rulebook& rb,
                                  const std::vector<Phrase>& phrases, int top_k);

// Scores every (pair, bank phrase) of every scene with the bank's cached
// scripts. Parallel over scenes, results in scene order.
std::vector<RankedPrediction> predict(const std::vector<SceneRecord>& scenes,
                                      const ScriptBank& bank, const ModelParams& params,
                                      const ScoreOptions& options = {}, int threads = 1);

nlohmann::ordered_json to_json(const RankedPrediction& p);
RankedPrediction prediction_from_json(const nlohmann::json& j);
void write_predictions(const std::string& path, const std::vector<RankedPrediction>& preds,
                       const nlohmann::ordered_json& header_extra);
// An empty (or whitespace-only) file yields no predictions.
std::vector<RankedPrediction> read_predictions(const std::string& path);

}  // namespace scriptmatch
