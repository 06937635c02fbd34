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
#include "scriptmatch/config.hpp"
#include "scriptmatch/eval.hpp"
#include "scriptmatch/trainer.hpp"

namespace scriptmatch {

inline constexpr const char* kManifestSchema = "scriptmatch/manifest/1";
inline constexpr const char* kMetricsSchema = "scriptmatch/metrics/1";

struct Dataset {
  std::vector<Phrase> phrases;
  std::vector<int> unseen;  // phrase ids held out of training annotations
  std::vector<SceneRecord> train, val, test;
  std::vector<std::string> warnings;

  // Throws Error(kUsage) for an unknown split name.
  const std::vector<SceneRecord>& split(const std::string& name) const;
};

// Pure function of the config: phrases, unseen split and the three scene
// splits (consecutive scene ids).
Dataset generate_dataset(const Config& config);

nlohmann::ordered_json make_manifest(const Config& config, const Dataset& data);

// manifest.json, config.json, bank.jsonl, train/val/test.jsonl.
void write_dataset(const std::string& dir, const Config& config, const Dataset& data);
// Throws DataError on missing files or records failing validation.
Dataset load_dataset(const std::string& dir);

// Annotated training positives per bank index, unseen phrases counted as 0.
std::vector<int> training_positive_counts(const Dataset& data, const ScriptBank& bank);

std::vector<Candidate> training_candidates(const Config& config, const Dataset& data,
                                           const ScriptBank& bank);

TrainResult run_training(const Config& config, const Dataset& data,
                         const TrainOptions& options = {});

// Parameters restored from a checkpoint with the mode's hyperparameters.
ModelParams restore_params(const Config& config, const Dataset& data, const Checkpoint& ckpt);
Checkpoint make_checkpoint(const Config& config, const TrainResult& result);

struct EvalOutput {
  std::vector<RankedPrediction> predictions;
  nlohmann::ordered_json metrics;
};

// Scores the split (or uses `given` predictions), suppresses, and computes
// every metric. `params.hyper` must already reflect the mode.
EvalOutput run_evaluation(const Config& config, const Dataset& data, const ModelParams& params,
                          const std::string& split, int threads = 1,
                          const std::vector<RankedPrediction>* given = nullptr);

// Mean sigmoid(s_hat) over (pair, seen phrase) candidates with z = 1 and
// y = 0 in the split. Absent when there are none.
std::optional<double> dropped_positive_probability(const Config& config, const Dataset& data,
                                                   const ModelParams& params,
                                                   const std::string& split, int threads = 1);

struct AblationRow {
  std::string mode;
  double seen = 0, unseen = 0, hm = 0, rare = 0, full = 0, non_rare = 0, known_object = 0;
  std::optional<double> fpr;
  std::optional<double> dropped_positive;
};

AblationRow ablation_row(const std::string& mode, const nlohmann::ordered_json& metrics,
                         std::optional<double> dropped_positive);
std::vector<AblationRow> run_ablation(const Config& config, const Dataset& data,
                                      const std::vector<std::string>& modes, int threads = 1);
std::string to_csv(const std::vector<AblationRow>& rows);

}  // namespace scriptmatch
