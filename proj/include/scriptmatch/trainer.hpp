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
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scriptmatch/config.hpp"
#include "scriptmatch/losses.hpp"
#include "scriptmatch/params.hpp"
#include "scriptmatch/script_bank.hpp"

namespace scriptmatch {

enum class ModeKind { kFull, kClosedWorld, kNoIpl, kNoCsc, kNoAlign, kNoCalibration, kDropSlot };

struct Mode {
  ModeKind kind = ModeKind::kFull;
  int slot = -1;  // kDropSlot only

  std::string name() const;
  bool operator==(const Mode&) const = default;
};

// full, closed_world, no_ipl, no_csc, no_align, no_calibration, drop_slot:<slot>.
// Throws Error(kUsage) for anything else.
Mode parse_mode(const std::string& text);

// Hyperparameters and objective switches for a mode.
void apply_mode(const Mode& mode, Hyper& hyper, Objective& objective);

// Uniform(-a, a) with a = 1/sqrt(fan_in) for every weight, zero token
// biases, conflict bias -2. Throws std::invalid_argument on a zero dimension.
ModelParams init_params(const ModelShape& shape, const Hyper& hyper, std::uint64_t seed);

// One candidate per (pair, bank phrase). Labels of phrases in `masked_ids`
// are forced to 0. With negatives_per_pair >= 0, that many unannotated
// candidates per pair are kept (seeded choice).
std::vector<Candidate> build_candidates(const std::vector<SceneRecord>& scenes,
                                        const ScriptBank& bank, const ModelShape& shape,
                                        const std::vector<int>& masked_ids,
                                        int negatives_per_pair, std::uint64_t seed);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

void adam_update(std::vector<double>& flat, const std::vector<double>& grad, AdamState& state,
                 const TrainConfig& config);

struct EpochLog {
  int epoch = 0;
  int steps = 0;
  LossTerms mean;  // mean over steps of the per-batch terms
};

nlohmann::ordered_json to_json(const EpochLog& log);

struct Checkpoint {
  std::string config_hash;
  std::string resume_key;
  std::uint64_t seed = 0;
  std::vector<double> params;
  AdamState adam;
  int epochs_done = 0;
};

// Binary, little-endian, magic header. Throws DataError on IO failure, a
// bad magic or a truncated file.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

struct TrainOptions {
  int threads = 1;
  const Checkpoint* resume = nullptr;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  ModelParams params;
  AdamState adam;
  std::vector<EpochLog> log;
  int epochs_done = 0;
};

// Initial parameters for a run: seeded init, then (optionally) the script
// heads fitted to the rulebook's prior scripts.
ModelParams initial_params(const Config& config, const std::vector<Phrase>& phrases);

ScriptBank make_bank(const Config& config, const std::vector<Phrase>& phrases);

// Runs config.train.epochs epochs of Adam over `candidates`. Throws
// NumericError naming the batch ("epoch E batch B") on divergence.
TrainResult train(const Config& config, const std::vector<Phrase>& phrases,
                  const std::vector<Candidate>& candidates, const TrainOptions& options = {});

}  // namespace scriptmatch
