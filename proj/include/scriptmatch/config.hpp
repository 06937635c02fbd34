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
#include "scriptmatch/domain.hpp"
#include "scriptmatch/params.hpp"
#include "scriptmatch/synthgen.hpp"

namespace scriptmatch {

struct TrainConfig {
  int epochs = 30;
  int batch = 64;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::string mode = "full";
  int negatives_per_pair = -1;  // -1: every bank phrase is a candidate
  int counterfactuals = 4;
  double csc_anchor_threshold = 0.5;
  // Epochs during which only annotated candidates anchor the contrast term.
  int csc_warmup_epochs = 5;
  bool detach_interval_bounds = true;
  bool prior_init = true;  // fit script heads to the rulebook's prior scripts
  double prior_ridge = 1e-3;
};

struct EvalConfig {
  double iou = 0.5;
  int rare_cutoff = 10;
  int top_k = 5;
  double theta_text = 0.95;
  double theta_script = 0.05;
  double theta_align = 0.90;
  std::string split = "test";
  std::vector<std::string> ablate_modes = {"full", "closed_world", "no_ipl", "no_csc",
                                           "no_align", "no_calibration"};
};

struct DataConfig {
  int train_scenes = 400;
  int val_scenes = 50;
  int test_scenes = 200;
  double unseen_fraction = 0.2;
  std::uint64_t embedding_seed = 11;
};

struct Config {
  std::uint64_t seed = 0;
  Dims dims;
  Rulebook rulebook = Rulebook::defaults();
  Hyper hyper;
  TrainConfig train;
  EvalConfig eval;
  DataConfig data;

  ModelShape shape() const;
};

// Canonical form: every key present, fixed order, rulebook inlined.
nlohmann::ordered_json to_json(const Config& config);
// Missing keys keep their defaults. "rulebook" may be an inline object or a
// path (resolved relative to `base_dir`). Throws DataError on bad content.
Config config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
Config load_config(const std::string& path);

// "section.key=value" against the canonical JSON; the value is parsed as
// JSON when possible and taken as a string otherwise. Throws
// Error(kUsage) for an unknown key or malformed assignment.
Config apply_overrides(const Config& config, const std::vector<std::string>& assignments);

// Hex FNV-1a of the canonical JSON.
std::string config_hash(const Config& config);
// Hash of the keys that must match when resuming a run: everything except
// train.epochs and the eval section.
std::string resume_key(const Config& config);

std::vector<std::string> validate_config(const Config& config);

}  // namespace scriptmatch
