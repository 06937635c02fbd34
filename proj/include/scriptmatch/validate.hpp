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

#include <string>
#include <vector>

#include "scriptmatch/domain.hpp"
#include "scriptmatch/params.hpp"

namespace scriptmatch {

// Machine-readable codes:
//   distribution-not-normalized, distribution-negative, distribution-size,
//   reliability-out-of-range, embedding-not-normalized, non-finite,
//   box-out-of-bounds, negative-distance, iou-out-of-range, bad-index,
//   annotation-contradicts-latent, unknown-phrase, unsorted-ids,
//   gamma-out-of-range, delta-out-of-range, calibration-mismatch
struct Violation {
  std::string code;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

// `vocab` (optional) fixes the expected distribution lengths.
std::vector<Violation> validate(const Script& script, const SlotVocabulary* vocab = nullptr);
std::vector<Violation> validate(const Phrase& phrase);
// `bank` (optional) is the set of known phrase ids; observed, latent and
// affordance ids must all be members.
std::vector<Violation> validate(const SceneRecord& scene, const std::vector<int>* bank = nullptr);
std::vector<Violation> validate(const MatchResult& result, const Hyper& hyper);

bool has_code(const std::vector<Violation>& violations, const std::string& code);

}  // namespace scriptmatch
