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

namespace scriptmatch {

inline constexpr const char* kRulebookSchema = "scriptmatch/rulebook/1";

struct CategorySpec {
  std::string name;
  std::string affordance;          // value of the affordance slot
  std::vector<std::string> verbs;  // verbs this object affords
};

// Required values per slot; an empty list means "don't care". The
// affordance slot is implied by the phrase's object and is not listed.
struct VerbSpec {
  std::string name;
  PerSlot<std::vector<std::string>> required;
};

struct PhraseSpec {
  std::string verb;
  std::string object;
};

struct Rulebook {
  std::string schema = kRulebookSchema;
  SlotVocabulary vocab = SlotVocabulary::defaults();
  std::vector<CategorySpec> categories;
  std::vector<VerbSpec> verbs;
  std::vector<PhraseSpec> phrases;  // empty: every (verb, category) the category affords

  double noise = 0.5;             // sigma of descriptor noise
  double miss_rate = 0.3;         // annotation drop probability
  double interaction_rate = 0.6;  // chance an object is engaged by some human
  int min_humans = 1;
  int max_humans = 2;
  int min_objects = 1;
  int max_objects = 3;
  double image_width = 1000;
  double image_height = 600;
  std::uint64_t world_seed = 7;  // fixes the descriptor render

  // 8 categories, 10 verbs, 26 phrases: hold/carry/drink-from/kick/look-at
  // cup, ride/push/repair/look-at bicycle, wear/hold/carry hat, cut/hold/
  // look-at cake, look-at/repair/carry television, hold/carry knife,
  // kick/hold/carry ball, hold/carry/look-at book.
  static Rulebook defaults();

  const CategorySpec* category(const std::string& name) const;
  const VerbSpec* verb(const std::string& name) const;
  std::vector<PhraseSpec> resolved_phrases() const;
};

nlohmann::ordered_json to_json(const Rulebook& rb);
// Throws DataError on schema mismatch or malformed content.
Rulebook rulebook_from_json(const nlohmann::json& j);
Rulebook load_rulebook(const std::string& path);

// Empty when valid.
std::vector<std::string> validate_rulebook(const Rulebook& rb);

std::vector<std::string> category_names(const Rulebook& rb);

// Phrases with ids 0..n-1 in resolved order and seeded embeddings.
std::vector<Phrase> make_phrases(const Rulebook& rb, int text_dim, std::uint64_t seed);

// Soft script encoding the rulebook: required values share 0.9 of the mass,
// don't-care slots are uniform; reliability 0.85 for constrained slots and
// 0.15 otherwise. The affordance slot requires the object's affordance.
Script prior_script(const Rulebook& rb, const Phrase& phrase);

// True iff the phrase's object is `category` and every constrained slot
// holds an allowed value.
bool phrase_holds(const Rulebook& rb, const Phrase& phrase, const std::string& category,
                  const PerSlot<int>& slot_states);

struct GenerateResult {
  std::vector<SceneRecord> scenes;
  std::vector<std::string> warnings;  // dead phrases
};

// Scenes `first_id .. first_id + n_scenes - 1`, each a pure function of
// (rulebook, phrases, dims, seed, scene id).
GenerateResult generate(const Rulebook& rb, const std::vector<Phrase>& phrases, const Dims& dims,
                        int n_scenes, std::uint64_t seed, int first_id = 0);

// Phrases that can never hold under the sampling process.
std::vector<std::string> dead_phrases(const Rulebook& rb, const std::vector<Phrase>& phrases);

struct Probe {
  int scene = 0;  // scene id
  int pair = 0;   // index into scene.pairs
  int phrase = 0; // phrase id

  bool operator==(const Probe&) const = default;
  auto operator<=>(const Probe&) const = default;
};

// Affordance-conflict probes: the object affords the phrase, the
// interaction is latent-false and at least one constrained slot is
// contradicted by the ground-truth state. Sorted.
std::vector<Probe> probe_set(const std::vector<SceneRecord>& scenes, const Rulebook& rb,
                             const std::vector<Phrase>& phrases);

// Held-out phrases, round(fraction * phrases) in total. Whole verb families
// first (up to round(fraction * verbs) of them, filling at most half the
// total), then single phrases whose verb and object both keep a seen phrase.
std::vector<int> choose_unseen(const std::vector<Phrase>& phrases, double fraction,
                               std::uint64_t seed);

// Geometry slot value implied by a (human, object) box pair.
int classify_geometry(const Box& human, const Box& object);

}  // namespace scriptmatch
