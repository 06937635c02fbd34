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
#include <utility>
#include <vector>

#include "json.hpp"
#include "scriptmatch/domain.hpp"

namespace scriptmatch {

inline constexpr const char* kSceneSchema = "scriptmatch/scenes/1";
inline constexpr const char* kPhraseSchema = "scriptmatch/phrases/1";
inline constexpr const char* kScriptSchema = "scriptmatch/scripts/1";

// Field order of every record is fixed; doubles round-trip exactly.
nlohmann::ordered_json to_json(const SlotVocabulary& vocab);
nlohmann::ordered_json to_json(const Phrase& phrase);
nlohmann::ordered_json to_json(const Script& script, int phrase_id);
nlohmann::ordered_json to_json(const SceneRecord& scene);
nlohmann::ordered_json to_json(const MatchResult& result);

// All readers throw DataError on missing or mistyped fields.
SlotVocabulary vocab_from_json(const nlohmann::json& j);
Phrase phrase_from_json(const nlohmann::json& j);
std::pair<int, Script> script_from_json(const nlohmann::json& j);
SceneRecord scene_from_json(const nlohmann::json& j);

struct JsonlFile {
  nlohmann::json header;  // first line, carries "schema"
  std::vector<nlohmann::json> records;
};

// One compact record per line, header first. Throws DataError on IO failure.
void write_jsonl(const std::string& path, const nlohmann::ordered_json& header,
                 const std::vector<nlohmann::ordered_json>& records);
// Throws DataError when the file is unreadable, a line does not parse or the
// header schema differs from `schema`.
JsonlFile read_jsonl(const std::string& path, const std::string& schema);

void write_scenes(const std::string& path, const std::vector<SceneRecord>& scenes,
                  const nlohmann::ordered_json& header_extra = nlohmann::ordered_json::object());
std::vector<SceneRecord> read_scenes(const std::string& path);

void write_phrases(const std::string& path, const std::vector<Phrase>& phrases,
                   const nlohmann::ordered_json& header_extra = nlohmann::ordered_json::object());
std::vector<Phrase> read_phrases(const std::string& path);

void write_scripts(const std::string& path, const std::vector<std::pair<int, Script>>& scripts);
std::vector<std::pair<int, Script>> read_scripts(const std::string& path);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace scriptmatch
