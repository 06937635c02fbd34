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

#include "scriptmatch/io.hpp"

#include <fstream>
#include <sstream>

#include "scriptmatch/error.hpp"

namespace scriptmatch {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json box_json(const Box& b) { return ordered_json::array({b.x1, b.y1, b.x2, b.y2}); }

Box box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw DataError("box must be [x1, y1, x2, y2]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

template <class F>
auto guarded(const char* what, F&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw DataError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

ordered_json to_json(const SlotVocabulary& vocab) {
  ordered_json j;
  for (Slot s : kAllSlots) j[std::string(slot_name(s))] = vocab.values[slot_index(s)];
  return j;
}

ordered_json to_json(const Phrase& p) {
  ordered_json j;
  j["id"] = p.id;
  j["text"] = p.text;
  j["verb"] = p.verb;
  j["object_category"] = p.object_category;
  j["embedding"] = p.embedding;
  return j;
}

ordered_json to_json(const Script& script, int phrase_id) {
  ordered_json j;
  j["phrase_id"] = phrase_id;
  ordered_json dist, rel;
  for (Slot s : kAllSlots) {
    dist[std::string(slot_name(s))] = script.dist[slot_index(s)];
    rel[std::string(slot_name(s))] = script.reliability[slot_index(s)];
  }
  j["dist"] = dist;
  j["reliability"] = rel;
  return j;
}

ordered_json to_json(const SceneRecord& scene) {
  ordered_json j;
  j["id"] = scene.id;
  j["width"] = scene.width;
  j["height"] = scene.height;
  j["humans"] = ordered_json::array();
  for (const auto& h : scene.humans) j["humans"].push_back(box_json(h));
  j["objects"] = ordered_json::array();
  for (const auto& o : scene.objects)
    j["objects"].push_back(ordered_json{{"box", box_json(o.box)}, {"category", o.category}});
  j["pairs"] = ordered_json::array();
  for (const auto& p : scene.pairs) {
    ordered_json pj;
    pj["human"] = p.human;
    pj["object"] = p.object;
    const PairDescriptor& x = p.descriptor;
    pj["descriptor"] = ordered_json{{"f_h", x.human},       {"f_o", x.object}, {"f_u", x.union_region},
                                    {"p", x.pose},          {"g", x.geometry}, {"r_part", x.part},
                                    {"r_ctx", x.context},   {"object_category", x.object_category}};
    ordered_json states;
    for (Slot s : kAllSlots) states[std::string(slot_name(s))] = p.slot_states[slot_index(s)];
    pj["slot_states"] = states;
    pj["latent"] = p.latent;
    pj["observed"] = p.observed;
    pj["affordance"] = p.affordance;
    j["pairs"].push_back(std::move(pj));
  }
  return j;
}

ordered_json to_json(const MatchResult& r) {
  ordered_json j;
  ordered_json m;
  for (Slot s : kAllSlots) m[std::string(slot_name(s))] = r.compat[slot_index(s)];
  j["m"] = m;
  j["gamma"] = r.gamma;
  j["delta"] = r.delta;
  j["s_base"] = r.s_base;
  j["s_hat"] = r.s_hat;
  return j;
}

SlotVocabulary vocab_from_json(const json& j) {
  return guarded("slot vocabulary", [&] {
    SlotVocabulary v;
    for (Slot s : kAllSlots)
      v.values[slot_index(s)] = j.at(std::string(slot_name(s))).get<std::vector<std::string>>();
    return v;
  });
}

Phrase phrase_from_json(const json& j) {
  return guarded("phrase", [&] {
    Phrase p;
    p.id = j.at("id").get<int>();
    p.text = j.at("text").get<std::string>();
    p.verb = j.at("verb").get<std::string>();
    p.object_category = j.at("object_category").get<std::string>();
    p.embedding = j.at("embedding").get<std::vector<double>>();
    return p;
  });
}

std::pair<int, Script> script_from_json(const json& j) {
  return guarded("script", [&] {
    Script s;
    for (Slot k : kAllSlots) {
      const std::string name(slot_name(k));
      s.dist[slot_index(k)] = j.at("dist").at(name).get<std::vector<double>>();
      s.reliability[slot_index(k)] = j.at("reliability").at(name).get<double>();
    }
    return std::pair<int, Script>{j.at("phrase_id").get<int>(), std::move(s)};
  });
}

SceneRecord scene_from_json(const json& j) {
  return guarded("scene", [&] {
    SceneRecord s;
    s.id = j.at("id").get<int>();
    s.width = j.at("width").get<double>();
    s.height = j.at("height").get<double>();
    for (const auto& h : j.at("humans")) s.humans.push_back(box_from(h));
    for (const auto& o : j.at("objects"))
      s.objects.push_back({box_from(o.at("box")), o.at("category").get<std::string>()});
    for (const auto& pj : j.at("pairs")) {
      PairRecord p;
      p.human = pj.at("human").get<int>();
      p.object = pj.at("object").get<int>();
      const json& d = pj.at("descriptor");
      p.descriptor.human = d.at("f_h").get<std::vector<double>>();
      p.descriptor.object = d.at("f_o").get<std::vector<double>>();
      p.descriptor.union_region = d.at("f_u").get<std::vector<double>>();
      p.descriptor.pose = d.at("p").get<std::vector<double>>();
      p.descriptor.geometry = d.at("g").get<std::vector<double>>();
      p.descriptor.part = d.at("r_part").get<std::vector<double>>();
      p.descriptor.context = d.at("r_ctx").get<std::vector<double>>();
      p.descriptor.object_category = d.at("object_category").get<std::string>();
      for (Slot k : kAllSlots)
        p.slot_states[slot_index(k)] = pj.at("slot_states").at(std::string(slot_name(k))).get<int>();
      p.latent = pj.at("latent").get<std::vector<int>>();
      p.observed = pj.at("observed").get<std::vector<int>>();
      p.affordance = pj.at("affordance").get<std::vector<int>>();
      s.pairs.push_back(std::move(p));
    }
    return s;
  });
}

void write_jsonl(const std::string& path, const ordered_json& header,
                 const std::vector<ordered_json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << header.dump() << '\n';
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw DataError("write failed: " + path);
}

JsonlFile read_jsonl(const std::string& path, const std::string& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  JsonlFile f;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (line_no == 1) {
      if (!j.is_object() || j.value("schema", std::string()) != schema)
        throw DataError(path + ": expected schema " + schema);
      f.header = std::move(j);
    } else {
      f.records.push_back(std::move(j));
    }
  }
  if (line_no == 0) throw DataError(path + ": empty file");
  return f;
}

void write_scenes(const std::string& path, const std::vector<SceneRecord>& scenes,
                  const ordered_json& header_extra) {
  ordered_json header{{"schema", kSceneSchema}, {"count", scenes.size()}};
  for (const auto& [k, v] : header_extra.items()) header[k] = v;
  std::vector<ordered_json> records;
  records.reserve(scenes.size());
  for (const auto& s : scenes) records.push_back(to_json(s));
  write_jsonl(path, header, records);
}

std::vector<SceneRecord> read_scenes(const std::string& path) {
  const JsonlFile f = read_jsonl(path, kSceneSchema);
  std::vector<SceneRecord> out;
  out.reserve(f.records.size());
  for (const auto& r : f.records) out.push_back(scene_from_json(r));
  return out;
}

void write_phrases(const std::string& path, const std::vector<Phrase>& phrases,
                   const ordered_json& header_extra) {
  ordered_json header{{"schema", kPhraseSchema}, {"count", phrases.size()}};
  for (const auto& [k, v] : header_extra.items()) header[k] = v;
  std::vector<ordered_json> records;
  for (const auto& p : phrases) records.push_back(to_json(p));
  write_jsonl(path, header, records);
}

std::vector<Phrase> read_phrases(const std::string& path) {
  const JsonlFile f = read_jsonl(path, kPhraseSchema);
  std::vector<Phrase> out;
  for (const auto& r : f.records) out.push_back(phrase_from_json(r));
  return out;
}

void write_scripts(const std::string& path, const std::vector<std::pair<int, Script>>& scripts) {
  std::vector<ordered_json> records;
  for (const auto& [id, s] : scripts) records.push_back(to_json(s, id));
  write_jsonl(path, ordered_json{{"schema", kScriptSchema}, {"count", scripts.size()}}, records);
}

std::vector<std::pair<int, Script>> read_scripts(const std::string& path) {
  const JsonlFile f = read_jsonl(path, kScriptSchema);
  std::vector<std::pair<int, Script>> out;
  for (const auto& r : f.records) out.push_back(script_from_json(r));
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace scriptmatch
