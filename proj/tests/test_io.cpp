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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "oracles.hpp"
#include "scriptmatch/config.hpp"
#include "scriptmatch/error.hpp"
#include "scriptmatch/io.hpp"
#include "scriptmatch/synthgen.hpp"
#include "scriptmatch/validate.hpp"

using namespace scriptmatch;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<SceneRecord> some_scenes(int n) {
  const Rulebook rb = Rulebook::defaults();
  Dims d;
  d.text = 8;
  return generate(rb, make_phrases(rb, 8, 1), d, n, 17).scenes;
}

}  // namespace

TEST(Domain, SlotNamesRoundTrip) {
  for (Slot s : kAllSlots) EXPECT_EQ(parse_slot(slot_name(s)), s);
  EXPECT_EQ(parse_slot("body"), Slot::kBody);
  EXPECT_EQ(parse_slot("geom"), Slot::kGeometry);
  EXPECT_EQ(parse_slot("aff"), Slot::kAffordance);
  EXPECT_EQ(parse_slot("state"), Slot::kState);
  EXPECT_FALSE(parse_slot("smell").has_value());
  EXPECT_EQ(slot_name(Slot::kState), "object_state");
}

TEST(Domain, VocabularyAndBoxes) {
  const SlotVocabulary v = SlotVocabulary::defaults();
  EXPECT_EQ(v.find(Slot::kContact, "grasp"), 2);
  EXPECT_FALSE(v.find(Slot::kContact, "hug").has_value());
  int total = 0;
  for (Slot s : kAllSlots) total += v.size(s);
  EXPECT_EQ(v.total(), total);
  EXPECT_DOUBLE_EQ(iou(Box{0, 0, 2, 2}, Box{1, 1, 3, 3}), 1.0 / 7.0);
  EXPECT_EQ(iou(Box{0, 0, 1, 1}, Box{2, 2, 3, 3}), 0.0);
  EXPECT_EQ(iou(Box{0, 0, 0, 0}, Box{0, 0, 0, 0}), 0.0);
  EXPECT_TRUE(contains_id({1, 4, 9}, 4));
  EXPECT_FALSE(contains_id({1, 4, 9}, 5));
  Script s;
  s.dist[0] = {0.2, 0.4, 0.4};
  EXPECT_EQ(s.argmax(Slot::kBody), 1);  // first of the tied maxima
}

TEST(Io, ScenesRoundTripExactly) {
  TempDir dir("scriptmatch_io_scenes");
  const auto scenes = some_scenes(6);
  write_scenes(dir.file("s.jsonl"), scenes, {{"note", "x"}});
  const auto back = read_scenes(dir.file("s.jsonl"));
  ASSERT_EQ(back.size(), scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i)
    EXPECT_EQ(to_json(back[i]).dump(), to_json(scenes[i]).dump());
  EXPECT_EQ(back[2].pairs[0].descriptor.pose, scenes[2].pairs[0].descriptor.pose);
  const JsonlFile raw = read_jsonl(dir.file("s.jsonl"), kSceneSchema);
  EXPECT_EQ(raw.header["note"], "x");
  EXPECT_THROW(read_jsonl(dir.file("s.jsonl"), kPhraseSchema), DataError);
}

TEST(Io, PhrasesAndScriptsRoundTrip) {
  TempDir dir("scriptmatch_io_phrases");
  const Rulebook rb = Rulebook::defaults();
  const auto phrases = make_phrases(rb, 8, 2);
  write_phrases(dir.file("p.jsonl"), phrases);
  const auto back = read_phrases(dir.file("p.jsonl"));
  ASSERT_EQ(back.size(), phrases.size());
  EXPECT_EQ(back[5].embedding, phrases[5].embedding);
  EXPECT_EQ(back[5].text, phrases[5].text);

  std::vector<std::pair<int, Script>> scripts;
  for (const auto& p : phrases) scripts.push_back({p.id, prior_script(rb, p)});
  write_scripts(dir.file("s.jsonl"), scripts);
  const auto sb = read_scripts(dir.file("s.jsonl"));
  ASSERT_EQ(sb.size(), scripts.size());
  EXPECT_EQ(sb[3].first, scripts[3].first);
  EXPECT_EQ(sb[3].second.dist, scripts[3].second.dist);
  EXPECT_EQ(sb[3].second.reliability, scripts[3].second.reliability);
  EXPECT_EQ(to_json(rb.vocab).dump(), to_json(vocab_from_json(to_json(rb.vocab))).dump());
}

TEST(Io, MalformedInputIsADataError) {
  TempDir dir("scriptmatch_io_bad");
  EXPECT_THROW(read_text(dir.file("missing")), DataError);
  EXPECT_THROW(read_scenes(dir.file("missing")), DataError);
  write_text(dir.file("bad.jsonl"), std::string("{\"schema\":\"") + kSceneSchema + "\"}\n{not json\n");
  EXPECT_THROW(read_scenes(dir.file("bad.jsonl")), DataError);
  auto j = to_json(some_scenes(1)[0]);
  j.erase("pairs");
  EXPECT_THROW(scene_from_json(j), DataError);
  nlohmann::json p = to_json(Phrase{1, "hold cup", "hold", "cup", {1.0}});
  p["id"] = "one";
  EXPECT_THROW(phrase_from_json(p), DataError);
}

TEST(Validate, ScriptCodes) {
  const SlotVocabulary vocab = SlotVocabulary::defaults();
  Script s = prior_script(Rulebook::defaults(), make_phrases(Rulebook::defaults(), 8, 1)[0]);
  EXPECT_TRUE(validate(s, &vocab).empty());
  Script bad = s;
  bad.dist[0][0] += 0.1;
  EXPECT_TRUE(has_code(validate(bad), "distribution-not-normalized"));
  bad = s;
  bad.dist[1][0] = -bad.dist[1][0];
  EXPECT_TRUE(has_code(validate(bad), "distribution-negative"));
  bad = s;
  bad.reliability[2] = 1.0;
  EXPECT_TRUE(has_code(validate(bad), "reliability-out-of-range"));
  bad = s;
  bad.dist[3].push_back(0.0);
  EXPECT_TRUE(has_code(validate(bad, &vocab), "distribution-size"));
  bad = s;
  bad.dist[4][0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_TRUE(has_code(validate(bad), "non-finite"));
}

TEST(Validate, PhraseSceneAndMatchCodes) {
  EXPECT_TRUE(has_code(validate(Phrase{0, "x", "x", "cup", {0.5, 0.5}}), "embedding-not-normalized"));
  EXPECT_TRUE(validate(Phrase{0, "x", "x", "cup", {0.6, 0.8}}).empty());

  SceneRecord s = some_scenes(1)[0];
  std::vector<int> ids;
  for (int i = 0; i < 26; ++i) ids.push_back(i);
  ASSERT_TRUE(validate(s, &ids).empty());
  SceneRecord bad = s;
  bad.pairs[0].observed.push_back(99);
  auto v = validate(bad, &ids);
  EXPECT_TRUE(has_code(v, "unknown-phrase"));
  EXPECT_TRUE(has_code(v, "annotation-contradicts-latent"));
  bad = s;
  bad.humans[0].x2 = s.width + 50;
  EXPECT_TRUE(has_code(validate(bad), "box-out-of-bounds"));
  bad = s;
  bad.pairs[0].human = 7;
  EXPECT_TRUE(has_code(validate(bad), "bad-index"));
  bad = s;
  bad.pairs[0].descriptor.geometry[kIou] = 1.5;
  EXPECT_TRUE(has_code(validate(bad), "iou-out-of-range"));
  bad = s;
  bad.pairs[0].descriptor.geometry[kHandDistance] = -0.1;
  EXPECT_TRUE(has_code(validate(bad), "negative-distance"));

  Hyper h;
  MatchResult r;
  r.gamma = 0.5;
  r.delta = 0.2;
  r.s_base = 1.0;
  r.s_hat = 1.0 + std::log(0.5 + h.eps) - 0.2;
  EXPECT_TRUE(validate(r, h).empty());
  r.s_hat += 1e-6;
  EXPECT_TRUE(has_code(validate(r, h), "calibration-mismatch"));
  r.delta = 1.0;
  EXPECT_TRUE(has_code(validate(r, h), "delta-out-of-range"));
  r.gamma = 0.0;
  EXPECT_TRUE(has_code(validate(r, h), "gamma-out-of-range"));
}

TEST(Config, CanonicalJsonRoundTripAndHash) {
  Config c;
  c.seed = 5;
  c.train.mode = "no_ipl";
  c.hyper.tau = 0.25;
  const auto j = to_json(c);
  const Config back = config_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
  Config d = c;
  d.hyper.tau = 0.26;
  EXPECT_NE(config_hash(d), config_hash(c));
  // Missing keys keep defaults.
  const Config partial = config_from_json(nlohmann::json::parse(R"({"seed": 3})"));
  EXPECT_EQ(partial.seed, 3u);
  EXPECT_EQ(partial.train.epochs, Config{}.train.epochs);
}

TEST(Config, ResumeKeyIgnoresEpochsAndEval) {
  Config a, b;
  b.train.epochs = 99;
  b.eval.top_k = 3;
  EXPECT_EQ(resume_key(a), resume_key(b));
  EXPECT_NE(config_hash(a), config_hash(b));
  b.train.lr = 0.5;
  EXPECT_NE(resume_key(a), resume_key(b));
}

TEST(Config, Overrides) {
  const Config c = apply_overrides(Config{}, {"hyper.tau=0.7", "train.mode=closed_world",
                                              "eval.ablate_modes=[\"full\"]", "seed=12"});
  EXPECT_EQ(c.hyper.tau, 0.7);
  EXPECT_EQ(c.train.mode, "closed_world");
  EXPECT_EQ(c.eval.ablate_modes, std::vector<std::string>{"full"});
  EXPECT_EQ(c.seed, 12u);
  auto code = [](const std::vector<std::string>& sets) {
    try {
      apply_overrides(Config{}, sets);
    } catch (const Error& e) {
      return static_cast<int>(e.code());
    }
    return 0;
  };
  EXPECT_EQ(code({"hyper.nope=1"}), 1);
  EXPECT_EQ(code({"novalue"}), 1);
  EXPECT_EQ(code({"=3"}), 1);
  EXPECT_EQ(code({"train.epochs=\"many\""}), 1);
}

TEST(Config, FileWithRulebookPath) {
  TempDir dir("scriptmatch_config_file");
  Rulebook rb = Rulebook::defaults();
  rb.miss_rate = 0.1;
  write_text(dir.file("rules.json"), to_json(rb).dump(2));
  write_text(dir.file("config.json"), R"({"seed": 4, "rulebook": "rules.json"})");
  const Config c = load_config(dir.file("config.json"));
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.rulebook.miss_rate, 0.1);
  write_text(dir.file("broken.json"), "{");
  EXPECT_THROW(load_config(dir.file("broken.json")), DataError);
  EXPECT_THROW(load_config(dir.file("absent.json")), DataError);
}

TEST(Config, Validation) {
  EXPECT_TRUE(validate_config(Config{}).empty());
  Config c;
  c.hyper.tau = 0.0;
  c.hyper.alpha_lower = 1.5;
  c.train.batch = 0;
  c.eval.split = "dev";
  c.data.unseen_fraction = 1.0;
  EXPECT_EQ(validate_config(c).size(), 5u);
}
