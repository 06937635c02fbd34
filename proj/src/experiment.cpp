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

#include "scriptmatch/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include "scriptmatch/error.hpp"
#include "scriptmatch/io.hpp"
#include "scriptmatch/rng.hpp"
#include "scriptmatch/validate.hpp"

namespace scriptmatch {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::uint64_t kSceneTag = 0x7363656e;
constexpr std::uint64_t kUnseenTag = 0x756e7365;

namespace fs = std::filesystem;

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ordered_json opt_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(); }

std::optional<double> dropped_from_predictions(const std::vector<RankedPrediction>& preds,
                                               const std::vector<SceneRecord>& scenes,
                                               const std::vector<int>& unseen) {
  std::map<int, const SceneRecord*> by_id;
  for (const auto& s : scenes) by_id[s.id] = &s;
  double sum = 0.0;
  int n = 0;
  for (const auto& p : preds) {
    auto it = by_id.find(p.scene);
    if (it == by_id.end() || p.pair < 0 || p.pair >= static_cast<int>(it->second->pairs.size()))
      continue;
    const PairRecord& pr = it->second->pairs[p.pair];
    if (std::find(unseen.begin(), unseen.end(), p.phrase) != unseen.end()) continue;
    if (contains_id(pr.latent, p.phrase) && !contains_id(pr.observed, p.phrase)) {
      sum += sigmoid(p.score);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

ScoreOptions score_options(const Config& config) {
  Hyper h;
  Objective o;
  apply_mode(parse_mode(config.train.mode), h, o);
  return o.score;
}

}  // namespace

const std::vector<SceneRecord>& Dataset::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw Error(ExitCode::kUsage, "unknown split: " + name);
}

Dataset generate_dataset(const Config& config) {
  const auto problems = validate_rulebook(config.rulebook);
  if (!problems.empty()) throw DataError("rulebook: " + problems.front());
  Dataset d;
  d.phrases = make_phrases(config.rulebook, config.dims.text, config.data.embedding_seed);
  d.unseen = choose_unseen(d.phrases, config.data.unseen_fraction, mix_seed(config.seed, kUnseenTag));
  const std::uint64_t seed = mix_seed(config.seed, kSceneTag);
  const int nt = config.data.train_scenes, nv = config.data.val_scenes;
  auto train = generate(config.rulebook, d.phrases, config.dims, nt, seed, 0);
  auto val = generate(config.rulebook, d.phrases, config.dims, nv, seed, nt);
  auto test = generate(config.rulebook, d.phrases, config.dims, config.data.test_scenes, seed, nt + nv);
  d.train = std::move(train.scenes);
  d.val = std::move(val.scenes);
  d.test = std::move(test.scenes);
  d.warnings = train.warnings;
  return d;
}

ordered_json make_manifest(const Config& config, const Dataset& d) {
  auto count_pairs = [](const std::vector<SceneRecord>& s) {
    std::size_t n = 0;
    for (const auto& x : s) n += x.pairs.size();
    return n;
  };
  ordered_json m;
  m["schema"] = kManifestSchema;
  m["config_hash"] = config_hash(config);
  m["seed"] = config.seed;
  m["scenes"] = {{"train", d.train.size()}, {"val", d.val.size()}, {"test", d.test.size()}};
  m["pairs"] = {{"train", count_pairs(d.train)}, {"val", count_pairs(d.val)}, {"test", count_pairs(d.test)}};
  auto range = [](const std::vector<SceneRecord>& s) {
    return s.empty() ? ordered_json::array() : ordered_json::array({s.front().id, s.back().id});
  };
  m["scene_ids"] = {{"train", range(d.train)}, {"val", range(d.val)}, {"test", range(d.test)}};
  m["phrases"] = d.phrases.size();
  m["unseen_phrases"] = d.unseen;
  ordered_json texts = ordered_json::array();
  for (int id : d.unseen)
    for (const auto& p : d.phrases)
      if (p.id == id) texts.push_back(p.text);
  m["unseen_phrase_text"] = texts;
  m["miss_rate"] = config.rulebook.miss_rate;
  m["warnings"] = d.warnings;
  m["files"] = {{"config", "config.json"}, {"bank", "bank.jsonl"}, {"train", "train.jsonl"},
                {"val", "val.jsonl"},      {"test", "test.jsonl"}};
  return m;
}

void write_dataset(const std::string& dir, const Config& config, const Dataset& d) {
  fs::create_directories(dir);
  const fs::path root(dir);
  const std::string hash = config_hash(config);
  write_text((root / "manifest.json").string(), make_manifest(config, d).dump(2) + "\n");
  write_text((root / "config.json").string(), to_json(config).dump(2) + "\n");
  const ordered_json extra{{"config_hash", hash}};
  write_phrases((root / "bank.jsonl").string(), d.phrases, extra);
  write_scenes((root / "train.jsonl").string(), d.train, ordered_json{{"config_hash", hash}, {"split", "train"}});
  write_scenes((root / "val.jsonl").string(), d.val, ordered_json{{"config_hash", hash}, {"split", "val"}});
  write_scenes((root / "test.jsonl").string(), d.test, ordered_json{{"config_hash", hash}, {"split", "test"}});
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  json manifest;
  try {
    manifest = json::parse(read_text((root / "manifest.json").string()));
  } catch (const json::exception& e) {
    throw DataError("manifest: " + std::string(e.what()));
  }
  if (manifest.value("schema", std::string()) != kManifestSchema)
    throw DataError(dir + ": manifest schema mismatch");
  Dataset d;
  d.unseen = manifest.at("unseen_phrases").get<std::vector<int>>();
  d.warnings = manifest.value("warnings", std::vector<std::string>{});
  d.phrases = read_phrases((root / "bank.jsonl").string());
  std::vector<int> ids;
  for (const auto& p : d.phrases) {
    const auto v = validate(p);
    if (!v.empty()) throw DataError("phrase " + std::to_string(p.id) + ": " + v.front().code);
    ids.push_back(p.id);
  }
  d.train = read_scenes((root / "train.jsonl").string());
  d.val = read_scenes((root / "val.jsonl").string());
  d.test = read_scenes((root / "test.jsonl").string());
  for (const auto* split : {&d.train, &d.val, &d.test})
    for (const auto& s : *split) {
      const auto v = validate(s, &ids);
      if (!v.empty())
        throw DataError("scene " + std::to_string(s.id) + ": " + v.front().code + " (" +
                        v.front().detail + ")");
    }
  return d;
}

std::vector<int> training_positive_counts(const Dataset& data, const ScriptBank& bank) {
  std::vector<int> counts(bank.size(), 0);
  for (int b = 0; b < bank.size(); ++b) {
    const int id = bank.phrase(b).id;
    if (std::find(data.unseen.begin(), data.unseen.end(), id) != data.unseen.end()) continue;
    for (const auto& s : data.train)
      for (const auto& p : s.pairs)
        if (contains_id(p.observed, id)) ++counts[b];
  }
  return counts;
}

std::vector<Candidate> training_candidates(const Config& config, const Dataset& data,
                                           const ScriptBank& bank) {
  return build_candidates(data.train, bank, config.shape(), data.unseen,
                          config.train.negatives_per_pair, config.seed);
}

TrainResult run_training(const Config& config, const Dataset& data, const TrainOptions& options) {
  const ScriptBank bank = make_bank(config, data.phrases);
  const auto candidates = training_candidates(config, data, bank);
  return train(config, data.phrases, candidates, options);
}

ModelParams restore_params(const Config& config, const Dataset& data, const Checkpoint& ckpt) {
  ModelParams p = zero_params(config.shape(), config.hyper);
  (void)data;
  unflatten_params(ckpt.params, p);
  Objective o;
  apply_mode(parse_mode(config.train.mode), p.hyper, o);
  return p;
}

Checkpoint make_checkpoint(const Config& config, const TrainResult& result) {
  Checkpoint c;
  c.config_hash = config_hash(config);
  c.resume_key = resume_key(config);
  c.seed = config.seed;
  c.params = flatten_params(result.params);
  c.adam = result.adam;
  c.epochs_done = result.epochs_done;
  return c;
}

EvalOutput run_evaluation(const Config& config, const Dataset& data, const ModelParams& params,
                          const std::string& split, int threads,
                          const std::vector<RankedPrediction>* given) {
  const auto& scenes = data.split(split);
  ScriptBank bank = make_bank(config, data.phrases);
  bank.refresh(params);
  EvalOutput out;
  std::vector<std::string> warnings;
  std::vector<RankedPrediction> raw =
      given ? *given : predict(scenes, bank, params, score_options(config), threads);
  if (raw.empty()) warnings.push_back("no predictions: every metric is zero");
  const SuppressionThresholds th{config.eval.theta_text, config.eval.theta_script,
                                 config.eval.theta_align};
  out.predictions = rank_and_suppress(std::move(raw), bank, th);

  SplitSpec spec;
  spec.unseen = data.unseen;
  spec.train_positives = training_positive_counts(data, bank);
  spec.rare_cutoff = config.eval.rare_cutoff;
  const MapReport map = mean_average_precision(out.predictions, scenes, bank, spec, config.eval.iou);
  const FprReport fpr = affordance_conflict_fpr(out.predictions, scenes, config.rulebook,
                                                data.phrases, config.eval.top_k);
  const auto dropped = dropped_from_predictions(out.predictions, scenes, data.unseen);
  std::size_t suppressed = 0;
  for (const auto& p : out.predictions) suppressed += p.suppressed ? 1 : 0;

  ordered_json m;
  m["schema"] = kMetricsSchema;
  m["config_hash"] = config_hash(config);
  m["split"] = split;
  m["mode"] = config.train.mode;
  m["iou"] = config.eval.iou;
  m["predictions"] = out.predictions.size();
  m["suppressed"] = suppressed;
  m["map"] = {{"full", map.full},         {"rare", map.rare},     {"non_rare", map.non_rare},
              {"seen", map.seen},         {"unseen", map.unseen}, {"known_object", map.known_object},
              {"hm", map.hm}};
  m["fpr"] = {{"value", opt_json(fpr.fpr)}, {"probes", fpr.probes}, {"hits", fpr.hits},
              {"top_k", config.eval.top_k}};
  m["dropped_positive_mean_prob"] = opt_json(dropped);
  ordered_json per = ordered_json::array();
  for (const auto& pa : map.per_phrase) {
    const int b = bank.index_of(pa.phrase);
    per.push_back({{"id", pa.phrase},
                   {"text", bank.phrase(b).text},
                   {"ap", opt_json(pa.ap)},
                   {"ap_known_object", opt_json(pa.ap_known_object)},
                   {"n_truth", pa.n_truth},
                   {"seen", pa.seen},
                   {"rare", pa.rare}});
  }
  m["per_phrase"] = per;
  m["warnings"] = warnings;
  out.metrics = std::move(m);
  return out;
}

std::optional<double> dropped_positive_probability(const Config& config, const Dataset& data,
                                                   const ModelParams& params,
                                                   const std::string& split, int threads) {
  ScriptBank bank = make_bank(config, data.phrases);
  bank.refresh(params);
  const auto& scenes = data.split(split);
  const auto preds = predict(scenes, bank, params, score_options(config), threads);
  return dropped_from_predictions(preds, scenes, data.unseen);
}

AblationRow ablation_row(const std::string& mode, const ordered_json& metrics,
                         std::optional<double> dropped_positive) {
  AblationRow r;
  r.mode = mode;
  const auto& m = metrics.at("map");
  r.seen = m.at("seen").get<double>();
  r.unseen = m.at("unseen").get<double>();
  r.hm = m.at("hm").get<double>();
  r.rare = m.at("rare").get<double>();
  r.full = m.at("full").get<double>();
  r.non_rare = m.at("non_rare").get<double>();
  r.known_object = m.at("known_object").get<double>();
  const auto& f = metrics.at("fpr").at("value");
  if (!f.is_null()) r.fpr = f.get<double>();
  r.dropped_positive = dropped_positive;
  return r;
}

std::vector<AblationRow> run_ablation(const Config& config, const Dataset& data,
                                      const std::vector<std::string>& modes, int threads) {
  std::vector<AblationRow> rows;
  for (const auto& mode : modes) {
    parse_mode(mode);
    Config c = config;
    c.train.mode = mode;
    TrainOptions opts;
    opts.threads = threads;
    const TrainResult tr = run_training(c, data, opts);
    const EvalOutput ev = run_evaluation(c, data, tr.params, c.eval.split, threads);
    rows.push_back(ablation_row(mode, ev.metrics,
                                dropped_positive_probability(c, data, tr.params, "train", threads)));
  }
  return rows;
}

std::string to_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "mode,seen,unseen,hm,fpr,rare,full,non_rare,known_object,dropped_positive_prob\n";
  for (const auto& r : rows) {
    out << r.mode << ',' << r.seen << ',' << r.unseen << ',' << r.hm << ',';
    if (r.fpr) out << *r.fpr;
    out << ',' << r.rare << ',' << r.full << ',' << r.non_rare << ',' << r.known_object << ',';
    if (r.dropped_positive) out << *r.dropped_positive;
    out << '\n';
  }
  return out.str();
}

}  // namespace scriptmatch
