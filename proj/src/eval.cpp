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

#include "scriptmatch/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "scriptmatch/error.hpp"
#include "scriptmatch/io.hpp"
#include "scriptmatch/parallel.hpp"
#include "scriptmatch/tokenizer.hpp"

namespace scriptmatch {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

double kl_to_mixture(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    const double m = 0.5 * (p[i] + q[i]);
    s += p[i] * std::log(p[i] / m);
  }
  return s;
}

std::vector<double> compat_vector(const MatchResult& r) { return {r.compat.begin(), r.compat.end()}; }

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

bool score_order(const RankedPrediction& a, const RankedPrediction& b) {
  if (a.score != b.score) return a.score > b.score;
  return std::tie(a.scene, a.pair) < std::tie(b.scene, b.pair);
}

}  // namespace

bool ranks_before(const RankedPrediction& a, const RankedPrediction& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.phrase < b.phrase;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

double js_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  return 0.5 * kl_to_mixture(p, q) + 0.5 * kl_to_mixture(q, p);
}

double mean_script_divergence(const Script& a, const Script& b) {
  double s = 0.0;
  for (int k = 0; k < kNumSlots; ++k) s += js_divergence(a.dist[k], b.dist[k]);
  return s / kNumSlots;
}

bool duplicates(const RankedPrediction& p, const RankedPrediction& q, const ScriptBank& bank,
                const SuppressionThresholds& th) {
  if (p.scene != q.scene || p.pair != q.pair) return false;
  const int ip = bank.index_of(p.phrase), iq = bank.index_of(q.phrase);
  if (ip < 0 || iq < 0) return false;
  return cosine(bank.phrase(ip).embedding, bank.phrase(iq).embedding) > th.text &&
         mean_script_divergence(bank.script(ip), bank.script(iq)) < th.script &&
         cosine(compat_vector(p.match), compat_vector(q.match)) > th.align;
}

std::vector<RankedPrediction> rank_and_suppress(std::vector<RankedPrediction> preds,
                                                const ScriptBank& bank,
                                                const SuppressionThresholds& th) {
  std::stable_sort(preds.begin(), preds.end(), [](const RankedPrediction& a, const RankedPrediction& b) {
    if (a.scene != b.scene) return a.scene < b.scene;
    if (a.score != b.score) return a.score > b.score;
    if (a.phrase != b.phrase) return a.phrase < b.phrase;
    return a.pair < b.pair;
  });
  // Kept predictions per (scene, pair).
  std::map<std::pair<int, int>, std::vector<std::size_t>> kept;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    RankedPrediction& q = preds[i];
    q.suppressed = false;
    q.suppressor = -1;
    auto& group = kept[{q.scene, q.pair}];
    for (std::size_t j : group) {
      if (duplicates(preds[j], q, bank, th)) {
        q.suppressed = true;
        q.suppressor = preds[j].phrase;
        break;
      }
    }
    if (!q.suppressed) group.push_back(i);
  }
  return preds;
}

std::vector<GroundTruth> ground_truth(const std::vector<SceneRecord>& scenes) {
  std::vector<GroundTruth> out;
  for (const auto& s : scenes)
    for (const auto& p : s.pairs)
      for (int id : p.latent) out.push_back({s.id, s.humans[p.human], s.objects[p.object].box, id});
  return out;
}

std::optional<double> average_precision(const std::vector<RankedPrediction>& predictions,
                                        const std::vector<GroundTruth>& truth, int phrase,
                                        double iou_thresh) {
  std::vector<const GroundTruth*> gts;
  for (const auto& g : truth)
    if (g.phrase == phrase) gts.push_back(&g);
  if (gts.empty()) return std::nullopt;
  std::vector<const RankedPrediction*> preds;
  for (const auto& p : predictions)
    if (p.phrase == phrase && !p.suppressed) preds.push_back(&p);
  std::stable_sort(preds.begin(), preds.end(),
                   [](const RankedPrediction* a, const RankedPrediction* b) { return score_order(*a, *b); });

  std::vector<bool> matched(gts.size(), false);
  std::vector<double> recall, precision;
  int tp = 0, fp = 0;
  const double n_gt = static_cast<double>(gts.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const RankedPrediction& p = *preds[i];
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (matched[g] || gts[g]->scene != p.scene) continue;
      const double m = std::min(iou(p.human, gts[g]->human), iou(p.object, gts[g]->object));
      if (m >= iou_thresh && m > best_iou) {
        best_iou = m;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      matched[best] = true;
      ++tp;
    } else {
      ++fp;
    }
    const bool last_of_tie = i + 1 == preds.size() || preds[i + 1]->score != p.score;
    if (last_of_tie) {
      recall.push_back(tp / n_gt);
      precision.push_back(static_cast<double>(tp) / (tp + fp));
    }
  }
  // Precision envelope, then area under the step curve.
  for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
    precision[i] = std::max(precision[i], precision[i + 1]);
  double ap = 0.0, prev_r = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev_r) * precision[i];
    prev_r = recall[i];
  }
  return ap;
}

double harmonic_mean(double seen, double unseen) {
  if (seen + unseen == 0.0) return 0.0;
  return 2.0 * seen * unseen / (seen + unseen);
}

MapReport mean_average_precision(const std::vector<RankedPrediction>& predictions,
                                 const std::vector<SceneRecord>& scenes, const ScriptBank& bank,
                                 const SplitSpec& split, double iou_thresh) {
  const std::vector<GroundTruth> truth = ground_truth(scenes);
  std::map<int, std::set<std::string>> categories_in_scene;
  for (const auto& s : scenes)
    for (const auto& o : s.objects) categories_in_scene[s.id].insert(o.category);

  // Predictions grouped by phrase keep the per-phrase work linear.
  std::map<int, std::vector<RankedPrediction>> by_phrase;
  for (const auto& p : predictions)
    if (!p.suppressed) by_phrase[p.phrase].push_back(p);
  std::map<int, std::vector<GroundTruth>> truth_by_phrase;
  for (const auto& g : truth) truth_by_phrase[g.phrase].push_back(g);

  MapReport r;
  std::vector<double> full, rare, non_rare, seen, unseen, known;
  for (int b = 0; b < bank.size(); ++b) {
    const Phrase& ph = bank.phrase(b);
    PhraseAp pa;
    pa.phrase = ph.id;
    pa.seen = std::find(split.unseen.begin(), split.unseen.end(), ph.id) == split.unseen.end();
    const int positives = b < static_cast<int>(split.train_positives.size()) ? split.train_positives[b] : 0;
    pa.rare = positives < split.rare_cutoff;
    const auto& gts = truth_by_phrase[ph.id];
    pa.n_truth = static_cast<int>(gts.size());
    const auto& preds = by_phrase[ph.id];
    pa.ap = average_precision(preds, gts, ph.id, iou_thresh);
    std::vector<RankedPrediction> ko;
    for (const auto& p : preds)
      if (categories_in_scene[p.scene].count(ph.object_category)) ko.push_back(p);
    pa.ap_known_object = average_precision(ko, gts, ph.id, iou_thresh);
    if (pa.ap) {
      full.push_back(*pa.ap);
      (pa.rare ? rare : non_rare).push_back(*pa.ap);
      (pa.seen ? seen : unseen).push_back(*pa.ap);
      known.push_back(*pa.ap_known_object);
    }
    r.per_phrase.push_back(pa);
  }
  r.full = mean_of(full);
  r.rare = mean_of(rare);
  r.non_rare = mean_of(non_rare);
  r.seen = mean_of(seen);
  r.unseen = mean_of(unseen);
  r.known_object = mean_of(known);
  r.hm = harmonic_mean(r.seen, r.unseen);
  return r;
}

FprReport affordance_conflict_fpr(const std::vector<RankedPrediction>& predictions,
                                  const std::vector<SceneRecord>& scenes, const Rulebook& rb,
                                  const std::vector<Phrase>& phrases, int top_k) {
  const std::vector<Probe> probes = probe_set(scenes, rb, phrases);
  FprReport r;
  r.probes = static_cast<int>(probes.size());
  if (probes.empty()) return r;
  std::map<int, std::vector<const RankedPrediction*>> per_scene;
  for (const auto& p : predictions)
    if (!p.suppressed) per_scene[p.scene].push_back(&p);
  std::set<Probe> top;
  for (auto& [scene, list] : per_scene) {
    std::stable_sort(list.begin(), list.end(), [](const RankedPrediction* a, const RankedPrediction* b) {
      if (a->score != b->score) return a->score > b->score;
      if (a->phrase != b->phrase) return a->phrase < b->phrase;
      return a->pair < b->pair;
    });
    for (int i = 0; i < top_k && i < static_cast<int>(list.size()); ++i)
      top.insert({scene, list[i]->pair, list[i]->phrase});
  }
  for (const auto& p : probes)
    if (top.count(p)) ++r.hits;
  r.fpr = static_cast<double>(r.hits) / r.probes;
  return r;
}

std::vector<RankedPrediction> predict(const std::vector<SceneRecord>& scenes,
                                      const ScriptBank& bank, const ModelParams& params,
                                      const ScoreOptions& options, int threads) {
  std::vector<std::vector<RankedPrediction>> per_scene(scenes.size());
  parallel_for(scenes.size(), threads, [&](std::size_t si) {
    const SceneRecord& s = scenes[si];
    auto& out = per_scene[si];
    for (std::size_t pi = 0; pi < s.pairs.size(); ++pi) {
      const PairRecord& pair = s.pairs[pi];
      const std::vector<double> x = flatten_descriptor(pair.descriptor, params.shape);
      for (int b = 0; b < bank.size(); ++b) {
        const CandidateTrace tr =
            trace_candidate(x, bank.phrase(b).embedding, &bank.script(b), params, options);
        RankedPrediction p;
        p.scene = s.id;
        p.pair = static_cast<int>(pi);
        p.human = s.humans[pair.human];
        p.object = s.objects[pair.object].box;
        p.phrase = bank.phrase(b).id;
        p.match = tr.result();
        p.score = p.match.s_hat;
        out.push_back(p);
      }
    }
  });
  std::vector<RankedPrediction> all;
  for (auto& v : per_scene)
    for (auto& p : v) all.push_back(std::move(p));
  return all;
}

ordered_json to_json(const RankedPrediction& p) {
  ordered_json j;
  j["scene"] = p.scene;
  j["pair"] = p.pair;
  j["human"] = {p.human.x1, p.human.y1, p.human.x2, p.human.y2};
  j["object"] = {p.object.x1, p.object.y1, p.object.x2, p.object.y2};
  j["phrase"] = p.phrase;
  j["score"] = p.score;
  j["match"] = to_json(p.match);
  j["suppressed"] = p.suppressed;
  j["suppressor"] = p.suppressor;
  return j;
}

RankedPrediction prediction_from_json(const json& j) {
  try {
    RankedPrediction p;
    p.scene = j.at("scene").get<int>();
    p.pair = j.at("pair").get<int>();
    auto box = [](const json& b) {
      return Box{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                 b.at(3).get<double>()};
    };
    p.human = box(j.at("human"));
    p.object = box(j.at("object"));
    p.phrase = j.at("phrase").get<int>();
    p.score = j.at("score").get<double>();
    if (!std::isfinite(p.score)) throw DataError("prediction: non-finite score");
    if (j.contains("match")) {
      const json& m = j["match"];
      for (Slot s : kAllSlots)
        p.match.compat[slot_index(s)] = m.at("m").at(std::string(slot_name(s))).get<double>();
      p.match.gamma = m.at("gamma").get<double>();
      p.match.delta = m.at("delta").get<double>();
      p.match.s_base = m.at("s_base").get<double>();
      p.match.s_hat = m.at("s_hat").get<double>();
    }
    p.suppressed = j.value("suppressed", false);
    p.suppressor = j.value("suppressor", -1);
    return p;
  } catch (const json::exception& e) {
    throw DataError(std::string("prediction: ") + e.what());
  }
}

void write_predictions(const std::string& path, const std::vector<RankedPrediction>& preds,
                       const ordered_json& header_extra) {
  ordered_json header{{"schema", kPredictionSchema}, {"count", preds.size()}};
  for (const auto& [k, v] : header_extra.items()) header[k] = v;
  std::vector<ordered_json> records;
  records.reserve(preds.size());
  for (const auto& p : preds) records.push_back(to_json(p));
  write_jsonl(path, header, records);
}

std::vector<RankedPrediction> read_predictions(const std::string& path) {
  // A zero-byte file means "no predictions", not a malformed one.
  if (read_text(path).find_first_not_of(" \t\r\n") == std::string::npos) return {};
  const JsonlFile f = read_jsonl(path, kPredictionSchema);
  std::vector<RankedPrediction> out;
  for (const auto& r : f.records) out.push_back(prediction_from_json(r));
  return out;
}

}  // namespace scriptmatch
