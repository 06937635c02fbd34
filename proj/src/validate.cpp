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

#include "scriptmatch/validate.hpp"

#include <algorithm>
#include <cmath>

namespace scriptmatch {
namespace {

constexpr double kTol = 1e-6;

std::string slot_str(int k) { return std::string(slot_name(kAllSlots[k])); }

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_box(const Box& b, const SceneRecord& s, const std::string& what,
               std::vector<Violation>& out) {
  const bool finite = std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) &&
                      std::isfinite(b.y2);
  if (!finite) {
    out.push_back({"non-finite", what});
    return;
  }
  if (b.x1 < 0 || b.y1 < 0 || b.x2 > s.width || b.y2 > s.height || b.x1 >= b.x2 || b.y1 >= b.y2)
    out.push_back({"box-out-of-bounds", what});
}

void check_ids(const std::vector<int>& ids, const std::vector<int>* bank, const std::string& what,
               std::vector<Violation>& out) {
  if (!std::is_sorted(ids.begin(), ids.end()) ||
      std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    out.push_back({"unsorted-ids", what});
  if (!bank) return;
  for (int id : ids)
    if (std::find(bank->begin(), bank->end(), id) == bank->end())
      out.push_back({"unknown-phrase", what + " id " + std::to_string(id)});
}

}  // namespace

std::vector<Violation> validate(const Script& script, const SlotVocabulary* vocab) {
  std::vector<Violation> out;
  for (int k = 0; k < kNumSlots; ++k) {
    const auto& d = script.dist[k];
    if (vocab && static_cast<int>(d.size()) != vocab->size(kAllSlots[k]))
      out.push_back({"distribution-size", slot_str(k)});
    if (!all_finite(d)) {
      out.push_back({"non-finite", "dist " + slot_str(k)});
      continue;
    }
    if (std::any_of(d.begin(), d.end(), [](double x) { return x < 0.0; }))
      out.push_back({"distribution-negative", slot_str(k)});
    double sum = 0.0;
    for (double x : d) sum += x;
    if (d.empty() || std::abs(sum - 1.0) > kTol)
      out.push_back({"distribution-not-normalized", slot_str(k) + " sums to " + std::to_string(sum)});
    const double r = script.reliability[k];
    if (!std::isfinite(r))
      out.push_back({"non-finite", "reliability " + slot_str(k)});
    else if (r <= 0.0 || r >= 1.0)
      out.push_back({"reliability-out-of-range", slot_str(k)});
  }
  return out;
}

std::vector<Violation> validate(const Phrase& phrase) {
  std::vector<Violation> out;
  if (!all_finite(phrase.embedding)) {
    out.push_back({"non-finite", "embedding"});
    return out;
  }
  double n2 = 0.0;
  for (double x : phrase.embedding) n2 += x * x;
  if (std::abs(std::sqrt(n2) - 1.0) > kTol)
    out.push_back({"embedding-not-normalized", "norm " + std::to_string(std::sqrt(n2))});
  return out;
}

std::vector<Violation> validate(const SceneRecord& scene, const std::vector<int>* bank) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < scene.humans.size(); ++i)
    check_box(scene.humans[i], scene, "human " + std::to_string(i), out);
  for (std::size_t i = 0; i < scene.objects.size(); ++i)
    check_box(scene.objects[i].box, scene, "object " + std::to_string(i), out);
  for (std::size_t pi = 0; pi < scene.pairs.size(); ++pi) {
    const PairRecord& p = scene.pairs[pi];
    const std::string where = "pair " + std::to_string(pi);
    if (p.human < 0 || p.human >= static_cast<int>(scene.humans.size()) || p.object < 0 ||
        p.object >= static_cast<int>(scene.objects.size()))
      out.push_back({"bad-index", where});
    const PairDescriptor& x = p.descriptor;
    for (const auto* v : {&x.human, &x.object, &x.union_region, &x.pose, &x.geometry, &x.part,
                          &x.context})
      if (!all_finite(*v)) out.push_back({"non-finite", where + " descriptor"});
    if (x.geometry.size() == static_cast<std::size_t>(Dims::kGeometry) && all_finite(x.geometry)) {
      if (x.geometry[kHandDistance] < 0 || x.geometry[kHeadDistance] < 0)
        out.push_back({"negative-distance", where});
      if (x.geometry[kIou] < 0 || x.geometry[kIou] > 1) out.push_back({"iou-out-of-range", where});
    }
    check_ids(p.latent, bank, where + " latent", out);
    check_ids(p.observed, bank, where + " observed", out);
    check_ids(p.affordance, bank, where + " affordance", out);
    for (int id : p.observed)
      if (!std::binary_search(p.latent.begin(), p.latent.end(), id))
        out.push_back({"annotation-contradicts-latent", where + " phrase " + std::to_string(id)});
  }
  return out;
}

std::vector<Violation> validate(const MatchResult& r, const Hyper& h) {
  std::vector<Violation> out;
  if (!std::isfinite(r.gamma) || !std::isfinite(r.delta) || !std::isfinite(r.s_base) ||
      !std::isfinite(r.s_hat)) {
    out.push_back({"non-finite", "match result"});
    return out;
  }
  if (r.gamma <= 0.0 || r.gamma > 1.0 + h.eps) out.push_back({"gamma-out-of-range", ""});
  if (r.delta <= 0.0 || r.delta >= 1.0) out.push_back({"delta-out-of-range", ""});
  const double expect = r.s_base + h.lambda_gamma * std::log(r.gamma + h.eps) - h.lambda_delta * r.delta;
  if (std::abs(expect - r.s_hat) > 1e-9) out.push_back({"calibration-mismatch", ""});
  return out;
}

bool has_code(const std::vector<Violation>& violations, const std::string& code) {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; });
}

}  // namespace scriptmatch
