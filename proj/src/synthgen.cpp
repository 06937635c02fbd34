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

#include "scriptmatch/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "scriptmatch/error.hpp"
#include "scriptmatch/rng.hpp"
#include "scriptmatch/script_bank.hpp"

namespace scriptmatch {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string phrase_text(const std::string& verb, const std::string& object) {
  std::string v = verb;
  std::replace(v.begin(), v.end(), '_', ' ');
  return v + " " + object;
}

// Fixed linear render of one-hot slot codes into descriptor fields.
struct Render {
  std::vector<double> human, object, union_region, pose, part, context;  // row-major
  int human_in = 0, object_in = 0, union_in = 0, pose_in = 0, part_in = 0, context_in = 0;
};

std::vector<double> gaussian_matrix(Rng& rng, int rows, int cols) {
  std::vector<double> m(static_cast<std::size_t>(rows) * cols);
  for (double& v : m) v = rng.normal();
  return m;
}

Render make_render(const Rulebook& rb, const Dims& d) {
  Rng rng(mix_seed(rb.world_seed, 0x52454e44ULL));
  const SlotVocabulary& v = rb.vocab;
  const int body = v.size(Slot::kBody), contact = v.size(Slot::kContact);
  const int geom = v.size(Slot::kGeometry), motion = v.size(Slot::kMotion);
  const int state = v.size(Slot::kState);
  const int cats = static_cast<int>(rb.categories.size());
  Render r;
  r.human_in = body + motion;
  r.object_in = cats + state;
  r.union_in = state + geom;
  r.pose_in = body + motion;
  r.part_in = body + contact;
  r.context_in = cats;
  r.human = gaussian_matrix(rng, d.feature, r.human_in);
  r.object = gaussian_matrix(rng, d.feature, r.object_in);
  r.union_region = gaussian_matrix(rng, d.feature, r.union_in);
  r.pose = gaussian_matrix(rng, d.pose, r.pose_in);
  r.part = gaussian_matrix(rng, d.part, r.part_in);
  r.context = gaussian_matrix(rng, d.context, r.context_in);
  return r;
}

// out = M * onehot(active codes) + noise
std::vector<double> render_field(const std::vector<double>& m, int rows, int cols,
                                 const std::vector<int>& active, double noise, Rng& rng) {
  std::vector<double> out(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int c : active) out[r] += m[static_cast<std::size_t>(r) * cols + c];
    out[r] += noise * rng.normal();
  }
  return out;
}

double rect_gap(const Box& a, const Box& b) {
  const double dx = std::max({0.0, b.x1 - a.x2, a.x1 - b.x2});
  const double dy = std::max({0.0, b.y1 - a.y2, a.y1 - b.y2});
  return std::sqrt(dx * dx + dy * dy);
}

bool intersects(const Box& a, const Box& b) {
  return std::min(a.x2, b.x2) > std::max(a.x1, b.x1) && std::min(a.y2, b.y2) > std::max(a.y1, b.y1);
}

Box place_relative(const Box& human, double ow, double oh, int geometry, const Rulebook& rb,
                   Rng& rng) {
  const double W = rb.image_width, H = rb.image_height;
  for (int attempt = 0; attempt < 64; ++attempt) {
    Box o;
    if (geometry == 0) {
      const double cx = rng.uniform(human.x1 + 0.25 * human.width(), human.x2 - 0.25 * human.width());
      const double cy = rng.uniform(human.y1 + 0.15 * human.height(), human.y1 + 0.6 * human.height());
      o = {cx - ow / 2, cy - oh / 2, cx + ow / 2, cy + oh / 2};
      const double sx = std::max(0.0, -o.x1) - std::max(0.0, o.x2 - W);
      const double sy = std::max(0.0, -o.y1) - std::max(0.0, o.y2 - H);
      o = {o.x1 + sx, o.y1 + sy, o.x2 + sx, o.y2 + sy};
    } else {
      double gap = 0;
      if (geometry == 1) gap = rng.uniform(1.0, 8.0);
      if (geometry == 2) gap = rng.uniform(30.0, 100.0);
      if (geometry == 3) gap = rng.uniform(160.0, 300.0);
      const bool right = (W - human.x2) >= human.x1;
      const double x1 = right ? human.x2 + gap : human.x1 - gap - ow;
      const double y1 = rng.uniform(human.y1, std::max(human.y1, human.y2 - oh));
      o = {x1, y1, x1 + ow, y1 + oh};
    }
    const bool inside = o.x1 >= 0 && o.y1 >= 0 && o.x2 <= W && o.y2 <= H;
    if (inside && classify_geometry(human, o) == geometry) return o;
  }
  throw DataError("generate: could not place object for geometry value " + std::to_string(geometry));
}

Box random_box(double w, double h, const Rulebook& rb, Rng& rng) {
  const double x1 = rng.uniform(0.0, rb.image_width - w);
  const double y1 = rng.uniform(0.0, rb.image_height - h);
  return {x1, y1, x1 + w, y1 + h};
}

std::vector<double> geometry_vector(const Box& h, const Box& o, int body, int contact,
                                    const SlotVocabulary& vocab, double noise, Rng& rng) {
  std::vector<double> g(Dims::kGeometry, 0.0);
  const double hcx = (h.x1 + h.x2) / 2, hcy = (h.y1 + h.y2) / 2;
  const double ocx = (o.x1 + o.x2) / 2, ocy = (o.y1 + o.y2) / 2;
  g[kOffsetX] = (ocx - hcx) / h.width() + 0.1 * noise * rng.normal();
  g[kOffsetY] = (ocy - hcy) / h.height() + 0.1 * noise * rng.normal();
  g[kLogScaleRatio] = 0.5 * std::log(o.area() / h.area()) + 0.1 * noise * rng.normal();
  g[kIou] = iou(h, o);
  g[kContainment] = (ocx >= h.x1 && ocx <= h.x2 && ocy >= h.y1 && ocy <= h.y2) ? 1.0 : 0.0;
  const double far = rect_gap(h, o) / h.height() + 0.25;
  const bool touching = contact != *vocab.find(Slot::kContact, "none");
  const int hand = *vocab.find(Slot::kBody, "hand");
  const int head = *vocab.find(Slot::kBody, "head");
  const int mouth = *vocab.find(Slot::kBody, "mouth");
  const bool hand_on = touching && body == hand;
  const bool head_on = touching && (body == head || body == mouth);
  g[kHandDistance] = hand_on ? std::abs(0.03 + 0.02 * rng.normal()) : far + std::abs(0.05 * rng.normal());
  g[kHeadDistance] = head_on ? std::abs(0.03 + 0.02 * rng.normal()) : far + std::abs(0.05 * rng.normal());
  return g;
}

std::vector<int> allowed_values(const Rulebook& rb, const VerbSpec& verb, Slot s) {
  std::vector<int> out;
  for (const auto& name : verb.required[slot_index(s)]) out.push_back(*rb.vocab.find(s, name));
  return out;
}

int sample_from(const std::vector<int>& allowed, int size, Rng& rng) {
  if (allowed.empty()) return rng.below(size);
  return allowed[rng.below(static_cast<int>(allowed.size()))];
}

}  // namespace

Rulebook Rulebook::defaults() {
  Rulebook rb;
  rb.categories = {
      {"cup", "graspable", {"hold", "carry", "drink_from", "kick", "look_at"}},
      {"bicycle", "rideable", {"ride", "push", "repair", "look_at"}},
      {"hat", "wearable", {"wear", "hold", "carry"}},
      {"cake", "consumable", {"cut", "hold", "look_at"}},
      {"television", "operable", {"look_at", "repair", "carry"}},
      {"knife", "graspable", {"hold", "carry"}},
      {"ball", "graspable", {"kick", "hold", "carry"}},
      {"book", "graspable", {"hold", "carry", "look_at"}},
  };
  auto verb = [](std::string name, std::vector<std::string> body, std::vector<std::string> contact,
                 std::vector<std::string> geometry, std::vector<std::string> motion,
                 std::vector<std::string> state) {
    VerbSpec v;
    v.name = std::move(name);
    v.required[slot_index(Slot::kBody)] = std::move(body);
    v.required[slot_index(Slot::kContact)] = std::move(contact);
    v.required[slot_index(Slot::kGeometry)] = std::move(geometry);
    v.required[slot_index(Slot::kMotion)] = std::move(motion);
    v.required[slot_index(Slot::kState)] = std::move(state);
    return v;
  };
  rb.verbs = {
      verb("hold", {"hand"}, {"grasp"}, {"adjacent", "overlapping"}, {}, {"held"}),
      verb("carry", {"hand"}, {"grasp"}, {"adjacent"}, {"carry-like"}, {"held"}),
      verb("drink_from", {"mouth"}, {"mouth-contact"}, {"overlapping"}, {}, {"filled"}),
      verb("kick", {"foot"}, {"touch"}, {"adjacent"}, {"swing"}, {}),
      verb("look_at", {"head"}, {"none"}, {"near", "far"}, {"static"}, {}),
      verb("ride", {"torso"}, {"touch"}, {"overlapping"}, {}, {}),
      verb("push", {"hand"}, {"touch"}, {"adjacent"}, {"extend"}, {}),
      verb("repair", {"hand"}, {"tool-mediated"}, {"adjacent"}, {}, {"open"}),
      verb("wear", {"head"}, {"touch"}, {"overlapping"}, {}, {"worn"}),
      verb("cut", {"hand"}, {"tool-mediated"}, {"adjacent"}, {"swing"}, {"cut"}),
  };
  return rb;
}

const CategorySpec* Rulebook::category(const std::string& name) const {
  for (const auto& c : categories)
    if (c.name == name) return &c;
  return nullptr;
}

const VerbSpec* Rulebook::verb(const std::string& name) const {
  for (const auto& v : verbs)
    if (v.name == name) return &v;
  return nullptr;
}

std::vector<PhraseSpec> Rulebook::resolved_phrases() const {
  if (!phrases.empty()) return phrases;
  std::vector<PhraseSpec> out;
  for (const auto& c : categories)
    for (const auto& v : c.verbs) out.push_back({v, c.name});
  return out;
}

ordered_json to_json(const Rulebook& rb) {
  ordered_json j;
  j["schema"] = rb.schema;
  ordered_json vocab;
  for (Slot s : kAllSlots) vocab[std::string(slot_name(s))] = rb.vocab.values[slot_index(s)];
  j["slot_vocabulary"] = vocab;
  j["categories"] = ordered_json::array();
  for (const auto& c : rb.categories)
    j["categories"].push_back({{"name", c.name}, {"affordance", c.affordance}, {"verbs", c.verbs}});
  j["verbs"] = ordered_json::array();
  for (const auto& v : rb.verbs) {
    ordered_json req;
    for (Slot s : kAllSlots) {
      if (s == Slot::kAffordance) continue;
      req[std::string(slot_name(s))] = v.required[slot_index(s)];
    }
    j["verbs"].push_back({{"name", v.name}, {"required", req}});
  }
  j["phrases"] = ordered_json::array();
  for (const auto& p : rb.phrases) j["phrases"].push_back({{"verb", p.verb}, {"object", p.object}});
  j["noise"] = rb.noise;
  j["miss_rate"] = rb.miss_rate;
  j["interaction_rate"] = rb.interaction_rate;
  j["humans"] = {rb.min_humans, rb.max_humans};
  j["objects"] = {rb.min_objects, rb.max_objects};
  j["image"] = {rb.image_width, rb.image_height};
  j["world_seed"] = rb.world_seed;
  return j;
}

Rulebook rulebook_from_json(const json& j) {
  try {
    Rulebook rb;
    rb.schema = j.at("schema").get<std::string>();
    if (rb.schema != kRulebookSchema) throw DataError("rulebook: unsupported schema " + rb.schema);
    if (j.contains("slot_vocabulary")) {
      for (Slot s : kAllSlots)
        rb.vocab.values[slot_index(s)] =
            j.at("slot_vocabulary").at(std::string(slot_name(s))).get<std::vector<std::string>>();
    }
    for (const auto& c : j.at("categories"))
      rb.categories.push_back({c.at("name").get<std::string>(), c.at("affordance").get<std::string>(),
                               c.at("verbs").get<std::vector<std::string>>()});
    for (const auto& v : j.at("verbs")) {
      VerbSpec spec;
      spec.name = v.at("name").get<std::string>();
      for (const auto& [key, value] : v.at("required").items()) {
        const auto slot = parse_slot(key);
        if (!slot || *slot == Slot::kAffordance)
          throw DataError("rulebook: verb " + spec.name + " has invalid slot " + key);
        spec.required[slot_index(*slot)] = value.get<std::vector<std::string>>();
      }
      rb.verbs.push_back(std::move(spec));
    }
    if (j.contains("phrases"))
      for (const auto& p : j.at("phrases"))
        rb.phrases.push_back({p.at("verb").get<std::string>(), p.at("object").get<std::string>()});
    rb.noise = j.value("noise", rb.noise);
    rb.miss_rate = j.value("miss_rate", rb.miss_rate);
    rb.interaction_rate = j.value("interaction_rate", rb.interaction_rate);
    if (j.contains("humans")) {
      rb.min_humans = j["humans"].at(0).get<int>();
      rb.max_humans = j["humans"].at(1).get<int>();
    }
    if (j.contains("objects")) {
      rb.min_objects = j["objects"].at(0).get<int>();
      rb.max_objects = j["objects"].at(1).get<int>();
    }
    if (j.contains("image")) {
      rb.image_width = j["image"].at(0).get<double>();
      rb.image_height = j["image"].at(1).get<double>();
    }
    rb.world_seed = j.value("world_seed", rb.world_seed);
    const auto problems = validate_rulebook(rb);
    if (!problems.empty()) throw DataError("rulebook: " + problems.front());
    return rb;
  } catch (const json::exception& e) {
    throw DataError(std::string("rulebook: ") + e.what());
  }
}

Rulebook load_rulebook(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open rulebook " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("rulebook " + path + ": " + e.what());
  }
  return rulebook_from_json(j);
}

std::vector<std::string> validate_rulebook(const Rulebook& rb) {
  std::vector<std::string> out;
  for (Slot s : kAllSlots) {
    const auto& values = rb.vocab.values[slot_index(s)];
    if (values.size() < 2) out.push_back("slot " + std::string(slot_name(s)) + " needs >= 2 values");
    std::set<std::string> uniq(values.begin(), values.end());
    if (uniq.size() != values.size())
      out.push_back("slot " + std::string(slot_name(s)) + " has duplicate values");
  }
  for (const auto& c : rb.categories) {
    if (!rb.vocab.find(Slot::kAffordance, c.affordance))
      out.push_back("category " + c.name + " has unknown affordance " + c.affordance);
    for (const auto& v : c.verbs)
      if (!rb.verb(v)) out.push_back("category " + c.name + " lists unknown verb " + v);
  }
  for (const auto& v : rb.verbs)
    for (Slot s : kAllSlots)
      for (const auto& value : v.required[slot_index(s)])
        if (!rb.vocab.find(s, value))
          out.push_back("verb " + v.name + " requires unknown " + std::string(slot_name(s)) +
                        " value " + value);
  for (const auto& p : rb.resolved_phrases()) {
    if (!rb.verb(p.verb)) out.push_back("phrase uses unknown verb " + p.verb);
    if (!rb.category(p.object)) out.push_back("phrase uses unknown object " + p.object);
  }
  if (rb.miss_rate < 0.0 || rb.miss_rate >= 1.0) out.push_back("miss_rate must be in [0, 1)");
  if (rb.min_humans < 1 || rb.max_humans < rb.min_humans) out.push_back("bad human count range");
  if (rb.min_objects < 1 || rb.max_objects < rb.min_objects) out.push_back("bad object count range");
  return out;
}

std::vector<std::string> category_names(const Rulebook& rb) {
  std::vector<std::string> out;
  for (const auto& c : rb.categories) out.push_back(c.name);
  return out;
}

std::vector<Phrase> make_phrases(const Rulebook& rb, int text_dim, std::uint64_t seed) {
  std::vector<Phrase> out;
  int id = 0;
  for (const auto& p : rb.resolved_phrases())
    out.push_back({id++, phrase_text(p.verb, p.object), p.verb, p.object, {}});
  assign_embeddings(out, text_dim, seed);
  return out;
}

Script prior_script(const Rulebook& rb, const Phrase& phrase) {
  const VerbSpec* verb = rb.verb(phrase.verb);
  const CategorySpec* cat = rb.category(phrase.object_category);
  if (!verb || !cat) throw DataError("prior_script: phrase " + phrase.text + " not in rulebook");
  Script s;
  for (Slot slot : kAllSlots) {
    const int k = slot_index(slot);
    const int n = rb.vocab.size(slot);
    std::vector<int> allowed = slot == Slot::kAffordance
                                   ? std::vector<int>{*rb.vocab.find(slot, cat->affordance)}
                                   : allowed_values(rb, *verb, slot);
    auto& d = s.dist[k];
    if (allowed.empty() || static_cast<int>(allowed.size()) == n) {
      d.assign(n, 1.0 / n);
      s.reliability[k] = 0.15;
    } else {
      const double rest = 0.1 / (n - static_cast<int>(allowed.size()));
      d.assign(n, rest);
      for (int a : allowed) d[a] = 0.9 / static_cast<double>(allowed.size());
      s.reliability[k] = 0.85;
    }
  }
  return s;
}

bool phrase_holds(const Rulebook& rb, const Phrase& phrase, const std::string& category,
                  const PerSlot<int>& slot_states) {
  if (phrase.object_category != category) return false;
  const VerbSpec* verb = rb.verb(phrase.verb);
  if (!verb) return false;
  for (Slot s : kAllSlots) {
    if (s == Slot::kAffordance) continue;
    const auto allowed = allowed_values(rb, *verb, s);
    if (!allowed.empty() &&
        std::find(allowed.begin(), allowed.end(), slot_states[slot_index(s)]) == allowed.end())
      return false;
  }
  return true;
}

int classify_geometry(const Box& human, const Box& object) {
  if (intersects(human, object)) return 0;
  const double gap = rect_gap(human, object);
  if (gap <= 10.0) return 1;
  if (gap <= 120.0) return 2;
  return 3;
}

std::vector<std::string> dead_phrases(const Rulebook& rb, const std::vector<Phrase>& phrases) {
  std::vector<std::string> out;
  const int none = *rb.vocab.find(Slot::kContact, "none");
  for (const auto& p : phrases) {
    const CategorySpec* cat = rb.category(p.object_category);
    const VerbSpec* verb = rb.verb(p.verb);
    if (!cat || !verb) {
      out.push_back(p.text);
      continue;
    }
    const bool engaged =
        std::find(cat->verbs.begin(), cat->verbs.end(), p.verb) != cat->verbs.end();
    const auto contact = allowed_values(rb, *verb, Slot::kContact);
    const bool idle_ok =
        contact.empty() || std::find(contact.begin(), contact.end(), none) != contact.end();
    if (!engaged && !idle_ok) out.push_back(p.text);
  }
  return out;
}

GenerateResult generate(const Rulebook& rb, const std::vector<Phrase>& phrases, const Dims& dims,
                        int n_scenes, std::uint64_t seed, int first_id) {
  GenerateResult result;
  result.warnings = dead_phrases(rb, phrases);
  const Render render = make_render(rb, dims);
  const SlotVocabulary& vocab = rb.vocab;
  const int n_cat = static_cast<int>(rb.categories.size());
  const int n_body = vocab.size(Slot::kBody), n_contact = vocab.size(Slot::kContact);
  const int n_geom = vocab.size(Slot::kGeometry), n_motion = vocab.size(Slot::kMotion);
  const int n_state = vocab.size(Slot::kState);
  const int contact_none = *vocab.find(Slot::kContact, "none");

  for (int s = 0; s < n_scenes; ++s) {
    const int scene_id = first_id + s;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(scene_id)));
    SceneRecord scene;
    scene.id = scene_id;
    scene.width = rb.image_width;
    scene.height = rb.image_height;
    const int n_h = rb.min_humans + rng.below(rb.max_humans - rb.min_humans + 1);
    const int n_o = rb.min_objects + rng.below(rb.max_objects - rb.min_objects + 1);
    for (int i = 0; i < n_h; ++i)
      scene.humans.push_back(random_box(rng.uniform(70, 120), rng.uniform(180, 300), rb, rng));

    struct Engagement {
      int human = -1;
      PerSlot<int> states{};
    };
    std::vector<Engagement> engaged(n_o);
    std::vector<int> object_state(n_o);
    for (int j = 0; j < n_o; ++j) {
      const CategorySpec& cat = rb.categories[rng.below(n_cat)];
      const double ow = rng.uniform(30, 90), oh = rng.uniform(30, 90);
      std::vector<int> candidates;
      for (const auto& p : phrases)
        if (p.object_category == cat.name &&
            std::find(cat.verbs.begin(), cat.verbs.end(), p.verb) != cat.verbs.end())
          candidates.push_back(p.id);
      Box box;
      if (!candidates.empty() && rng.bernoulli(rb.interaction_rate)) {
        const Phrase* activity = nullptr;
        const int pick = candidates[rng.below(static_cast<int>(candidates.size()))];
        for (const auto& p : phrases)
          if (p.id == pick) activity = &p;
        const VerbSpec& verb = *rb.verb(activity->verb);
        Engagement e;
        e.human = rng.below(n_h);
        for (Slot sl : kAllSlots) {
          if (sl == Slot::kAffordance) continue;
          e.states[slot_index(sl)] =
              sample_from(allowed_values(rb, verb, sl), vocab.size(sl), rng);
        }
        box = place_relative(scene.humans[e.human], ow, oh, e.states[slot_index(Slot::kGeometry)],
                             rb, rng);
        object_state[j] = e.states[slot_index(Slot::kState)];
        engaged[j] = e;
      } else {
        box = random_box(ow, oh, rb, rng);
        object_state[j] = rng.below(n_state);
      }
      scene.objects.push_back({box, cat.name});
    }

    for (int i = 0; i < n_h; ++i) {
      for (int j = 0; j < n_o; ++j) {
        const Box& hb = scene.humans[i];
        const ObjectInstance& obj = scene.objects[j];
        const int cat_idx = static_cast<int>(
            std::find_if(rb.categories.begin(), rb.categories.end(),
                         [&](const CategorySpec& c) { return c.name == obj.category; }) -
            rb.categories.begin());
        PairRecord pr;
        pr.human = i;
        pr.object = j;
        PerSlot<int>& st = pr.slot_states;
        if (engaged[j].human == i) {
          st = engaged[j].states;
        } else {
          st[slot_index(Slot::kBody)] = rng.below(n_body);
          st[slot_index(Slot::kContact)] = contact_none;
          st[slot_index(Slot::kGeometry)] = classify_geometry(hb, obj.box);
          st[slot_index(Slot::kMotion)] = rng.below(n_motion);
          st[slot_index(Slot::kState)] = object_state[j];
        }
        st[slot_index(Slot::kAffordance)] =
            *vocab.find(Slot::kAffordance, rb.categories[cat_idx].affordance);

        const int body = st[slot_index(Slot::kBody)];
        const int contact = st[slot_index(Slot::kContact)];
        const int geom = st[slot_index(Slot::kGeometry)];
        const int motion = st[slot_index(Slot::kMotion)];
        const int state = st[slot_index(Slot::kState)];
        PairDescriptor& x = pr.descriptor;
        x.object_category = obj.category;
        x.human = render_field(render.human, dims.feature, render.human_in, {body, n_body + motion},
                               rb.noise, rng);
        x.object = render_field(render.object, dims.feature, render.object_in,
                                {cat_idx, n_cat + state}, rb.noise, rng);
        x.union_region = render_field(render.union_region, dims.feature, render.union_in,
                                      {state, n_state + geom}, rb.noise, rng);
        x.pose = render_field(render.pose, dims.pose, render.pose_in, {body, n_body + motion},
                              rb.noise, rng);
        x.geometry = geometry_vector(hb, obj.box, body, contact, vocab, rb.noise, rng);
        x.part = render_field(render.part, dims.part, render.part_in, {body, n_body + contact},
                              rb.noise, rng);
        x.context = render_field(render.context, dims.context, render.context_in, {cat_idx},
                                 rb.noise, rng);
        (void)n_contact;
        (void)n_geom;

        for (const auto& p : phrases) {
          if (p.object_category == obj.category) pr.affordance.push_back(p.id);
          if (phrase_holds(rb, p, obj.category, st)) {
            pr.latent.push_back(p.id);
            if (!rng.bernoulli(rb.miss_rate)) pr.observed.push_back(p.id);
          }
        }
        std::sort(pr.affordance.begin(), pr.affordance.end());
        std::sort(pr.latent.begin(), pr.latent.end());
        std::sort(pr.observed.begin(), pr.observed.end());
        scene.pairs.push_back(std::move(pr));
      }
    }
    result.scenes.push_back(std::move(scene));
  }
  return result;
}

std::vector<Probe> probe_set(const std::vector<SceneRecord>& scenes, const Rulebook& rb,
                             const std::vector<Phrase>& phrases) {
  std::vector<Probe> out;
  for (const auto& scene : scenes) {
    for (int pi = 0; pi < static_cast<int>(scene.pairs.size()); ++pi) {
      const PairRecord& pr = scene.pairs[pi];
      for (const auto& p : phrases) {
        if (!contains_id(pr.affordance, p.id) || contains_id(pr.latent, p.id)) continue;
        const VerbSpec* verb = rb.verb(p.verb);
        if (!verb) continue;
        bool contradicted = false;
        for (Slot s : kAllSlots) {
          if (s == Slot::kAffordance) continue;
          const auto allowed = allowed_values(rb, *verb, s);
          if (!allowed.empty() && std::find(allowed.begin(), allowed.end(),
                                            pr.slot_states[slot_index(s)]) == allowed.end())
            contradicted = true;
        }
        if (contradicted) out.push_back({scene.id, pi, p.id});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> choose_unseen(const std::vector<Phrase>& phrases, double fraction,
                               std::uint64_t seed) {
  const int target = static_cast<int>(std::lround(fraction * static_cast<double>(phrases.size())));
  std::vector<std::string> verbs;
  for (const auto& p : phrases)
    if (std::find(verbs.begin(), verbs.end(), p.verb) == verbs.end()) verbs.push_back(p.verb);
  const int verb_target = static_cast<int>(std::lround(fraction * static_cast<double>(verbs.size())));
  Rng rng(mix_seed(seed, 0x554e5345ULL));
  // Fisher-Yates with our own uniform conversion.
  for (int i = static_cast<int>(verbs.size()) - 1; i > 0; --i)
    std::swap(verbs[i], verbs[rng.below(i + 1)]);
  // Whole families may use at most half the budget so that the rest goes to
  // unseen combinations of a seen verb and a seen object.
  const int family_budget = std::max(1, target / 2);
  std::set<int> chosen;
  int verbs_taken = 0;
  for (const auto& v : verbs) {
    if (verbs_taken >= verb_target) break;
    std::vector<int> family;
    for (const auto& p : phrases)
      if (p.verb == v) family.push_back(p.id);
    if (static_cast<int>(chosen.size() + family.size()) > family_budget) continue;
    chosen.insert(family.begin(), family.end());
    ++verbs_taken;
  }
  std::vector<int> rest;
  for (const auto& p : phrases)
    if (!chosen.count(p.id)) rest.push_back(p.id);
  for (int i = static_cast<int>(rest.size()) - 1; i > 0; --i)
    std::swap(rest[i], rest[rng.below(i + 1)]);
  auto seen_count = [&](auto&& same) {
    int n = 0;
    for (const auto& p : phrases)
      if (!chosen.count(p.id) && same(p)) ++n;
    return n;
  };
  std::vector<int> skipped;
  for (int id : rest) {
    if (static_cast<int>(chosen.size()) >= target) break;
    const Phrase& ph = *std::find_if(phrases.begin(), phrases.end(),
                                     [&](const Phrase& p) { return p.id == id; });
    const bool keeps_verb = seen_count([&](const Phrase& p) { return p.verb == ph.verb; }) > 1;
    const bool keeps_object =
        seen_count([&](const Phrase& p) { return p.object_category == ph.object_category; }) > 1;
    if (keeps_verb && keeps_object)
      chosen.insert(id);
    else
      skipped.push_back(id);
  }
  for (int id : skipped) {
    if (static_cast<int>(chosen.size()) >= target) break;
    chosen.insert(id);
  }
  return {chosen.begin(), chosen.end()};
}

}  // namespace scriptmatch
