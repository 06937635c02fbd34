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

#include "scriptmatch/domain.hpp"

#include <algorithm>

namespace scriptmatch {

std::string_view slot_name(Slot s) {
  switch (s) {
    case Slot::kBody:
      return "body_role";
    case Slot::kContact:
      return "contact";
    case Slot::kGeometry:
      return "geometry";
    case Slot::kAffordance:
      return "affordance";
    case Slot::kMotion:
      return "motion";
    case Slot::kState:
      return "object_state";
  }
  return "?";
}

std::optional<Slot> parse_slot(std::string_view name) {
  for (Slot s : kAllSlots)
    if (slot_name(s) == name) return s;
  if (name == "body") return Slot::kBody;
  if (name == "geom") return Slot::kGeometry;
  if (name == "aff") return Slot::kAffordance;
  if (name == "state") return Slot::kState;
  return std::nullopt;
}

SlotVocabulary SlotVocabulary::defaults() {
  SlotVocabulary v;
  v.values[slot_index(Slot::kBody)] = {"hand", "foot", "head", "mouth", "torso", "none"};
  v.values[slot_index(Slot::kContact)] = {"none", "touch", "grasp", "mouth-contact",
                                          "tool-mediated"};
  v.values[slot_index(Slot::kGeometry)] = {"overlapping", "adjacent", "near", "far"};
  v.values[slot_index(Slot::kAffordance)] = {"graspable", "rideable", "wearable",
                                             "consumable", "operable", "inert"};
  v.values[slot_index(Slot::kMotion)] = {"static", "extend", "swing", "carry-like"};
  v.values[slot_index(Slot::kState)] = {"neutral", "held", "worn", "open", "cut", "filled"};
  return v;
}

int SlotVocabulary::total() const {
  int n = 0;
  for (const auto& v : values) n += static_cast<int>(v.size());
  return n;
}

std::optional<int> SlotVocabulary::find(Slot s, std::string_view value) const {
  const auto& list = values[slot_index(s)];
  auto it = std::find(list.begin(), list.end(), value);
  if (it == list.end()) return std::nullopt;
  return static_cast<int>(it - list.begin());
}

int ModelShape::category_index(std::string_view category) const {
  auto it = std::find(categories.begin(), categories.end(), category);
  return it == categories.end() ? -1 : static_cast<int>(it - categories.begin());
}

int ModelShape::descriptor_size() const {
  return 3 * dims.feature + dims.pose + Dims::kGeometry + dims.part + dims.context +
         static_cast<int>(categories.size());
}

int Script::argmax(Slot s) const {
  const auto& d = dist[slot_index(s)];
  return static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
}

double Box::area() const { return std::max(0.0, width()) * std::max(0.0, height()); }

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

bool contains_id(const std::vector<int>& sorted_ids, int id) {
  return std::binary_search(sorted_ids.begin(), sorted_ids.end(), id);
}

}  // namespace scriptmatch
