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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scriptmatch {

inline constexpr int kNumSlots = 6;

// Fixed slot order. Everything indexed per slot uses this order.
enum class Slot : int { kBody = 0, kContact, kGeometry, kAffordance, kMotion, kState };

inline constexpr std::array<Slot, kNumSlots> kAllSlots = {
    Slot::kBody, Slot::kContact, Slot::kGeometry,
    Slot::kAffordance, Slot::kMotion, Slot::kState};

template <class T>
using PerSlot = std::array<T, kNumSlots>;

constexpr int slot_index(Slot s) { return static_cast<int>(s); }

// Canonical names: body_role, contact, geometry, affordance, motion,
// object_state. parse_slot also accepts the short forms body, geom, aff, state.
std::string_view slot_name(Slot s);
std::optional<Slot> parse_slot(std::string_view name);

struct SlotVocabulary {
  PerSlot<std::vector<std::string>> values;

  static SlotVocabulary defaults();

  int size(Slot s) const { return static_cast<int>(values[slot_index(s)].size()); }
  int total() const;
  std::optional<int> find(Slot s, std::string_view value) const;

  bool operator==(const SlotVocabulary&) const = default;
};

enum GeometryComponent : int {
  kOffsetX = 0,
  kOffsetY,
  kLogScaleRatio,
  kIou,
  kContainment,
  kHandDistance,
  kHeadDistance,
};

struct Dims {
  static constexpr int kGeometry = 7;

  int text = 32;
  int feature = 16;
  int pose = 8;
  int part = 12;
  int context = 8;
  int state = 16;
  int match = 16;

  bool operator==(const Dims&) const = default;
};

// Everything that fixes parameter shapes and the descriptor layout.
struct ModelShape {
  Dims dims;
  SlotVocabulary vocab = SlotVocabulary::defaults();
  std::vector<std::string> categories;

  int category_index(std::string_view category) const;  // -1 if unknown
  // [f_h, f_o, f_u, r_ctx]
  int pair_embed_size() const { return 3 * dims.feature + dims.context; }
  // [f_h, f_o, f_u, p, g, r_part, r_ctx, category one-hot]
  int descriptor_size() const;

  bool operator==(const ModelShape&) const = default;
};

struct Phrase {
  int id = 0;
  std::string text;
  std::string verb;
  std::string object_category;
  std::vector<double> embedding;  // unit L2 norm
};

struct Script {
  PerSlot<std::vector<double>> dist;
  PerSlot<double> reliability{};

  // First index of the largest entry.
  int argmax(Slot s) const;
};

struct PairDescriptor {
  std::vector<double> human;         // f_h
  std::vector<double> object;        // f_o
  std::vector<double> union_region;  // f_u
  std::vector<double> pose;          // p
  std::vector<double> geometry;      // g, see GeometryComponent
  std::vector<double> part;          // r_part
  std::vector<double> context;       // r_ctx
  std::string object_category;
};

struct StateTokens {
  PerSlot<std::vector<double>> token;
};

struct MatchResult {
  PerSlot<double> compat{};
  double gamma = 1.0;
  double delta = 0.0;
  double s_base = 0.0;
  double s_hat = 0.0;
};

struct IntervalLabel {
  double lower = 0.0;
  double upper = 1.0;
};

struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const;

  bool operator==(const Box&) const = default;
};

double iou(const Box& a, const Box& b);

struct ObjectInstance {
  Box box;
  std::string category;
};

// Phrase id lists are sorted ascending.
struct PairRecord {
  int human = 0;
  int object = 0;
  PairDescriptor descriptor;
  PerSlot<int> slot_states{};
  std::vector<int> latent;       // z = 1
  std::vector<int> observed;     // y = 1
  std::vector<int> affordance;   // object affords the phrase
};

struct SceneRecord {
  int id = 0;
  double width = 0;
  double height = 0;
  std::vector<Box> humans;
  std::vector<ObjectInstance> objects;
  std::vector<PairRecord> pairs;
};

bool contains_id(const std::vector<int>& sorted_ids, int id);

}  // namespace scriptmatch
