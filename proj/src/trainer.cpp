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

#include "scriptmatch/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "scriptmatch/error.hpp"
#include "scriptmatch/rng.hpp"
#include "scriptmatch/synthgen.hpp"
#include "scriptmatch/tokenizer.hpp"

namespace scriptmatch {
namespace {

constexpr char kMagic[8] = {'S', 'C', 'R', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

constexpr std::uint64_t kInitTag = 0x696e6974;
constexpr std::uint64_t kShuffleTag = 0x73687566;
constexpr std::uint64_t kCounterfactualTag = 0x63667363;
constexpr std::uint64_t kNegativeTag = 0x6e656773;

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError("checkpoint: truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

double get_f64(std::istream& in) {
  const std::uint64_t v = get_u64(in);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

void put_str(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& in) {
  const std::uint64_t n = get_u64(in);
  if (n > (1u << 20)) throw DataError("checkpoint: corrupt string length");
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw DataError("checkpoint: truncated");
  return s;
}

void put_vec(std::ostream& out, const std::vector<double>& v) {
  for (double d : v) put_f64(out, d);
}

std::vector<double> get_vec(std::istream& in, std::size_t n) {
  std::vector<double> v(n);
  for (double& d : v) d = get_f64(in);
  return v;
}

void add_terms(LossTerms& acc, const LossTerms& t) {
  acc.hoi += t.hoi;
  acc.ipl += t.ipl;
  acc.csc += t.csc;
  acc.align += t.align;
  acc.total += t.total;
}

}  // namespace

std::string Mode::name() const {
  switch (kind) {
    case ModeKind::kFull:
      return "full";
    case ModeKind::kClosedWorld:
      return "closed_world";
    case ModeKind::kNoIpl:
      return "no_ipl";
    case ModeKind::kNoCsc:
      return "no_csc";
    case ModeKind::kNoAlign:
      return "no_align";
    case ModeKind::kNoCalibration:
      return "no_calibration";
    case ModeKind::kDropSlot:
      return "drop_slot:" + std::string(slot_name(kAllSlots[slot]));
  }
  return "?";
}

Mode parse_mode(const std::string& text) {
  if (text == "full") return {ModeKind::kFull};
  if (text == "closed_world") return {ModeKind::kClosedWorld};
  if (text == "no_ipl") return {ModeKind::kNoIpl};
  if (text == "no_csc") return {ModeKind::kNoCsc};
  if (text == "no_align") return {ModeKind::kNoAlign};
  if (text == "no_calibration") return {ModeKind::kNoCalibration};
  const std::string prefix = "drop_slot:";
  if (text.rfind(prefix, 0) == 0) {
    if (const auto slot = parse_slot(text.substr(prefix.size())))
      return {ModeKind::kDropSlot, slot_index(*slot)};
  }
  throw Error(ExitCode::kUsage, "unknown mode: " + text);
}

void apply_mode(const Mode& mode, Hyper& hyper, Objective& objective) {
  switch (mode.kind) {
    case ModeKind::kFull:
      break;
    case ModeKind::kClosedWorld:
      objective.closed_world = true;
      break;
    case ModeKind::kNoIpl:
      hyper.lambda_ipl = 0.0;
      break;
    case ModeKind::kNoCsc:
      hyper.lambda_csc = 0.0;
      break;
    case ModeKind::kNoAlign:
      hyper.lambda_align = 0.0;
      break;
    case ModeKind::kNoCalibration:
      hyper.lambda_gamma = 0.0;
      hyper.lambda_delta = 0.0;
      break;
    case ModeKind::kDropSlot:
      objective.score.dropped_slot = mode.slot;
      break;
  }
}

ModelParams init_params(const ModelShape& shape, const Hyper& hyper, std::uint64_t seed) {
  const Dims& d = shape.dims;
  for (int v : {d.text, d.feature, d.pose, d.part, d.context, d.state, d.match})
    if (v <= 0) throw std::invalid_argument("init_params: every dimension must be positive");
  if (shape.categories.empty()) throw std::invalid_argument("init_params: no object categories");
  for (Slot s : kAllSlots)
    if (shape.vocab.size(s) == 0) throw std::invalid_argument("init_params: empty slot vocabulary");

  ModelParams p = zero_params(shape, hyper);
  Rng rng(mix_seed(seed, kInitTag));
  auto fill = [&](std::span<double> v, int fan_in) {
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : v) x = rng.uniform(-a, a);
  };
  for (int k = 0; k < kNumSlots; ++k) fill(p.script_head[k].data, d.text);
  for (int k = 0; k < kNumSlots; ++k) fill(p.reliability_head[k], d.text);
  for (int k = 0; k < kNumSlots; ++k) fill(p.token_weight[k].data, p.token_weight[k].cols);
  for (int k = 0; k < kNumSlots; ++k) fill(p.state_proj[k].data, d.state);
  for (int k = 0; k < kNumSlots; ++k) fill(p.script_proj[k].data, p.script_proj[k].cols);
  fill(p.conflict_weight, kNumSlots);
  p.conflict_bias = -2.0;
  fill(p.base_bilinear.data, d.text);
  return p;
}

std::vector<Candidate> build_candidates(const std::vector<SceneRecord>& scenes,
                                        const ScriptBank& bank, const ModelShape& shape,
                                        const std::vector<int>& masked_ids,
                                        int negatives_per_pair, std::uint64_t seed) {
  std::vector<Candidate> out;
  for (const auto& scene : scenes) {
    for (std::size_t pi = 0; pi < scene.pairs.size(); ++pi) {
      const PairRecord& pair = scene.pairs[pi];
      auto x = std::make_shared<const std::vector<double>>(flatten_descriptor(pair.descriptor, shape));
      std::vector<Candidate> negatives;
      for (int b = 0; b < bank.size(); ++b) {
        const int id = bank.phrase(b).id;
        const bool masked = std::find(masked_ids.begin(), masked_ids.end(), id) != masked_ids.end();
        Candidate c;
        c.x = x;
        c.phrase = b;
        c.label = (!masked && contains_id(pair.observed, id)) ? 1 : 0;
        if (c.label == 1)
          out.push_back(std::move(c));
        else
          negatives.push_back(std::move(c));
      }
      if (negatives_per_pair >= 0 && static_cast<int>(negatives.size()) > negatives_per_pair) {
        Rng rng(mix_seed(mix_seed(seed, kNegativeTag),
                         (static_cast<std::uint64_t>(scene.id) << 16) ^ pi));
        for (int i = static_cast<int>(negatives.size()) - 1; i > 0; --i)
          std::swap(negatives[i], negatives[rng.below(i + 1)]);
        negatives.resize(negatives_per_pair);
        std::sort(negatives.begin(), negatives.end(),
                  [](const Candidate& a, const Candidate& b) { return a.phrase < b.phrase; });
      }
      for (auto& c : negatives) out.push_back(std::move(c));
    }
  }
  return out;
}

void adam_update(std::vector<double>& flat, const std::vector<double>& grad, AdamState& s,
                 const TrainConfig& c) {
  if (s.m.size() != flat.size()) {
    s.m.assign(flat.size(), 0.0);
    s.v.assign(flat.size(), 0.0);
  }
  ++s.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < flat.size(); ++i) {
    s.m[i] = c.beta1 * s.m[i] + (1.0 - c.beta1) * grad[i];
    s.v[i] = c.beta2 * s.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
    flat[i] -= c.lr * (s.m[i] / bc1) / (std::sqrt(s.v[i] / bc2) + c.adam_eps);
  }
}

nlohmann::ordered_json to_json(const EpochLog& log) {
  return {{"epoch", log.epoch},         {"steps", log.steps},     {"hoi", log.mean.hoi},
          {"ipl", log.mean.ipl},        {"csc", log.mean.csc},    {"align", log.mean.align},
          {"total", log.mean.total}};
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out.write(kMagic, sizeof kMagic);
  put_u64(out, kCheckpointVersion);
  put_str(out, c.config_hash);
  put_str(out, c.resume_key);
  put_u64(out, c.seed);
  put_u64(out, static_cast<std::uint64_t>(c.epochs_done));
  put_u64(out, c.adam.step);
  put_u64(out, c.params.size());
  put_vec(out, c.params);
  const bool has_moments = c.adam.m.size() == c.params.size();
  put_u64(out, has_moments ? 1 : 0);
  if (has_moments) {
    put_vec(out, c.adam.m);
    put_vec(out, c.adam.v);
  }
  if (!out) throw DataError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError(path + ": not a checkpoint");
  if (get_u64(in) != kCheckpointVersion) throw DataError(path + ": unsupported checkpoint version");
  Checkpoint c;
  c.config_hash = get_str(in);
  c.resume_key = get_str(in);
  c.seed = get_u64(in);
  c.epochs_done = static_cast<int>(get_u64(in));
  c.adam.step = get_u64(in);
  const std::uint64_t n = get_u64(in);
  if (n > (1ull << 28)) throw DataError(path + ": corrupt parameter count");
  c.params = get_vec(in, n);
  if (get_u64(in) == 1) {
    c.adam.m = get_vec(in, n);
    c.adam.v = get_vec(in, n);
  }
  return c;
}

ModelParams initial_params(const Config& config, const std::vector<Phrase>& phrases) {
  ModelParams p = init_params(config.shape(), config.hyper, config.seed);
  if (config.train.prior_init && !phrases.empty()) {
    std::vector<Script> targets;
    for (const auto& ph : phrases) targets.push_back(prior_script(config.rulebook, ph));
    fit_script_heads(p, phrases, targets, config.train.prior_ridge);
  }
  return p;
}

ScriptBank make_bank(const Config& config, const std::vector<Phrase>& phrases) {
  return ScriptBank(phrases, {}, config.train.counterfactuals,
                    mix_seed(config.seed, kCounterfactualTag));
}

TrainResult train(const Config& config, const std::vector<Phrase>& phrases,
                  const std::vector<Candidate>& candidates, const TrainOptions& options) {
  const Mode mode = parse_mode(config.train.mode);
  Hyper hyper = config.hyper;
  Objective objective;
  objective.detach_interval_bounds = config.train.detach_interval_bounds;
  apply_mode(mode, hyper, objective);

  TrainResult result;
  result.params = initial_params(config, phrases);
  result.params.hyper = hyper;
  int start = 0;
  if (options.resume) {
    const Checkpoint& c = *options.resume;
    if (c.resume_key != resume_key(config))
      throw DataError("checkpoint was written under a different configuration");
    unflatten_params(c.params, result.params);
    result.adam = c.adam;
    start = c.epochs_done;
  }
  result.epochs_done = std::max(start, 0);

  ScriptBank bank = make_bank(config, phrases);
  bank.refresh(result.params);
  const bool use_csc = hyper.lambda_csc > 0.0 && config.train.counterfactuals > 0;
  const std::size_t n = candidates.size();
  const std::size_t batch_size = static_cast<std::size_t>(config.train.batch);
  std::vector<double> flat = flatten_params(result.params);

  for (int epoch = start; epoch < config.train.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(mix_seed(config.seed, kShuffleTag), static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(static_cast<int>(i)))]);

    EpochLog log;
    log.epoch = epoch;
    objective.anchor_threshold =
        epoch < config.train.csc_warmup_epochs ? 1.0 : config.train.csc_anchor_threshold;
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
      const std::size_t end = std::min(n, begin + batch_size);
      Batch batch;
      batch.items.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) batch.items.push_back(candidates[order[i]]);
      const std::string where =
          "epoch " + std::to_string(epoch) + " batch " + std::to_string(begin / batch_size);
      GradientResult g;
      try {
        if (use_csc) attach_counterfactuals(batch, bank, result.params, objective);
        g = grad_total(batch, bank, result.params, objective, options.threads);
      } catch (const NumericError& e) {
        throw NumericError("divergence at " + where + ": " + e.what());
      }
      if (!std::isfinite(g.terms.total))
        throw NumericError("divergence at " + where + ": loss is not finite");
      adam_update(flat, g.grad, result.adam, config.train);
      unflatten_params(flat, result.params);
      bank.refresh(result.params);
      add_terms(log.mean, g.terms);
      ++log.steps;
    }
    if (log.steps > 0) {
      const double inv = 1.0 / log.steps;
      log.mean = {log.mean.hoi * inv, log.mean.ipl * inv, log.mean.csc * inv,
                  log.mean.align * inv, log.mean.total * inv};
    }
    result.log.push_back(log);
    result.epochs_done = epoch + 1;
    if (options.on_epoch) options.on_epoch(log);
  }
  return result;
}

}  // namespace scriptmatch
