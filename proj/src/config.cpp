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

#include "scriptmatch/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "scriptmatch/error.hpp"
#include "scriptmatch/rng.hpp"

namespace scriptmatch {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

ModelShape Config::shape() const {
  ModelShape s;
  s.dims = dims;
  s.vocab = rulebook.vocab;
  s.categories = category_names(rulebook);
  return s;
}

ordered_json to_json(const Config& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["dims"] = {{"text", c.dims.text},       {"feature", c.dims.feature}, {"pose", c.dims.pose},
               {"part", c.dims.part},       {"context", c.dims.context}, {"state", c.dims.state},
               {"match", c.dims.match}};
  j["rulebook"] = to_json(c.rulebook);
  const Hyper& h = c.hyper;
  j["hyper"] = {{"lambda_gamma", h.lambda_gamma}, {"lambda_delta", h.lambda_delta},
                {"alpha_lower", h.alpha_lower},   {"alpha_upper", h.alpha_upper},
                {"tau", h.tau},                   {"lambda_ipl", h.lambda_ipl},
                {"lambda_csc", h.lambda_csc},     {"lambda_align", h.lambda_align},
                {"eps", h.eps},                   {"kappa", h.kappa}};
  const TrainConfig& t = c.train;
  j["train"] = {{"epochs", t.epochs},
                {"batch", t.batch},
                {"lr", t.lr},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"adam_eps", t.adam_eps},
                {"mode", t.mode},
                {"negatives_per_pair", t.negatives_per_pair},
                {"counterfactuals", t.counterfactuals},
                {"csc_anchor_threshold", t.csc_anchor_threshold},
                {"csc_warmup_epochs", t.csc_warmup_epochs},
                {"detach_interval_bounds", t.detach_interval_bounds},
                {"prior_init", t.prior_init},
                {"prior_ridge", t.prior_ridge}};
  const EvalConfig& e = c.eval;
  j["eval"] = {{"iou", e.iou},
               {"rare_cutoff", e.rare_cutoff},
               {"top_k", e.top_k},
               {"theta_text", e.theta_text},
               {"theta_script", e.theta_script},
               {"theta_align", e.theta_align},
               {"split", e.split},
               {"ablate_modes", e.ablate_modes}};
  const DataConfig& d = c.data;
  j["data"] = {{"train_scenes", d.train_scenes},
               {"val_scenes", d.val_scenes},
               {"test_scenes", d.test_scenes},
               {"unseen_fraction", d.unseen_fraction},
               {"embedding_seed", d.embedding_seed}};
  return j;
}

Config config_from_json(const json& j, const std::string& base_dir) {
  try {
    Config c;
    if (!j.is_object()) throw DataError("config must be a JSON object");
    read_opt(j, "seed", c.seed);
    if (j.contains("dims")) {
      const json& d = j["dims"];
      read_opt(d, "text", c.dims.text);
      read_opt(d, "feature", c.dims.feature);
      read_opt(d, "pose", c.dims.pose);
      read_opt(d, "part", c.dims.part);
      read_opt(d, "context", c.dims.context);
      read_opt(d, "state", c.dims.state);
      read_opt(d, "match", c.dims.match);
    }
    if (j.contains("rulebook") && !j["rulebook"].is_null()) {
      const json& r = j["rulebook"];
      if (r.is_string()) {
        std::filesystem::path p(r.get<std::string>());
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        c.rulebook = load_rulebook(p.string());
      } else {
        c.rulebook = rulebook_from_json(r);
      }
    }
    if (j.contains("hyper")) {
      const json& h = j["hyper"];
      read_opt(h, "lambda_gamma", c.hyper.lambda_gamma);
      read_opt(h, "lambda_delta", c.hyper.lambda_delta);
      read_opt(h, "alpha_lower", c.hyper.alpha_lower);
      read_opt(h, "alpha_upper", c.hyper.alpha_upper);
      read_opt(h, "tau", c.hyper.tau);
      read_opt(h, "lambda_ipl", c.hyper.lambda_ipl);
      read_opt(h, "lambda_csc", c.hyper.lambda_csc);
      read_opt(h, "lambda_align", c.hyper.lambda_align);
      read_opt(h, "eps", c.hyper.eps);
      read_opt(h, "kappa", c.hyper.kappa);
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      read_opt(t, "epochs", c.train.epochs);
      read_opt(t, "batch", c.train.batch);
      read_opt(t, "lr", c.train.lr);
      read_opt(t, "beta1", c.train.beta1);
      read_opt(t, "beta2", c.train.beta2);
      read_opt(t, "adam_eps", c.train.adam_eps);
      read_opt(t, "mode", c.train.mode);
      read_opt(t, "negatives_per_pair", c.train.negatives_per_pair);
      read_opt(t, "counterfactuals", c.train.counterfactuals);
      read_opt(t, "csc_anchor_threshold", c.train.csc_anchor_threshold);
      read_opt(t, "csc_warmup_epochs", c.train.csc_warmup_epochs);
      read_opt(t, "detach_interval_bounds", c.train.detach_interval_bounds);
      read_opt(t, "prior_init", c.train.prior_init);
      read_opt(t, "prior_ridge", c.train.prior_ridge);
    }
    if (j.contains("eval")) {
      const json& e = j["eval"];
      read_opt(e, "iou", c.eval.iou);
      read_opt(e, "rare_cutoff", c.eval.rare_cutoff);
      read_opt(e, "top_k", c.eval.top_k);
      read_opt(e, "theta_text", c.eval.theta_text);
      read_opt(e, "theta_script", c.eval.theta_script);
      read_opt(e, "theta_align", c.eval.theta_align);
      read_opt(e, "split", c.eval.split);
      read_opt(e, "ablate_modes", c.eval.ablate_modes);
    }
    if (j.contains("data")) {
      const json& d = j["data"];
      read_opt(d, "train_scenes", c.data.train_scenes);
      read_opt(d, "val_scenes", c.data.val_scenes);
      read_opt(d, "test_scenes", c.data.test_scenes);
      read_opt(d, "unseen_fraction", c.data.unseen_fraction);
      read_opt(d, "embedding_seed", c.data.embedding_seed);
    }
    const auto problems = validate_config(c);
    if (!problems.empty()) throw DataError("config: " + problems.front());
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("config " + path + ": " + e.what());
  }
  return config_from_json(j, std::filesystem::path(path).parent_path().string());
}

Config apply_overrides(const Config& config, const std::vector<std::string>& assignments) {
  if (assignments.empty()) return config;
  json j = json::parse(to_json(config).dump());
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(ExitCode::kUsage, "override must be key=value: " + a);
    const std::string key = a.substr(0, eq);
    const std::string raw = a.substr(eq + 1);
    json::json_pointer ptr;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      ptr /= key.substr(start, dot - start);
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    if (!j.contains(ptr)) throw Error(ExitCode::kUsage, "unknown config key: " + key);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;
    }
    j[ptr] = value;
  }
  try {
    return config_from_json(j);
  } catch (const DataError& e) {
    throw Error(ExitCode::kUsage, e.what());
  }
}

std::string config_hash(const Config& config) { return hex(fnv1a(to_json(config).dump())); }

std::string resume_key(const Config& config) {
  ordered_json j = to_json(config);
  j["train"].erase("epochs");
  j.erase("eval");
  return hex(fnv1a(j.dump()));
}

std::vector<std::string> validate_config(const Config& c) {
  std::vector<std::string> out;
  const Dims& d = c.dims;
  for (int v : {d.text, d.feature, d.pose, d.part, d.context, d.state, d.match})
    if (v <= 0) {
      out.push_back("all dims must be positive");
      break;
    }
  const Hyper& h = c.hyper;
  if (!(h.eps > 0)) out.push_back("hyper.eps must be > 0");
  if (!(h.tau > 0)) out.push_back("hyper.tau must be > 0");
  if (h.alpha_lower < 0 || h.alpha_lower > 1 || h.alpha_upper < 0 || h.alpha_upper > 1)
    out.push_back("hyper.alpha_* must be in [0, 1]");
  for (double l : {h.lambda_gamma, h.lambda_delta, h.lambda_ipl, h.lambda_csc, h.lambda_align})
    if (l < 0) {
      out.push_back("hyper.lambda_* must be >= 0");
      break;
    }
  if (c.train.epochs < 0) out.push_back("train.epochs must be >= 0");
  if (c.train.batch <= 0) out.push_back("train.batch must be > 0");
  if (!(c.train.lr > 0)) out.push_back("train.lr must be > 0");
  if (c.train.counterfactuals < 0) out.push_back("train.counterfactuals must be >= 0");
  if (c.train.csc_warmup_epochs < 0) out.push_back("train.csc_warmup_epochs must be >= 0");
  if (c.eval.top_k <= 0) out.push_back("eval.top_k must be > 0");
  if (c.eval.split != "train" && c.eval.split != "val" && c.eval.split != "test")
    out.push_back("eval.split must be train, val or test");
  if (c.data.train_scenes < 0 || c.data.val_scenes < 0 || c.data.test_scenes < 0)
    out.push_back("data scene counts must be >= 0");
  if (c.data.unseen_fraction < 0 || c.data.unseen_fraction >= 1)
    out.push_back("data.unseen_fraction must be in [0, 1)");
  return out;
}

}  // namespace scriptmatch
