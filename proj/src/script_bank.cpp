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

#include "scriptmatch/script_bank.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "scriptmatch/kernels.hpp"
#include "scriptmatch/rng.hpp"

namespace scriptmatch {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void softmax_inplace(std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

std::vector<double> gaussian_vector(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

PerSlot<int> argmaxes(const Script& s) {
  PerSlot<int> a{};
  for (Slot k : kAllSlots) a[slot_index(k)] = s.argmax(k);
  return a;
}

}  // namespace

Script derive_script(std::span<const double> t, const ModelParams& params) {
  if (static_cast<int>(t.size()) != params.shape.dims.text)
    throw std::invalid_argument("derive_script: embedding has " + std::to_string(t.size()) +
                                " entries, expected " + std::to_string(params.shape.dims.text));
  const auto& kt = kernels::active();
  Script out;
  for (int k = 0; k < kNumSlots; ++k) {
    const Matrix& w = params.script_head[k];
    auto& d = out.dist[k];
    d.resize(w.rows);
    kt.gemv(w.data.data(), w.rows, w.cols, t.data(), d.data());
    softmax_inplace(d);
    out.reliability[k] = sigmoid(kt.dot(params.reliability_head[k].data(), t.data(), t.size()));
  }
  return out;
}

void derive_script_backward(std::span<const double> t, const Script& script,
                            const PerSlot<std::vector<double>>& grad_dist,
                            const PerSlot<double>& grad_reliability, ModelParams& grad) {
  const auto& kt = kernels::active();
  std::vector<double> glogit;
  for (int k = 0; k < kNumSlots; ++k) {
    const auto& p = script.dist[k];
    const auto& gp = grad_dist[k];
    const double inner = kt.dot(p.data(), gp.data(), p.size());
    glogit.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) glogit[i] = p[i] * (gp[i] - inner);
    Matrix& gw = grad.script_head[k];
    kt.ger(1.0, glogit.data(), glogit.size(), t.data(), t.size(), gw.data.data());
    const double rho = script.reliability[k];
    kt.axpy(grad_reliability[k] * rho * (1.0 - rho), t.data(), grad.reliability_head[k].data(),
            t.size());
  }
}

void assign_embeddings(std::vector<Phrase>& phrases, int dim, std::uint64_t seed) {
  const int verb_dim = 3 * dim / 8;
  const int object_dim = 3 * dim / 8;
  const int own_dim = dim - verb_dim - object_dim;
  for (Phrase& p : phrases) {
    const auto verb = gaussian_vector(mix_seed(seed, fnv1a("verb:" + p.verb)), verb_dim);
    const auto object =
        gaussian_vector(mix_seed(seed, fnv1a("object:" + p.object_category)), object_dim);
    const auto own = gaussian_vector(mix_seed(seed, fnv1a("phrase:" + std::to_string(p.id))),
                                     own_dim);
    p.embedding.clear();
    p.embedding.insert(p.embedding.end(), verb.begin(), verb.end());
    p.embedding.insert(p.embedding.end(), object.begin(), object.end());
    p.embedding.insert(p.embedding.end(), own.begin(), own.end());
    double norm = 0.0;
    for (double x : p.embedding) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : p.embedding) x /= norm;
  }
}

void fit_script_heads(ModelParams& params, const std::vector<Phrase>& phrases,
                      const std::vector<Script>& targets, double ridge) {
  if (phrases.size() != targets.size())
    throw std::invalid_argument("fit_script_heads: phrase/target count mismatch");
  if (phrases.empty()) return;
  const int n = static_cast<int>(phrases.size());
  const int d = params.shape.dims.text;
  Eigen::MatrixXd t(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) t(i, j) = phrases[i].embedding.at(j);
  const Eigen::MatrixXd gram =
      t.transpose() * t + ridge * Eigen::MatrixXd::Identity(d, d);
  const Eigen::LDLT<Eigen::MatrixXd> solver(gram);
  for (int k = 0; k < kNumSlots; ++k) {
    const int values = params.shape.vocab.size(kAllSlots[k]);
    Eigen::MatrixXd y(n, values + 1);
    for (int i = 0; i < n; ++i) {
      const auto& p = targets[i].dist[k];
      double mean = 0.0;
      for (int v = 0; v < values; ++v) mean += std::log(std::max(p[v], 1e-6));
      mean /= values;
      for (int v = 0; v < values; ++v) y(i, v) = std::log(std::max(p[v], 1e-6)) - mean;
      const double rho = std::clamp(targets[i].reliability[k], 1e-6, 1.0 - 1e-6);
      y(i, values) = std::log(rho / (1.0 - rho));
    }
    const Eigen::MatrixXd w = solver.solve(t.transpose() * y);  // d x (values+1)
    for (int v = 0; v < values; ++v)
      for (int j = 0; j < d; ++j) params.script_head[k](v, j) = w(j, v);
    for (int j = 0; j < d; ++j) params.reliability_head[k][j] = w(j, values);
  }
}

ScriptBank::ScriptBank(std::vector<Phrase> phrases, std::map<int, Script> overrides,
                       int counterfactual_count, std::uint64_t counterfactual_seed)
    : phrases_(std::move(phrases)),
      overrides_(std::move(overrides)),
      cf_count_(counterfactual_count),
      cf_seed_(counterfactual_seed) {
  for (int i = 0; i < size(); ++i) {
    if (!id_to_index_.emplace(phrases_[i].id, i).second)
      throw std::invalid_argument("duplicate phrase id " + std::to_string(phrases_[i].id));
  }
  overridden_.assign(phrases_.size(), false);
  for (const auto& [id, script] : overrides_) {
    const int idx = index_of(id);
    if (idx < 0) throw std::invalid_argument("script override for unknown phrase id " +
                                             std::to_string(id));
    overridden_[idx] = true;
  }
}

int ScriptBank::index_of(int id) const {
  auto it = id_to_index_.find(id);
  return it == id_to_index_.end() ? -1 : it->second;
}

void ScriptBank::refresh(const ModelParams& params) {
  scripts_.resize(phrases_.size());
  for (int i = 0; i < size(); ++i)
    scripts_[i] = overridden_[i] ? overrides_.at(phrases_[i].id)
                                 : derive_script(phrases_[i].embedding, params);
  cf_index_.resize(phrases_.size());
  for (int i = 0; i < size(); ++i) cf_index_[i] = counterfactuals(i, cf_count_, cf_seed_);
}

std::vector<Counterfactual> ScriptBank::counterfactuals(int index, int n,
                                                        std::uint64_t seed) const {
  std::vector<Counterfactual> out;
  if (n <= 0) return out;
  const Script& anchor = scripts_.at(index);
  const PerSlot<int> anchor_arg = argmaxes(anchor);

  // Weighted slot order without replacement: smallest Exp(1)/rho first.
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(phrases_[index].id)));
  std::array<std::pair<double, int>, kNumSlots> keys;
  for (int k = 0; k < kNumSlots; ++k) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    keys[k] = {-std::log(u) / std::max(anchor.reliability[k], 1e-12), k};
  }
  std::sort(keys.begin(), keys.end());

  PerSlot<std::vector<int>> real;
  for (int j = 0; j < size(); ++j) {
    if (j == index || phrases_[j].object_category != phrases_[index].object_category) continue;
    const PerSlot<int> arg = argmaxes(scripts_[j]);
    int differing = 0;
    int slot = -1;
    for (int k = 0; k < kNumSlots; ++k)
      if (arg[k] != anchor_arg[k]) {
        ++differing;
        slot = k;
      }
    if (differing == 1) real[slot].push_back(j);
  }

  PerSlot<std::size_t> used{};
  bool progress = true;
  while (static_cast<int>(out.size()) < n && progress) {
    progress = false;
    for (const auto& [key, k] : keys) {
      if (static_cast<int>(out.size()) >= n) break;
      if (used[k] < real[k].size()) {
        const int j = real[k][used[k]++];
        out.push_back({j, kAllSlots[k], scripts_[j]});
        progress = true;
      }
    }
  }

  // Virtual fill: alternatives per slot in decreasing anchor probability.
  PerSlot<std::vector<int>> alternatives;
  for (int k = 0; k < kNumSlots; ++k) {
    const auto& p = anchor.dist[k];
    std::vector<int> alt(p.size());
    std::iota(alt.begin(), alt.end(), 0);
    alt.erase(alt.begin() + anchor_arg[k]);
    std::stable_sort(alt.begin(), alt.end(), [&](int a, int b) { return p[a] > p[b]; });
    alternatives[k] = std::move(alt);
  }
  PerSlot<std::size_t> alt_used{};
  progress = true;
  while (static_cast<int>(out.size()) < n && progress) {
    progress = false;
    for (const auto& [key, k] : keys) {
      if (static_cast<int>(out.size()) >= n) break;
      if (alt_used[k] < alternatives[k].size()) {
        const int value = alternatives[k][alt_used[k]++];
        Script virt = anchor;
        std::fill(virt.dist[k].begin(), virt.dist[k].end(), 0.0);
        virt.dist[k][value] = 1.0;
        out.push_back({-1, kAllSlots[k], std::move(virt)});
        progress = true;
      }
    }
  }
  return out;
}

}  // namespace scriptmatch
