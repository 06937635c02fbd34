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

// scriptmatch: generate / train / eval / ablate / check.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scriptmatch/config.hpp"
#include "scriptmatch/error.hpp"
#include "scriptmatch/experiment.hpp"
#include "scriptmatch/io.hpp"
#include "scriptmatch/selfcheck.hpp"
#include "scriptmatch/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace scriptmatch;

namespace {

struct Common {
  std::string config_path;
  std::string data_dir;
  std::string out_dir;
  std::string mode;
  std::vector<std::string> sets;
  long long seed = -1;
  int threads = 1;
};

void add_common(CLI::App* cmd, Common& c, bool data) {
  cmd->add_option("--config", c.config_path, "Config file (JSON)");
  cmd->add_option("--seed", c.seed, "Override the run seed")->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads", c.threads, "Worker threads; never changes results")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--set", c.sets, "Override one config key: section.key=value");
  if (data) cmd->add_option("--data", c.data_dir, "Dataset directory written by gen")->required();
}

// --config wins, then the dataset's own config, then the defaults.
Config resolve_config(const Common& c) {
  Config config;
  if (!c.config_path.empty()) {
    config = load_config(c.config_path);
  } else if (!c.data_dir.empty() && fs::exists(fs::path(c.data_dir) / "config.json")) {
    config = load_config((fs::path(c.data_dir) / "config.json").string());
  }
  std::vector<std::string> sets = c.sets;
  if (c.seed >= 0) sets.push_back("seed=" + std::to_string(c.seed));
  if (!c.mode.empty()) sets.push_back("train.mode=\"" + c.mode + "\"");
  config = apply_overrides(config, sets);
  parse_mode(config.train.mode);
  const auto problems = validate_config(config);
  if (!problems.empty()) throw DataError("invalid config: " + problems.front());
  return config;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

int cmd_gen(const Common& c) {
  const Config config = resolve_config(c);
  const Dataset data = generate_dataset(config);
  write_dataset(c.out_dir, config, data);
  for (const auto& w : data.warnings) std::cerr << "warning: " << w << "\n";
  const ordered_json summary{{"config_hash", config_hash(config)},
                             {"out", c.out_dir},
                             {"train", data.train.size()},
                             {"val", data.val.size()},
                             {"test", data.test.size()},
                             {"unseen_phrases", data.unseen.size()}};
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_train(const Common& c, const std::string& resume_path) {
  const Config config = resolve_config(c);
  const Dataset data = load_dataset(c.data_dir);
  ensure_dir(c.out_dir);
  const std::string hash = config_hash(config);

  Checkpoint resume;
  TrainOptions options;
  options.threads = c.threads;
  if (!resume_path.empty()) {
    resume = load_checkpoint(resume_path);
    options.resume = &resume;
  }
  std::ofstream log(join(c.out_dir, "train_log.jsonl"), std::ios::binary);
  if (!log) throw DataError("cannot write " + join(c.out_dir, "train_log.jsonl"));
  log << ordered_json{{"schema", "scriptmatch/train_log/1"},
                      {"config_hash", hash},
                      {"mode", config.train.mode},
                      {"seed", config.seed}}
             .dump()
      << "\n";
  options.on_epoch = [&](const EpochLog& e) {
    log << to_json(e).dump() << "\n";
    log.flush();
  };
  const TrainResult result = run_training(config, data, options);
  save_checkpoint(join(c.out_dir, "model.ckpt"), make_checkpoint(config, result));
  ordered_json summary{{"config_hash", hash},
                       {"mode", config.train.mode},
                       {"epochs_done", result.epochs_done},
                       {"checkpoint", join(c.out_dir, "model.ckpt")}};
  if (!result.log.empty()) summary["final_loss"] = result.log.back().mean.total;
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_eval(const Common& c, const std::string& checkpoint_path,
             const std::string& predictions_path, const std::string& split_override) {
  Config config = resolve_config(c);
  if (!split_override.empty()) config = apply_overrides(config, {"eval.split=\"" + split_override + "\""});
  const Dataset data = load_dataset(c.data_dir);
  ensure_dir(c.out_dir);

  ModelParams params = zero_params(config.shape(), config.hyper);
  if (!checkpoint_path.empty()) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    if (ckpt.params.size() != param_count(config.shape()))
      throw DataError(checkpoint_path + ": parameter count does not match the config");
    params = restore_params(config, data, ckpt);
  } else if (predictions_path.empty()) {
    throw Error(ExitCode::kUsage, "eval needs --checkpoint or --predictions");
  }

  std::vector<RankedPrediction> given;
  if (!predictions_path.empty()) given = read_predictions(predictions_path);
  const EvalOutput out = run_evaluation(config, data, params, config.eval.split, c.threads,
                                        predictions_path.empty() ? nullptr : &given);
  write_text(join(c.out_dir, "metrics.json"), out.metrics.dump(2) + "\n");
  write_predictions(join(c.out_dir, "predictions.jsonl"), out.predictions,
                    ordered_json{{"config_hash", config_hash(config)},
                                 {"split", config.eval.split},
                                 {"mode", config.train.mode}});
  for (const auto& w : out.metrics["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
  std::cout << out.metrics.dump() << "\n";
  return 0;
}

int cmd_ablate(const Common& c, std::vector<std::string> modes) {
  const Config config = resolve_config(c);
  if (modes.empty()) modes = config.eval.ablate_modes;
  for (const auto& m : modes) parse_mode(m);
  const Dataset data = load_dataset(c.data_dir);
  ensure_dir(c.out_dir);
  const auto rows = run_ablation(config, data, modes, c.threads);
  const std::string csv = to_csv(rows);
  write_text(join(c.out_dir, "ablation.csv"), csv);
  std::cout << csv;
  return 0;
}

int cmd_check(const Common& c, const CheckOptions& options_in, const std::string& fault) {
  CheckOptions options = options_in;
  if (!c.config_path.empty() || !c.sets.empty()) {
    const Config config = resolve_config(c);
    options.seed = config.seed;
  }
  if (c.seed >= 0) options.seed = static_cast<std::uint64_t>(c.seed);
  if (fault == "flip_conflict_sign") {
    options.flip_conflict_sign = true;
  } else if (!fault.empty()) {
    throw Error(ExitCode::kUsage, "unknown fault: " + fault);
  }
  const CheckReport report = run_self_check(options);
  const ordered_json j = report.to_json();
  if (!c.out_dir.empty()) {
    ensure_dir(c.out_dir);
    write_text(join(c.out_dir, "check.json"), j.dump(2) + "\n");
  }
  std::cout << j.dump(2) << "\n";
  return report.passed() ? 0 : static_cast<int>(ExitCode::kSelfTest);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Script-based human-object interaction scoring on synthetic worlds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "scriptmatch 0.1.0");

  Common gen, train, eval, ablate, check;
  std::string resume_path, checkpoint_path, predictions_path, split;
  std::vector<std::string> modes;
  CheckOptions check_options;
  std::string fault;

  auto* g = app.add_subcommand("gen", "Generate a synthetic dataset");
  add_common(g, gen, false);
  g->add_option("--out", gen.out_dir, "Output directory")->required();

  auto* t = app.add_subcommand("train", "Train a model");
  add_common(t, train, true);
  t->add_option("--out", train.out_dir, "Output directory (model.ckpt, train_log.jsonl)")
      ->required();
  t->add_option("--mode", train.mode, "full, closed_world, no_ipl, no_csc, no_align, "
                                      "no_calibration or drop_slot:<slot>");
  t->add_option("--resume", resume_path, "Continue from a checkpoint");

  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint or a predictions file");
  add_common(e, eval, true);
  e->add_option("--out", eval.out_dir, "Output directory (metrics.json, predictions.jsonl)")
      ->required();
  e->add_option("--mode", eval.mode, "Mode the checkpoint was trained with");
  e->add_option("--checkpoint", checkpoint_path, "Checkpoint from train");
  e->add_option("--predictions", predictions_path, "Score this predictions JSONL instead");
  e->add_option("--split", split, "train, val or test");

  auto* a = app.add_subcommand("ablate", "Train and evaluate several modes");
  add_common(a, ablate, true);
  a->add_option("--out", ablate.out_dir, "Output directory (ablation.csv)")->required();
  a->add_option("--modes", modes, "Modes to compare (default: eval.ablate_modes)")
      ->delimiter(',');

  auto* c = app.add_subcommand("check", "Run gradient checks, invariants and oracles");
  add_common(c, check, false);
  c->add_option("--out", check.out_dir, "Also write check.json here");
  c->add_option("--tol", check_options.tol, "Gradient-check relative tolerance");
  c->add_option("--step", check_options.step, "Finite-difference step");
  c->add_option("--draws", check_options.draws, "Draws per property")->check(CLI::PositiveNumber);
  c->add_option("--inject-fault", fault, "Mutation to inject: flip_conflict_sign");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*t) return cmd_train(train, resume_path);
    if (*e) return cmd_eval(eval, checkpoint_path, predictions_path, split);
    if (*a) return cmd_ablate(ablate, modes);
    if (*c) return cmd_check(check, check_options, fault);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return static_cast<int>(err.code());
  } catch (const nlohmann::json::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return static_cast<int>(ExitCode::kData);
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return static_cast<int>(ExitCode::kData);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return static_cast<int>(ExitCode::kData);
  }
  return static_cast<int>(ExitCode::kUsage);
}
