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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "scriptmatch/io.hpp"

namespace fs = std::filesystem;
using scriptmatch::read_text;
using scriptmatch::write_text;

namespace {

// Small world so every command finishes in well under a second.
constexpr const char* kConfig = R"({
  "seed": 1,
  "dims": {"text": 8, "feature": 4, "pose": 2, "part": 3, "context": 2, "state": 4, "match": 4},
  "data": {"train_scenes": 12, "val_scenes": 2, "test_scenes": 6},
  "train": {"epochs": 2, "batch": 48, "csc_warmup_epochs": 1}
})";

class Cli : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("scriptmatch_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_text(p("c.json"), kConfig);
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string p(const std::string& name) const { return (dir / name).string(); }

  // Exit status of the CLI; stdout and stderr go to files under `dir`.
  int run(const std::string& args) const {
    const std::string cmd = std::string(SCRIPTMATCH_CLI) + " " + args + " >" + p("stdout") +
                            " 2>" + p("stderr");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  int gen(const std::string& out) const { return run("gen --config " + p("c.json") + " --out " + p(out)); }
};

}  // namespace

TEST_F(Cli, GenIsByteIdenticalAcrossRuns) {
  ASSERT_EQ(gen("a"), 0);
  ASSERT_EQ(run("gen --config " + p("c.json") + " --threads 3 --out " + p("b")), 0);
  for (const char* f : {"manifest.json", "config.json", "bank.jsonl", "train.jsonl", "val.jsonl", "test.jsonl"})
    EXPECT_EQ(read_text(p(std::string("a/") + f)), read_text(p(std::string("b/") + f))) << f;
  const auto m = nlohmann::json::parse(read_text(p("a/manifest.json")));
  EXPECT_EQ(m["scenes"]["train"], 12);
  EXPECT_EQ(m["scenes"]["test"], 6);
  EXPECT_EQ(m["phrases"], 26);
  EXPECT_EQ(m["unseen_phrases"].size(), 5u);
}

TEST_F(Cli, ExitCodes) {
  ASSERT_EQ(gen("d"), 0);
  const std::string base = "--config " + p("c.json") + " --data " + p("d") + " --out " + p("t");
  EXPECT_EQ(run("train " + base + " --mode bogus"), 1);
  EXPECT_EQ(run("train --config " + p("c.json") + " --out " + p("t")), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("train " + base + " --set hyper.nope=1"), 1);
  EXPECT_EQ(run("train --config " + p("c.json") + " --data " + p("missing") + " --out " + p("t")), 2);
  EXPECT_EQ(run("eval --config " + p("c.json") + " --data " + p("d") + " --out " + p("e") +
                " --checkpoint " + p("c.json")),
            2);
  EXPECT_EQ(run("check --draws 200"), 0);
  EXPECT_EQ(run("check --draws 200 --inject-fault flip_conflict_sign"), 4);
  EXPECT_EQ(run("check --draws 200 --tol 1e-12"), 4);
}

TEST_F(Cli, TrainAndEvalAreDeterministicAcrossThreads) {
  ASSERT_EQ(gen("d"), 0);
  const std::string common = "--config " + p("c.json") + " --data " + p("d");
  ASSERT_EQ(run("train " + common + " --out " + p("t1")), 0);
  ASSERT_EQ(run("train " + common + " --threads 3 --out " + p("t3")), 0);
  EXPECT_EQ(read_text(p("t1/model.ckpt")), read_text(p("t3/model.ckpt")));
  EXPECT_EQ(read_text(p("t1/train_log.jsonl")), read_text(p("t3/train_log.jsonl")));

  ASSERT_EQ(run("eval " + common + " --checkpoint " + p("t1/model.ckpt") + " --out " + p("e1")), 0);
  ASSERT_EQ(run("eval " + common + " --threads 2 --checkpoint " + p("t1/model.ckpt") + " --out " + p("e2")), 0);
  EXPECT_EQ(read_text(p("e1/metrics.json")), read_text(p("e2/metrics.json")));
  EXPECT_EQ(read_text(p("e1/predictions.jsonl")), read_text(p("e2/predictions.jsonl")));

  // Re-scoring the written predictions reproduces the metrics.
  ASSERT_EQ(run("eval " + common + " --predictions " + p("e1/predictions.jsonl") + " --out " + p("e3")), 0);
  EXPECT_EQ(read_text(p("e1/metrics.json")), read_text(p("e3/metrics.json")));
}

TEST_F(Cli, ResumeMatchesAnUninterruptedRun) {
  ASSERT_EQ(gen("d"), 0);
  const std::string common = "--config " + p("c.json") + " --data " + p("d");
  ASSERT_EQ(run("train " + common + " --set train.epochs=1 --out " + p("one")), 0);
  ASSERT_EQ(run("train " + common + " --resume " + p("one/model.ckpt") + " --out " + p("resumed")), 0);
  ASSERT_EQ(run("train " + common + " --out " + p("straight")), 0);
  EXPECT_EQ(read_text(p("resumed/model.ckpt")), read_text(p("straight/model.ckpt")));
  EXPECT_EQ(run("train " + common + " --set hyper.tau=0.3 --resume " + p("one/model.ckpt") + " --out " +
                p("bad")),
            2);
}

TEST_F(Cli, EmptyPredictionsGiveZeroMetricsAndAWarning) {
  ASSERT_EQ(gen("d"), 0);
  write_text(p("empty.jsonl"), "");
  ASSERT_EQ(run("eval --config " + p("c.json") + " --data " + p("d") + " --predictions " + p("empty.jsonl") +
                " --out " + p("e")),
            0);
  const auto m = nlohmann::json::parse(read_text(p("e/metrics.json")));
  for (const auto& [k, v] : m["map"].items()) EXPECT_EQ(v.get<double>(), 0.0) << k;
  EXPECT_FALSE(m["warnings"].empty());
  EXPECT_NE(read_text(p("stderr")).find("warning"), std::string::npos);
}
