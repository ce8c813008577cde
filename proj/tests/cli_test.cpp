// Copyright 2026 The iterflow Authors. All Rights Reserved.
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

// Drives the built command-line binary end to end.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <sstream>

#include "iterflow/dsl.hpp"
#include "iterflow/workspace.hpp"
#include "test_util.hpp"

namespace iterflow {
namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  CliResult Cli(const std::string& args) {
    const fs::path err_file = dir_.path() / "stderr.txt";
    std::string cmd = std::string("'") + ITERFLOW_CLI + "' --workspace '" + ws_dir().string() + "' " + args +
                      " 2>'" + err_file.string() + "'";
    CliResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = testing::ReadAll(err_file);
    return r;
  }

  fs::path ws_dir() const { return dir_.path() / "ws"; }

  std::string Write(const std::string& name, const std::string& text) {
    fs::path p = dir_.path() / name;
    testing::WriteAll(p, text);
    return "'" + p.string() + "'";
  }

  // node -> state column from `show` or `plan` output.
  static std::map<std::string, std::string> States(const std::string& out, std::size_t fields, std::size_t col) {
    std::map<std::string, std::string> states;
    std::istringstream in(out);
    for (std::string line; std::getline(in, line);) {
      auto f = detail::SplitTabs(line);
      if (f.size() == fields && f[0][0] != '#') states[f[0]] = f[col];
    }
    return states;
  }

  testing::TempDir dir_;
};

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(Cli("").code, 1);
  EXPECT_EQ(Cli("frobnicate").code, 1);
  EXPECT_EQ(Cli("--help").code, 0);
  EXPECT_EQ(Cli("run '" + (dir_.path() / "missing.wf").string() + "'").code, 1);
}

TEST_F(CliTest, ParseErrorReportsLine) {
  CliResult r = Cli("run " + Write("bad.wf", "workflow w\nsource a = sim()\nmetric m = sim(zz)\n"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST_F(CliTest, RunShowVersionsAndLatest) {
  std::string wf = Write("sim.wf", testing::SimWorkflow(0, 0, 0));
  CliResult run = Cli("run --sim-clock " + wf);
  ASSERT_EQ(run.code, 0) << run.err;
  EXPECT_EQ(run.out.rfind("version\t1\n", 0), 0u);
  EXPECT_NE(run.out.find("metric\tscore\t0.5\n"), std::string::npos);
  CliResult show = Cli("show 1");
  EXPECT_EQ(show.out, run.out);
  EXPECT_EQ(Cli("show latest").out, run.out);
  EXPECT_EQ(Cli("show 1").out, show.out);  // stable
  CliResult versions = Cli("versions");
  EXPECT_NE(versions.out.find("\n1\t-\t"), std::string::npos);
  EXPECT_EQ(Cli("show 7").code, 1);
}

TEST_F(CliTest, PlanAfterRunLoadsReusableSinks) {
  std::string wf = Write("sim.wf", testing::SimWorkflow(0, 0, 0));
  ASSERT_EQ(Cli("run --sim-clock " + wf).code, 0);
  CliResult plan = Cli("plan " + wf);
  ASSERT_EQ(plan.code, 0) << plan.err;
  auto states = States(plan.out, 6, 5);
  ASSERT_EQ(states.size(), 12u);
  for (const auto& sink : {"score", "recall", "report"}) EXPECT_EQ(states.at(sink), "Load") << sink;
  for (const auto& [name, state] : states) EXPECT_NE(state, "Compute") << name;
  EXPECT_NE(plan.out.find("objective_us\t"), std::string::npos);
  EXPECT_EQ(Cli("versions").out.find("\n2\t"), std::string::npos);  // plan records nothing
}

TEST_F(CliTest, NoReuseRunsComputeEverything) {
  std::string wf = Write("sim.wf", testing::SimWorkflow(0, 0, 0));
  for (int i = 1; i <= 2; ++i) {
    CliResult r = Cli("run --sim-clock --no-reuse " + wf);
    ASSERT_EQ(r.code, 0) << r.err;
    auto states = States(r.out, 6, 1);
    ASSERT_EQ(states.size(), 12u);
    for (const auto& [name, state] : states) EXPECT_EQ(state, "Compute") << name;
  }
  const std::string a = Cli("show 1").out, b = Cli("show 2").out;
  EXPECT_EQ(States(a, 6, 1), States(b, 6, 1));
  EXPECT_EQ(States(a, 6, 2), States(b, 6, 2));  // compute durations
}

TEST_F(CliTest, CompareListsModifiedDecls) {
  const std::string s1 = testing::SimWorkflow(0, 0, 0), s2 = testing::SimWorkflow(0, 1, 0),
                    s3 = testing::SimWorkflow(1, 1, 2);
  for (const auto& s : {s1, s2, s3}) ASSERT_EQ(Cli("run --sim-clock " + Write("v.wf", s)).code, 0);
  CliResult r = Cli("compare 2 3");
  ASSERT_EQ(r.code, 0) << r.err;
  DeclDiff oracle = Diff(Parse(s2), Parse(s3));
  std::string expected;
  for (const auto& n : oracle.modified) expected += (expected.empty() ? "" : ",") + n;
  EXPECT_NE(r.out.find("decls_modified\t" + expected + "\n"), std::string::npos) << r.out;
  EXPECT_EQ(oracle.modified, (std::set<std::string>{"report", "score", "tokens"}));
  EXPECT_NE(r.out.find("--- source\n"), std::string::npos);
  EXPECT_NE(r.out.find("\n-sim tokens"), std::string::npos);
  EXPECT_NE(r.out.find("\n+sim tokens"), std::string::npos);
}

TEST_F(CliTest, CheckoutRoundTrip) {
  const std::string s1 = testing::SimWorkflow(0, 0, 3), s2 = testing::SimWorkflow(0, 0, 1);
  ASSERT_EQ(Cli("run --sim-clock " + Write("a.wf", s1)).code, 0);
  ASSERT_EQ(Cli("run --sim-clock " + Write("b.wf", s2)).code, 0);
  EXPECT_EQ(Cli("checkout 2").out, s2);
  EXPECT_EQ(Cli("checkout best:score").out, s1);  // score 0.8 beats 0.6
  fs::path out = dir_.path() / "restored.wf";
  ASSERT_EQ(Cli("checkout 1 -o '" + out.string() + "'").code, 0);
  EXPECT_EQ(testing::ReadAll(out), s1);
  EXPECT_EQ(Cli("checkout best:nothing").code, 1);
}

TEST_F(CliTest, CorruptRecordIsInternalError) {
  ASSERT_EQ(Cli("run --sim-clock " + Write("a.wf", testing::SimWorkflow(0, 0, 0))).code, 0);
  testing::WriteAll(ws_dir() / "versions" / "1" / "record.json", "{not json");
  CliResult r = Cli("show 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("internal error"), std::string::npos);
}

TEST_F(CliTest, WorkspaceFromEnvironment) {
  fs::path env_ws = dir_.path() / "env_ws";
  std::string cmd = "ITERFLOW_WORKSPACE='" + env_ws.string() + "' '" + ITERFLOW_CLI + "' versions >/dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(env_ws / "manifest"));
}

}  // namespace
}  // namespace iterflow
