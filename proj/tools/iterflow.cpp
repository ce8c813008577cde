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

// iterflow command-line driver.
//
// Exit codes: 0 success, 1 user error, 2 internal error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "iterflow/api.hpp"
#include "iterflow/report.hpp"

namespace {

using iterflow::fs::path;

std::string ReadSource(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw iterflow::NotFound("cannot read " + file);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// "latest", "best:<metric>", or a numeric id.
int ResolveVersion(const iterflow::Workspace& ws, const std::string& ref) {
  if (ref == "latest") {
    auto v = ws.Latest();
    if (!v) throw iterflow::NotFound("workspace has no versions");
    return v->id;
  }
  if (ref.rfind("best:", 0) == 0) return ws.BestVersion(ref.substr(5)).id;
  int id = 0;
  if (!iterflow::detail::ParseInt(ref, id)) throw iterflow::NotFound("bad version id '" + ref + "'");
  return id;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iterflow: iterative workflow execution with result reuse"};
  app.require_subcommand(1);

  std::string workspace_dir = ".iterflow";
  if (const char* env = std::getenv("ITERFLOW_WORKSPACE")) workspace_dir = env;
  app.add_option("--workspace", workspace_dir, "workspace directory (env ITERFLOW_WORKSPACE)");

  iterflow::RunOptions run;
  std::string file;

  auto* run_cmd = app.add_subcommand("run", "execute one iteration of a workflow");
  run_cmd->add_option("file", file, "workflow file (.wf)")->required();
  run_cmd->add_option("--budget", run.budget_bytes, "materialization budget in bytes");
  run_cmd->add_option("--seed", run.seed, "learner seed");
  run_cmd->add_flag("--no-reuse", run.force_recompute, "recompute everything (baseline)");
  run_cmd->add_flag("--sim-clock", run.sim_clock, "advance a virtual clock for sim operators");

  auto* plan_cmd = app.add_subcommand("plan", "print the optimal plan without executing");
  plan_cmd->add_option("file", file, "workflow file (.wf)")->required();
  plan_cmd->add_flag("--no-reuse", run.force_recompute, "plan as if nothing were stored");

  auto* versions_cmd = app.add_subcommand("versions", "list recorded versions");

  std::string ref_a, ref_b;
  auto* show_cmd = app.add_subcommand("show", "show one version's execution record");
  show_cmd->add_option("id", ref_a, "version id, 'latest' or 'best:<metric>'")->required();

  auto* compare_cmd = app.add_subcommand("compare", "compare two versions");
  compare_cmd->add_option("a", ref_a)->required();
  compare_cmd->add_option("b", ref_b)->required();

  std::string out_file;
  auto* checkout_cmd = app.add_subcommand("checkout", "print or write a version's source");
  checkout_cmd->add_option("id", ref_a, "version id, 'latest' or 'best:<metric>'")->required();
  checkout_cmd->add_option("-o", out_file, "write to FILE instead of stdout");

  int port = iterflow::kDefaultPort;
  std::string host = "127.0.0.1";
  std::string ui_dir;
  auto* serve_cmd = app.add_subcommand("serve", "serve the HTTP API");
  serve_cmd->add_option("--port", port, "listen port");
  serve_cmd->add_option("--host", host, "listen address");
  serve_cmd->add_option("--ui", ui_dir, "directory of static UI assets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd || *plan_cmd) {
      auto ws = iterflow::Workspace::Init(workspace_dir);
      run.data_root = iterflow::fs::absolute(path(file)).parent_path();
      std::string source = ReadSource(file);
      if (*plan_cmd) {
        iterflow::RenderPlan(std::cout, iterflow::PlanIteration(ws, source, run));
      } else {
        auto record = iterflow::RunIteration(ws, source, run);
        iterflow::RenderRecord(std::cout, ws.GetVersion(record.version));
      }
    } else if (*versions_cmd) {
      iterflow::RenderVersions(std::cout, iterflow::Workspace::Init(workspace_dir).ListVersions());
    } else if (*show_cmd) {
      auto ws = iterflow::Workspace::Open(workspace_dir);
      iterflow::RenderRecord(std::cout, ws.GetVersion(ResolveVersion(ws, ref_a)));
    } else if (*compare_cmd) {
      auto ws = iterflow::Workspace::Open(workspace_dir);
      iterflow::RenderComparison(std::cout, ws.Compare(ResolveVersion(ws, ref_a), ResolveVersion(ws, ref_b)));
    } else if (*checkout_cmd) {
      auto ws = iterflow::Workspace::Open(workspace_dir);
      std::string source = ws.Checkout(ResolveVersion(ws, ref_a));
      if (out_file.empty()) {
        std::cout << source;
      } else {
        std::ofstream out(out_file, std::ios::binary | std::ios::trunc);
        if (!out) throw iterflow::Error("cannot write " + out_file);
        out << source;
      }
    } else if (*serve_cmd) {
      auto ws = iterflow::Workspace::Init(workspace_dir);
      httplib::Server server;
      iterflow::ApiOptions opts;
      opts.run.data_root = iterflow::fs::current_path();
      opts.static_dir = ui_dir;
      iterflow::RegisterApi(server, ws, opts);
      std::cerr << "listening on http://" << host << ":" << port << "\n";
      if (!server.listen(host, port)) throw iterflow::Error("cannot listen on " + host + ":" + std::to_string(port));
    }
  } catch (const iterflow::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
