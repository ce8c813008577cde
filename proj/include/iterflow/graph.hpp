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

#pragma once

#include <algorithm>
#include <concepts>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "iterflow/digest.hpp"
#include "iterflow/dsl.hpp"
#include "iterflow/error.hpp"

namespace iterflow {

struct DagNode {
  std::string name;
  DeclKind kind = DeclKind::Source;
  std::string func;
  std::vector<Positional> args;  // refs kept in place; see Parents()
  std::map<std::string, Literal> options;
  std::vector<std::string> parents;
  // Digest of the input file for csv sources, folded into the signature.
  std::optional<std::string> input_digest;
  Digest signature;

  /// Positional literal arguments, in order, with parent references removed.
  std::vector<Positional> Literals() const {
    std::vector<Positional> out;
    for (const auto& a : args)
      if (!std::holds_alternative<Ref>(a)) out.push_back(a);
    return out;
  }

  const Literal* Option(std::string_view key) const {
    auto it = options.find(std::string(key));
    return it == options.end() ? nullptr : &it->second;
  }
};

struct WorkflowDag {
  std::string workflow_name;
  std::map<std::string, DagNode> nodes;
  std::vector<std::string> topo_order;
  std::set<std::string> sinks;

  const DagNode& at(const std::string& name) const {
    auto it = nodes.find(name);
    if (it == nodes.end()) throw NotFound("no node named '" + name + "'");
    return it->second;
  }

  /// All transitive ancestors of `name`.
  std::set<std::string> Ancestors(const std::string& name) const {
    std::set<std::string> seen;
    std::vector<std::string> stack = at(name).parents;
    while (!stack.empty()) {
      std::string n = std::move(stack.back());
      stack.pop_back();
      if (!seen.insert(n).second) continue;
      for (const auto& p : at(n).parents) stack.push_back(p);
    }
    return seen;
  }
};

struct SliceResult {
  std::set<std::string> live;
  std::set<std::string> pruned_static;
};

/// Returns the digest of a csv source's file, or nullopt if unreadable.
/// Unreadable inputs still compile; the operator reports the error at run time.
using InputDigester = std::function<std::optional<std::string>(const std::string& path)>;

inline InputDigester FileDigester(std::filesystem::path root) {
  return [root = std::move(root)](const std::string& path) -> std::optional<std::string> {
    std::filesystem::path p(path);
    if (p.is_relative()) p = root / p;
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return Sha256Of(buf.str()).hex();
  };
}

/// Merkle signature: H(func, canonical params, input digest, parent signatures).
/// Parent references are rendered as "@" so argument positions are preserved.
inline Digest NodeSignature(const DagNode& node, const std::vector<Digest>& parent_sigs) {
  Decl shape;
  shape.func = node.func;
  shape.options = node.options;
  for (const auto& a : node.args)
    shape.args.push_back(std::holds_alternative<Ref>(a) ? Positional(Ref{"@"}) : a);
  Sha256 h;
  h.Field("iterflow-node-v1");
  h.Field(node.func);
  h.Field(FormatArgs(shape));
  h.Field(node.input_digest.value_or(""));
  h.Field(std::to_string(parent_sigs.size()));
  for (const auto& p : parent_sigs) h.Update(p);
  return h.Finish();
}

inline bool IsSinkKind(DeclKind k) { return k == DeclKind::Output || k == DeclKind::Metric; }

/// Path argument of a csv source (first string literal), if any.
inline std::optional<std::string> SourcePath(const DagNode& node) {
  if (node.func != "csv") return std::nullopt;
  for (const auto& a : node.args)
    if (const auto* s = std::get_if<std::string>(&a)) return *s;
  if (const auto* p = node.Option("path"))
    if (const auto* s = std::get_if<std::string>(p)) return *s;
  return std::nullopt;
}

/// Compiles a parsed workflow into a signed DAG. File order is the
/// topological order, since the parser rejects forward references.
inline WorkflowDag Compile(const WorkflowAst& ast, const InputDigester& digester = {}) {
  WorkflowDag dag;
  dag.workflow_name = ast.workflow_name;
  for (const auto& d : ast.decls) {
    DagNode node;
    node.name = d.name;
    node.kind = d.kind;
    node.func = d.func;
    node.args = d.args;
    node.options = d.options;
    node.parents = d.Parents();
    if (auto path = SourcePath(node); path && digester)
      node.input_digest = digester(*path).value_or("unreadable");
    std::vector<Digest> parent_sigs;
    for (const auto& p : node.parents) parent_sigs.push_back(dag.at(p).signature);
    node.signature = NodeSignature(node, parent_sigs);
    if (IsSinkKind(node.kind)) dag.sinks.insert(node.name);
    dag.topo_order.push_back(node.name);
    dag.nodes.emplace(node.name, std::move(node));
  }
  if (dag.sinks.empty())
    throw CompileError("workflow '" + ast.workflow_name + "' has no output or metric declaration");
  return dag;
}

/// Keeps exactly the nodes from which some sink is reachable.
inline SliceResult Slice(const WorkflowDag& dag) {
  SliceResult out;
  std::deque<std::string> queue(dag.sinks.begin(), dag.sinks.end());
  while (!queue.empty()) {
    std::string n = std::move(queue.front());
    queue.pop_front();
    if (!out.live.insert(n).second) continue;
    for (const auto& p : dag.at(n).parents) queue.push_back(p);
  }
  for (const auto& [name, node] : dag.nodes)
    if (!out.live.contains(name)) out.pruned_static.insert(name);
  return out;
}

template <typename Index>
concept SignatureIndex = requires(const Index& idx, const Digest& d) {
  { idx.contains(d) } -> std::convertible_to<bool>;
};

/// A node can be loaded iff the index holds its exact signature.
template <SignatureIndex Index>
std::map<std::string, bool> LoadFeasibility(const WorkflowDag& dag, const Index& index) {
  std::map<std::string, bool> out;
  for (const auto& [name, node] : dag.nodes) out[name] = static_cast<bool>(index.contains(node.signature));
  return out;
}

}  // namespace iterflow
