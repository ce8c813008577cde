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

// Exact max-flow / min-cut on integer capacities (Dinic's algorithm).

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

namespace iterflow {

template <std::signed_integral Cap>
class FlowNetwork {
 public:
  struct Arc {
    std::size_t from;
    std::size_t to;
    Cap capacity;
  };

  FlowNetwork() = default;
  explicit FlowNetwork(std::size_t vertices, std::size_t source = 0, std::size_t sink = 1)
      : vertices_(vertices), source_(source), sink_(sink) {
    if (vertices < 2 || source >= vertices || sink >= vertices || source == sink)
      throw std::invalid_argument("flow network needs distinct source and sink");
  }

  void AddArc(std::size_t from, std::size_t to, Cap capacity) {
    if (from >= vertices_ || to >= vertices_) throw std::out_of_range("arc endpoint");
    if (capacity < 0) throw std::invalid_argument("negative capacity");
    arcs_.push_back({from, to, capacity});
  }

  std::size_t vertex_count() const noexcept { return vertices_; }
  std::size_t source() const noexcept { return source_; }
  std::size_t sink() const noexcept { return sink_; }
  const std::vector<Arc>& arcs() const noexcept { return arcs_; }

 private:
  std::size_t vertices_ = 2;
  std::size_t source_ = 0;
  std::size_t sink_ = 1;
  std::vector<Arc> arcs_;
};

template <std::signed_integral Cap>
struct MinCut {
  Cap value = 0;
  std::vector<bool> source_side;  // indexed by vertex
};

namespace detail {

template <std::signed_integral Cap>
class Dinic {
 public:
  explicit Dinic(const FlowNetwork<Cap>& net) : graph_(net.vertex_count()) {
    for (const auto& a : net.arcs()) {
      graph_[a.from].push_back({a.to, graph_[a.to].size(), a.capacity});
      graph_[a.to].push_back({a.from, graph_[a.from].size() - 1, 0});
    }
  }

  Cap Run(std::size_t s, std::size_t t) {
    Cap flow = 0;
    while (BuildLevels(s, t)) {
      next_.assign(graph_.size(), 0);
      while (Cap pushed = Augment(s, t, std::numeric_limits<Cap>::max())) flow += pushed;
    }
    return flow;
  }

  // Vertices reachable from s in the residual graph.
  std::vector<bool> Reachable(std::size_t s) const {
    std::vector<bool> seen(graph_.size(), false);
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      std::size_t v = stack.back();
      stack.pop_back();
      for (const auto& e : graph_[v])
        if (e.residual > 0 && !seen[e.to]) {
          seen[e.to] = true;
          stack.push_back(e.to);
        }
    }
    return seen;
  }

 private:
  struct Edge {
    std::size_t to;
    std::size_t rev;
    Cap residual;
  };

  bool BuildLevels(std::size_t s, std::size_t t) {
    level_.assign(graph_.size(), -1);
    std::queue<std::size_t> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      std::size_t v = q.front();
      q.pop();
      for (const auto& e : graph_[v])
        if (e.residual > 0 && level_[e.to] < 0) {
          level_[e.to] = level_[v] + 1;
          q.push(e.to);
        }
    }
    return level_[t] >= 0;
  }

  Cap Augment(std::size_t v, std::size_t t, Cap limit) {
    if (v == t) return limit;
    for (std::size_t& i = next_[v]; i < graph_[v].size(); ++i) {
      Edge& e = graph_[v][i];
      if (e.residual <= 0 || level_[e.to] != level_[v] + 1) continue;
      Cap pushed = Augment(e.to, t, std::min(limit, e.residual));
      if (pushed > 0) {
        e.residual -= pushed;
        graph_[e.to][e.rev].residual += pushed;
        return pushed;
      }
    }
    return 0;
  }

  std::vector<std::vector<Edge>> graph_;
  std::vector<int> level_;
  std::vector<std::size_t> next_;
};

}  // namespace detail

/// Minimum s-t cut. `source_side` is the residual-reachable set from the
/// source after a maximum flow, i.e. the minimal source side.
template <std::signed_integral Cap>
MinCut<Cap> ComputeMinCut(const FlowNetwork<Cap>& net) {
  detail::Dinic<Cap> dinic(net);
  MinCut<Cap> out;
  out.value = dinic.Run(net.source(), net.sink());
  out.source_side = dinic.Reachable(net.source());
  return out;
}

/// Total capacity of arcs leaving `source_side`.
template <std::signed_integral Cap>
Cap CutCapacity(const FlowNetwork<Cap>& net, const std::vector<bool>& source_side) {
  Cap total = 0;
  for (const auto& a : net.arcs())
    if (source_side[a.from] && !source_side[a.to]) total += a.capacity;
  return total;
}

}  // namespace iterflow
