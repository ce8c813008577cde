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

// Read-mostly HTTP API over a workspace:
//
//   GET  /api/versions             version summaries
//   GET  /api/versions/{id}        entry + source
//   GET  /api/versions/{id}/dag    nodes with plan states, edges
//   GET  /api/metrics              per-metric series of {version, value}
//   GET  /api/compare?a=&b=        comparison report
//   POST /api/run                  {"source": ..., options} -> {"version": id}

#include <mutex>
#include <string>

#include "httplib.h"

#include "iterflow/engine.hpp"
#include "iterflow/workspace.hpp"

namespace iterflow {

inline constexpr int kDefaultPort = 7878;
inline constexpr const char* kJsonContentType = "application/json";

inline Json VersionSummaryJson(const VersionEntry& v) {
  return Json{{"id", v.id},
              {"parent_id", v.parent_id ? Json(*v.parent_id) : Json(nullptr)},
              {"timestamp", v.timestamp},
              {"source_hash", v.source_hash},
              {"workflow", v.run.workflow},
              {"metrics", v.run.metrics},
              {"wall_clock_us", v.run.wall_clock_us},
              {"change", v.change}};
}

inline Json VersionDetailJson(const VersionEntry& v) {
  Json j = v;
  j["source"] = v.source;
  return j;
}

/// Node states as shown in the DAG view, StaticPrune for sliced-away nodes.
inline Json DagViewJson(const VersionEntry& v) {
  Json nodes = Json::array();
  Json edges = Json::array();
  for (const auto& n : v.run.graph) {
    const NodeEvent* e = v.run.Event(n.name);
    nodes.push_back(Json{{"name", n.name},
                         {"kind", n.kind},
                         {"func", n.func},
                         {"state", v.run.DisplayState(n.name)},
                         {"duration_us", e ? e->duration_us : 0},
                         {"bytes", e ? e->bytes : 0},
                         {"materialized", e && e->materialized}});
    for (const auto& p : n.parents) edges.push_back(Json{{"from", p}, {"to", n.name}});
  }
  return Json{{"version", v.id}, {"nodes", nodes}, {"edges", edges}};
}

inline Json MetricSeriesJson(const std::vector<VersionEntry>& versions) {
  Json out = Json::object();
  for (const auto& v : versions)
    for (const auto& [name, value] : v.run.metrics) {
      if (!out.contains(name)) out[name] = Json::array();
      out[name].push_back(Json{{"version", v.id}, {"value", value}});
    }
  return out;
}

struct ApiOptions {
  RunOptions run;           // defaults for POST /api/run
  std::string static_dir;   // served at / when non-empty
};

namespace detail {

inline void Reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", kJsonContentType);
}

inline void ReplyError(httplib::Response& res, int status, const std::string& message, Json extra = Json::object()) {
  extra["error"] = message;
  Reply(res, status, extra);
}

}  // namespace detail

/// Installs the API routes on `server`. `ws` must outlive the server.
inline void RegisterApi(httplib::Server& server, const Workspace& ws, ApiOptions opts = {}) {
  using detail::Reply;
  using detail::ReplyError;

  auto guarded = [](auto fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const NotFound& e) {
        ReplyError(res, 404, e.what());
      } catch (const std::exception& e) {
        ReplyError(res, 500, e.what());
      }
    };
  };

  server.Get("/api/versions", guarded([&ws](const httplib::Request&, httplib::Response& res) {
               Json list = Json::array();
               for (const auto& v : ws.ListVersions()) list.push_back(VersionSummaryJson(v));
               Reply(res, 200, list);
             }));
  server.Get(R"(/api/versions/(\d+))", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
               Reply(res, 200, VersionDetailJson(ws.GetVersion(std::stoi(req.matches[1]))));
             }));
  server.Get(R"(/api/versions/(\d+)/dag)", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
               Reply(res, 200, DagViewJson(ws.GetVersion(std::stoi(req.matches[1]))));
             }));
  server.Get("/api/metrics", guarded([&ws](const httplib::Request&, httplib::Response& res) {
               Reply(res, 200, MetricSeriesJson(ws.ListVersions()));
             }));
  server.Get("/api/compare", guarded([&ws](const httplib::Request& req, httplib::Response& res) {
               int a = 0, b = 0;
               if (!detail::ParseInt(req.get_param_value("a"), a) || !detail::ParseInt(req.get_param_value("b"), b))
                 return ReplyError(res, 400, "query parameters a and b must be version ids");
               Reply(res, 200, ws.Compare(a, b));
             }));
  server.Post("/api/run", [&ws, opts](const httplib::Request& req, httplib::Response& res) {
    RunOptions run = opts.run;
    std::string source;
    try {
      Json body = Json::parse(req.body);
      source = body.at("source").get<std::string>();
      if (body.contains("budget")) run.budget_bytes = body["budget"].get<std::uint64_t>();
      if (body.contains("seed")) run.seed = body["seed"].get<std::uint64_t>();
      if (body.contains("no_reuse")) run.force_recompute = body["no_reuse"].get<bool>();
      if (body.contains("sim_clock")) run.sim_clock = body["sim_clock"].get<bool>();
    } catch (const Json::exception& e) {
      return ReplyError(res, 400, std::string("bad request body: ") + e.what());
    }
    try {
      RunRecord r = RunIteration(ws, source, run);
      Reply(res, 200, Json{{"version", r.version}});
    } catch (const LockHeld& e) {
      ReplyError(res, 409, e.what());
    } catch (const ParseError& e) {
      ReplyError(res, 422, e.what(), Json{{"line", e.line()}});
    } catch (const OperatorError& e) {
      ReplyError(res, 422, e.what(), Json{{"node", e.node()}});
    } catch (const Error& e) {
      ReplyError(res, 422, e.what());
    } catch (const std::exception& e) {
      ReplyError(res, 500, e.what());
    }
  });
  if (!opts.static_dir.empty()) server.set_mount_point("/", opts.static_dir);
}

}  // namespace iterflow
