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

#include <stdexcept>
#include <string>
#include <utility>

namespace iterflow {

/// Base of every error that is caused by user input or workspace state
/// (as opposed to a bug). The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  enum class Kind { Syntax, DuplicateName, UnknownReference, UnknownKind, UnknownFunc };

  ParseError(Kind kind, int line, std::string detail)
      : Error("line " + std::to_string(line) + ": " + KindName(kind) + ": " + detail),
        kind_(kind),
        line_(line),
        detail_(std::move(detail)) {}

  Kind kind() const noexcept { return kind_; }
  int line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

  static const char* KindName(Kind kind) {
    switch (kind) {
      case Kind::Syntax: return "syntax error";
      case Kind::DuplicateName: return "duplicate name";
      case Kind::UnknownReference: return "unknown reference";
      case Kind::UnknownKind: return "unknown kind";
      case Kind::UnknownFunc: return "unknown function";
    }
    return "error";
  }

 private:
  Kind kind_;
  int line_;
  std::string detail_;
};

/// The workflow compiles but cannot run (e.g. it declares no output or metric).
class CompileError : public Error {
 public:
  using Error::Error;
};

/// A plan violates one of the execution-plan constraints.
class InfeasiblePlan : public Error {
 public:
  InfeasiblePlan(std::string node, std::string constraint)
      : Error("infeasible plan at node '" + node + "': " + constraint),
        node_(std::move(node)),
        constraint_(std::move(constraint)) {}

  const std::string& node() const noexcept { return node_; }
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string node_;
  std::string constraint_;
};

/// An exhaustive oracle was asked to enumerate an instance above its limit.
class TooLarge : public Error {
 public:
  using Error::Error;
};

/// Raised inside operators on bad input data (missing file, schema mismatch).
class DataError : public Error {
 public:
  using Error::Error;
};

/// An operator failed while executing a specific node.
class OperatorError : public Error {
 public:
  OperatorError(std::string node, const std::string& cause)
      : Error("node '" + node + "': " + cause), node_(std::move(node)) {}

  const std::string& node() const noexcept { return node_; }

 private:
  std::string node_;
};

/// The plan asked to load a node whose artifact is not in the store.
class MissingArtifact : public Error {
 public:
  explicit MissingArtifact(std::string node)
      : Error("missing artifact for node '" + node + "'"), node_(std::move(node)) {}

  const std::string& node() const noexcept { return node_; }

 private:
  std::string node_;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

/// Another process holds the workspace writer lock.
class LockHeld : public Error {
 public:
  using Error::Error;
};

}  // namespace iterflow
