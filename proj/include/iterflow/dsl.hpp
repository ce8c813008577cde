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

// The workflow language. One declaration per line:
//
//   workflow census
//   source data = csv("census.csv")          # comment
//   extractor age = numeric(data, "age")
//   learner model = logreg(feats, label="y", reg=0.1)
//
// Positional identifiers are parent references; literals may be strings or
// numbers; keyword values may additionally be bare identifiers (symbols).

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include "iterflow/error.hpp"

namespace iterflow {

enum class DeclKind { Source, Extractor, Features, Learner, Output, Metric, Sim };

inline const char* KindName(DeclKind kind) {
  switch (kind) {
    case DeclKind::Source: return "source";
    case DeclKind::Extractor: return "extractor";
    case DeclKind::Features: return "features";
    case DeclKind::Learner: return "learner";
    case DeclKind::Output: return "output";
    case DeclKind::Metric: return "metric";
    case DeclKind::Sim: return "sim";
  }
  return "?";
}

inline std::optional<DeclKind> KindFromName(std::string_view name) {
  static const std::map<std::string, DeclKind, std::less<>> kKinds = {
      {"source", DeclKind::Source},   {"extractor", DeclKind::Extractor},
      {"features", DeclKind::Features}, {"learner", DeclKind::Learner},
      {"output", DeclKind::Output},   {"metric", DeclKind::Metric},
      {"sim", DeclKind::Sim}};
  auto it = kKinds.find(name);
  if (it == kKinds.end()) return std::nullopt;
  return it->second;
}

/// Operator functions the parser accepts. Must stay in sync with the
/// built-in registry in operators.hpp.
inline const std::set<std::string, std::less<>>& KnownFuncs() {
  static const std::set<std::string, std::less<>> kFuncs = {
      "csv",   "numeric", "categorical", "bucketize", "union", "logreg",
      "predict", "accuracy", "f1",        "sim"};
  return kFuncs;
}

struct Ref {
  std::string name;
  bool operator==(const Ref&) const = default;
};

/// Bare identifier used as a keyword value, e.g. `mode=fast`.
struct Symbol {
  std::string name;
  bool operator==(const Symbol&) const = default;
};

using Literal = std::variant<std::string, double, Symbol>;
using Positional = std::variant<Ref, std::string, double>;

struct Decl {
  DeclKind kind = DeclKind::Source;
  std::string name;
  std::string func;
  std::vector<Positional> args;
  std::map<std::string, Literal> options;
  int line = 0;

  // Structural equality; the source line is not part of the structure.
  bool operator==(const Decl& o) const {
    return kind == o.kind && name == o.name && func == o.func && args == o.args &&
           options == o.options;
  }

  std::vector<std::string> Parents() const {
    std::vector<std::string> out;
    for (const auto& a : args)
      if (const auto* r = std::get_if<Ref>(&a)) out.push_back(r->name);
    return out;
  }
};

struct WorkflowAst {
  std::string workflow_name;
  std::vector<Decl> decls;

  bool operator==(const WorkflowAst&) const = default;

  const Decl* Find(std::string_view name) const {
    for (const auto& d : decls)
      if (d.name == name) return &d;
    return nullptr;
  }
};

struct DeclDiff {
  std::set<std::string> added;
  std::set<std::string> removed;
  std::set<std::string> modified;

  bool empty() const { return added.empty() && removed.empty() && modified.empty(); }
  bool operator==(const DeclDiff&) const = default;
};

inline bool IsIdentStart(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool IsIdentChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline bool IsIdentifier(std::string_view s) {
  if (s.empty() || !IsIdentStart(s[0])) return false;
  return std::all_of(s.begin() + 1, s.end(), IsIdentChar);
}

/// Shortest decimal text that parses back to the same double.
inline std::string FormatNumber(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string QuoteString(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

inline std::string FormatLiteral(const Literal& lit) {
  if (const auto* s = std::get_if<std::string>(&lit)) return QuoteString(*s);
  if (const auto* d = std::get_if<double>(&lit)) return FormatNumber(*d);
  return std::get<Symbol>(lit).name;
}

inline std::string FormatPositional(const Positional& arg) {
  if (const auto* r = std::get_if<Ref>(&arg)) return r->name;
  if (const auto* s = std::get_if<std::string>(&arg)) return QuoteString(*s);
  return FormatNumber(std::get<double>(arg));
}

/// Canonical argument list: positionals in order, then keywords sorted by key.
inline std::string FormatArgs(const Decl& d) {
  std::string out = "(";
  bool first = true;
  auto sep = [&] {
    if (!first) out += ", ";
    first = false;
  };
  for (const auto& a : d.args) {
    sep();
    out += FormatPositional(a);
  }
  for (const auto& [key, value] : d.options) {
    sep();
    out += key + "=" + FormatLiteral(value);
  }
  out += ")";
  return out;
}

inline std::string NormalizeDecl(const Decl& d) {
  return std::string(KindName(d.kind)) + " " + d.name + " = " + d.func + FormatArgs(d);
}

inline std::string Normalize(const WorkflowAst& ast) {
  std::string out = "workflow " + ast.workflow_name + "\n";
  for (const auto& d : ast.decls) out += NormalizeDecl(d) + "\n";
  return out;
}

namespace detail {

struct Token {
  enum class Type { Ident, String, Number, Equals, LParen, RParen, Comma };
  Type type;
  std::string text;
  double number = 0;
};

inline std::vector<Token> TokenizeLine(std::string_view line, int lineno) {
  using Type = Token::Type;
  std::vector<Token> out;
  std::size_t i = 0;
  auto fail = [&](const std::string& what) {
    throw ParseError(ParseError::Kind::Syntax, lineno, what);
  };
  while (i < line.size()) {
    char c = line[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '#') {
      break;
    } else if (IsIdentStart(c)) {
      std::size_t j = i;
      while (j < line.size() && IsIdentChar(line[j])) ++j;
      out.push_back({Type::Ident, std::string(line.substr(i, j - i))});
      i = j;
    } else if (c == '"') {
      std::string text;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        char ch = line[i++];
        if (ch == '"') {
          closed = true;
          break;
        }
        if (ch == '\\') {
          if (i >= line.size()) fail("dangling escape in string");
          char e = line[i++];
          switch (e) {
            case 'n': text.push_back('\n'); break;
            case 't': text.push_back('\t'); break;
            case 'r': text.push_back('\r'); break;
            case '"': text.push_back('"'); break;
            case '\\': text.push_back('\\'); break;
            default: fail(std::string("unknown escape \\") + e);
          }
        } else {
          text.push_back(ch);
        }
      }
      if (!closed) fail("unterminated string");
      out.push_back({Type::String, std::move(text)});
    } else if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      // -?digits(.digits)?([eE][+-]?digits)?
      std::size_t j = i;
      if (line[j] == '-') ++j;
      auto digits = [&] {
        std::size_t start = j;
        while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
        return j > start;
      };
      if (!digits()) fail("malformed number");
      if (j < line.size() && line[j] == '.') {
        ++j;
        if (!digits()) fail("malformed number");
      }
      if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
        ++j;
        if (j < line.size() && (line[j] == '+' || line[j] == '-')) ++j;
        if (!digits()) fail("malformed number");
      }
      if (j < line.size() && IsIdentChar(line[j])) fail("malformed number");
      double value = 0;
      auto res = std::from_chars(line.data() + i, line.data() + j, value);
      if (res.ec != std::errc() || res.ptr != line.data() + j) fail("number out of range");
      out.push_back({Type::Number, std::string(line.substr(i, j - i)), value});
      i = j;
    } else if (c == '=') {
      out.push_back({Type::Equals, "="});
      ++i;
    } else if (c == '(') {
      out.push_back({Type::LParen, "("});
      ++i;
    } else if (c == ')') {
      out.push_back({Type::RParen, ")"});
      ++i;
    } else if (c == ',') {
      out.push_back({Type::Comma, ","});
      ++i;
    } else {
      fail(std::string("unexpected character '") + c + "'");
    }
  }
  return out;
}

}  // namespace detail

/// Parses workflow source text. Throws ParseError.
inline WorkflowAst Parse(std::string_view text) {
  using detail::Token;
  using Type = Token::Type;
  using PK = ParseError::Kind;

  WorkflowAst ast;
  bool have_header = false;
  std::set<std::string, std::less<>> declared;
  int lineno = 0;
  int last_line = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    last_line = lineno;

    std::vector<Token> toks = detail::TokenizeLine(line, lineno);
    if (toks.empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto expect = [&](std::size_t i, Type t, const char* what) -> const Token& {
      if (i >= toks.size() || toks[i].type != t)
        throw ParseError(PK::Syntax, lineno, std::string("expected ") + what);
      return toks[i];
    };

    if (!have_header) {
      if (toks[0].type != Type::Ident || toks[0].text != "workflow")
        throw ParseError(PK::Syntax, lineno, "expected 'workflow NAME' header");
      ast.workflow_name = expect(1, Type::Ident, "workflow name").text;
      if (toks.size() != 2) throw ParseError(PK::Syntax, lineno, "trailing tokens after header");
      have_header = true;
      if (end == text.size()) break;
      continue;
    }

    const Token& kind_tok = expect(0, Type::Ident, "declaration kind");
    auto kind = KindFromName(kind_tok.text);
    if (!kind) {
      if (kind_tok.text == "workflow")
        throw ParseError(PK::Syntax, lineno, "duplicate workflow header");
      throw ParseError(PK::UnknownKind, lineno, kind_tok.text);
    }
    Decl d;
    d.kind = *kind;
    d.line = lineno;
    d.name = expect(1, Type::Ident, "declaration name").text;
    expect(2, Type::Equals, "'='");
    d.func = expect(3, Type::Ident, "operator function").text;
    if (!KnownFuncs().contains(d.func)) throw ParseError(PK::UnknownFunc, lineno, d.func);
    expect(4, Type::LParen, "'('");

    std::size_t i = 5;
    if (i < toks.size() && toks[i].type == Type::RParen) {
      ++i;
    } else {
      while (true) {
        if (i >= toks.size()) throw ParseError(PK::Syntax, lineno, "unterminated argument list");
        const Token& t = toks[i];
        if (t.type == Type::Ident && i + 1 < toks.size() && toks[i + 1].type == Type::Equals) {
          if (i + 2 >= toks.size())
            throw ParseError(PK::Syntax, lineno, "missing value for '" + t.text + "'");
          const Token& v = toks[i + 2];
          Literal value;
          if (v.type == Type::String) value = v.text;
          else if (v.type == Type::Number) value = v.number;
          else if (v.type == Type::Ident) value = Symbol{v.text};
          else throw ParseError(PK::Syntax, lineno, "bad value for '" + t.text + "'");
          if (!d.options.emplace(t.text, std::move(value)).second)
            throw ParseError(PK::Syntax, lineno, "duplicate key '" + t.text + "'");
          i += 3;
        } else if (t.type == Type::Ident) {
          if (!declared.contains(t.text)) throw ParseError(PK::UnknownReference, lineno, t.text);
          d.args.emplace_back(Ref{t.text});
          ++i;
        } else if (t.type == Type::String) {
          d.args.emplace_back(t.text);
          ++i;
        } else if (t.type == Type::Number) {
          d.args.emplace_back(t.number);
          ++i;
        } else {
          throw ParseError(PK::Syntax, lineno, "unexpected '" + t.text + "' in arguments");
        }
        if (i >= toks.size()) throw ParseError(PK::Syntax, lineno, "unterminated argument list");
        if (toks[i].type == Type::RParen) {
          ++i;
          break;
        }
        expect(i, Type::Comma, "',' or ')'");
        ++i;
      }
    }
    if (i != toks.size()) throw ParseError(PK::Syntax, lineno, "trailing tokens after ')'");
    if (declared.contains(d.name)) throw ParseError(PK::DuplicateName, lineno, d.name);
    declared.insert(d.name);
    ast.decls.push_back(std::move(d));
    if (end == text.size()) break;
  }
  if (!have_header)
    throw ParseError(PK::Syntax, std::max(last_line, 1), "missing 'workflow NAME' header");
  return ast;
}

/// Name-keyed comparison of normalized declarations.
inline DeclDiff Diff(const WorkflowAst& a, const WorkflowAst& b) {
  std::map<std::string, std::string> left, right;
  for (const auto& d : a.decls) left.emplace(d.name, NormalizeDecl(d));
  for (const auto& d : b.decls) right.emplace(d.name, NormalizeDecl(d));
  DeclDiff out;
  for (const auto& [name, text] : left) {
    auto it = right.find(name);
    if (it == right.end()) out.removed.insert(name);
    else if (it->second != text) out.modified.insert(name);
  }
  for (const auto& [name, text] : right)
    if (!left.contains(name)) out.added.insert(name);
  return out;
}

}  // namespace iterflow
