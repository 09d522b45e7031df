/*
 * Copyright 2026 The Lucon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lucon/error.hpp"
#include "lucon/logic/term.hpp"

namespace lucon::route {

using logic::Term;
using StmtNo = std::int64_t;

class CycleError : public ValidationError {
 public:
  CycleError(StmtNo from, StmtNo to)
      : ValidationError("route contains a cycle through the edge " +
                        std::to_string(from) + " -> " + std::to_string(to)),
        from_(from),
        to_(to) {}
  StmtNo from() const noexcept { return from_; }
  StmtNo to() const noexcept { return to_; }

 private:
  StmtNo from_, to_;
};

class DanglingTarget : public ValidationError {
 public:
  DanglingTarget(StmtNo at, StmtNo missing)
      : ValidationError("statement " + std::to_string(at) +
                        " refers to missing statement " +
                        std::to_string(missing)),
        missing_(missing) {}
  StmtNo missing() const noexcept { return missing_; }

 private:
  StmtNo missing_;
};

class UnknownStatement : public Error {
 public:
  explicit UnknownStatement(StmtNo n)
      : Error("no statement numbered " + std::to_string(n)) {}
};

enum class StmtKind {
  from,
  to,
  bean,
  choice,
  split,
  aggregate,
  set_msg_prop,
  set_env_prop
};

inline std::string_view to_string(StmtKind k) {
  switch (k) {
    case StmtKind::from: return "from";
    case StmtKind::to: return "to";
    case StmtKind::bean: return "bean";
    case StmtKind::choice: return "choice";
    case StmtKind::split: return "split";
    case StmtKind::aggregate: return "aggregate";
    case StmtKind::set_msg_prop: return "set-msg-prop";
    case StmtKind::set_env_prop: return "set-env-prop";
  }
  return "?";
}

/// How a non-choice statement names its successors.
struct Flow {
  enum class Kind { fallthrough, explicit_targets, end };
  Kind kind = Kind::fallthrough;
  std::vector<StmtNo> targets;

  friend bool operator==(const Flow&, const Flow&) = default;
};

struct Statement {
  StmtNo number = 0;
  StmtKind kind = StmtKind::from;
  std::string name;     // display name, also the stmt/1 atom
  std::string service;  // from, to: service; bean: bean name
  std::optional<Term> expr;  // choice condition, split/aggregate/set-prop value
  std::string key;      // set-prop variable
  StmtNo then_target = 0;
  StmtNo else_target = 0;
  Flow flow;

  bool touches_service() const {
    return kind == StmtKind::to || kind == StmtKind::bean;
  }

  friend bool operator==(const Statement&, const Statement&) = default;
};

/// Name a statement gets when none is given.
inline std::string default_name(const Statement& s) {
  switch (s.kind) {
    case StmtKind::from:
    case StmtKind::to:
    case StmtKind::bean: return s.service;
    case StmtKind::choice: return "choice";
    case StmtKind::split: return "split";
    case StmtKind::aggregate: return "aggr";
    case StmtKind::set_msg_prop: return "set_msg_" + s.key;
    case StmtKind::set_env_prop: return "set_env_" + s.key;
  }
  return "stmt";
}

/// A numbered-statement program over services. Statements form an acyclic
/// graph rooted at the entry `from`.
struct Route {
  std::string name;
  std::vector<std::pair<std::string, std::string>> endpoints;  // service, URL
  std::map<StmtNo, Statement> statements;

  StmtNo entry() const {
    if (statements.empty()) throw Error("route has no statements");
    return statements.begin()->first;
  }

  const Statement& at(StmtNo n) const {
    auto it = statements.find(n);
    if (it == statements.end()) throw UnknownStatement(n);
    return it->second;
  }

  std::optional<std::string> endpoint_of(std::string_view service) const {
    for (const auto& [svc, url] : endpoints) {
      if (svc == service) return url;
    }
    return std::nullopt;
  }

  const Statement* find_by_name(std::string_view name) const {
    for (const auto& [n, s] : statements) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  friend bool operator==(const Route&, const Route&) = default;
};

/// Successor statement numbers: [then, else] for a choice, the branch heads
/// for a split, the explicit targets, or the next statement by number.
inline std::vector<StmtNo> successors(const Route& r, StmtNo n) {
  const Statement& s = r.at(n);
  if (s.kind == StmtKind::choice) {
    if (s.then_target == s.else_target) return {s.then_target};
    return {s.then_target, s.else_target};
  }
  switch (s.flow.kind) {
    case Flow::Kind::end: return {};
    case Flow::Kind::explicit_targets: return s.flow.targets;
    case Flow::Kind::fallthrough: {
      auto it = r.statements.upper_bound(n);
      if (it == r.statements.end()) return {};
      return {it->first};
    }
  }
  return {};
}

namespace detail {

// One open split on the path: split statement and branch index.
using SplitStack = std::vector<std::pair<StmtNo, std::size_t>>;

inline std::string describe(const SplitStack& st) {
  if (st.empty()) return "outside any split";
  return "in branch " + std::to_string(st.back().second + 1) + " of split " +
         std::to_string(st.back().first);
}

}  // namespace detail

/// Checks the structural invariants. Throws DanglingTarget, CycleError or
/// ValidationError.
inline void validate(const Route& r) {
  if (r.statements.empty()) throw ValidationError("route has no statements");
  {
    std::set<std::string> svc;
    for (const auto& [s, url] : r.endpoints) {
      if (!svc.insert(s).second) {
        throw ValidationError("service '" + s + "' is bound twice");
      }
    }
  }
  const StmtNo entry = r.entry();
  std::set<std::string> names;
  for (const auto& [n, s] : r.statements) {
    if (s.number != n) throw ValidationError("statement number mismatch");
    if (s.kind == StmtKind::from && n != entry) {
      throw ValidationError("statement " + std::to_string(n) +
                            ": 'from' may only start a route");
    }
    if (n == entry && s.kind != StmtKind::from) {
      throw ValidationError("route must start with a 'from' statement");
    }
    if (!names.insert(s.name).second) {
      throw ValidationError("statement name '" + s.name + "' is used twice");
    }
    if (s.kind != StmtKind::split && s.flow.targets.size() > 1) {
      throw ValidationError("statement " + std::to_string(n) +
                            ": only split may have several successors");
    }
    if (s.kind == StmtKind::split && s.flow.kind == Flow::Kind::end) {
      throw ValidationError("statement " + std::to_string(n) +
                            ": split needs at least one branch");
    }
    if (s.kind == StmtKind::choice || s.kind == StmtKind::split ||
        s.kind == StmtKind::aggregate || s.kind == StmtKind::set_msg_prop ||
        s.kind == StmtKind::set_env_prop) {
      if (!s.expr) {
        throw ValidationError("statement " + std::to_string(n) +
                              " needs an expression");
      }
    }
    std::set<StmtNo> seen;
    for (StmtNo t : successors(r, n)) {
      if (r.statements.count(t) == 0) throw DanglingTarget(n, t);
      if (!seen.insert(t).second) {
        throw ValidationError("statement " + std::to_string(n) +
                              " lists successor " + std::to_string(t) +
                              " twice");
      }
    }
  }

  // Cycles: iterative DFS with colours.
  std::map<StmtNo, int> colour;  // 0 white, 1 grey, 2 black
  for (const auto& [root, unused] : r.statements) {
    if (colour[root] != 0) continue;
    std::vector<std::pair<StmtNo, std::size_t>> stack{{root, 0}};
    colour[root] = 1;
    while (!stack.empty()) {
      auto& [n, i] = stack.back();
      auto succ = successors(r, n);
      if (i < succ.size()) {
        StmtNo t = succ[i++];
        if (colour[t] == 1) throw CycleError(n, t);
        if (colour[t] == 0) {
          colour[t] = 1;
          stack.push_back({t, 0});
        }
      } else {
        colour[n] = 2;
        stack.pop_back();
      }
    }
  }

  // Split structure: every statement is reached with one split context,
  // branches stay disjoint until their aggregate, and every path closes
  // every split.
  std::map<StmtNo, detail::SplitStack> context;
  std::map<StmtNo, StmtNo> join_of;  // split -> aggregate
  std::vector<std::pair<StmtNo, detail::SplitStack>> work{{entry, {}}};
  while (!work.empty()) {
    auto [n, st] = std::move(work.back());
    work.pop_back();
    const Statement& s = r.at(n);
    if (s.kind == StmtKind::aggregate) {
      if (st.empty()) {
        throw ValidationError("aggregate " + std::to_string(n) +
                              " is not preceded by a split");
      }
      StmtNo split = st.back().first;
      auto [it, fresh] = join_of.emplace(split, n);
      if (!fresh && it->second != n) {
        throw ValidationError("branches of split " + std::to_string(split) +
                              " end at different aggregates " +
                              std::to_string(it->second) + " and " +
                              std::to_string(n));
      }
      st.pop_back();
    }
    auto [it, fresh] = context.emplace(n, st);
    if (!fresh) {
      if (it->second != st) {
        throw ValidationError("statement " + std::to_string(n) +
                              " is reached " + detail::describe(it->second) +
                              " and " + detail::describe(st));
      }
      continue;
    }
    auto succ = successors(r, n);
    if (succ.empty() && !st.empty()) {
      throw ValidationError("split " + std::to_string(st.back().first) +
                            " has no aggregate on the path ending at " +
                            std::to_string(n));
    }
    for (std::size_t i = succ.size(); i-- > 0;) {
      detail::SplitStack next = st;
      if (s.kind == StmtKind::split) next.push_back({n, i});
      work.push_back({succ[i], std::move(next)});
    }
  }
  for (const auto& [n, s] : r.statements) {
    if (context.count(n) == 0) {
      throw ValidationError("statement " + std::to_string(n) +
                            " is unreachable");
    }
    if (s.kind == StmtKind::split && join_of.count(n) == 0) {
      throw ValidationError("split " + std::to_string(n) +
                            " has no matching aggregate");
    }
  }
}

/// The aggregate joining each split.
inline std::map<StmtNo, StmtNo> split_joins(const Route& r) {
  std::map<StmtNo, StmtNo> out;
  // Walk each branch head until the first aggregate at the same depth.
  for (const auto& [n, s] : r.statements) {
    if (s.kind != StmtKind::split) continue;
    StmtNo cur = successors(r, n).front();
    int depth = 0;
    for (;;) {
      const Statement& c = r.at(cur);
      if (c.kind == StmtKind::split) ++depth;
      if (c.kind == StmtKind::aggregate) {
        if (depth == 0) break;
        --depth;
      }
      cur = successors(r, cur).front();
    }
    out.emplace(n, cur);
  }
  return out;
}

}  // namespace lucon::route
