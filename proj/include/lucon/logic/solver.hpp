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

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lucon/error.hpp"
#include "lucon/logic/clause.hpp"
#include "lucon/logic/knowledge_base.hpp"
#include "lucon/logic/reader.hpp"
#include "lucon/logic/unify.hpp"

namespace lucon::logic {

/// Resolution went deeper than `SolveLimits::depth`.
class DepthExceeded : public Error {
 public:
  using Error::Error;
};

/// A negated goal was reached while still containing unbound variables.
class Floundered : public Error {
 public:
  using Error::Error;
};

struct SolveLimits {
  // Maximum length of a derivation branch, counted in resolved goals.
  std::size_t depth = 10000;
};

/// Lazy SLD resolution: leftmost goal selection, clauses tried in source
/// order, chronological backtracking. Negation is negation-as-failure over
/// ground goals only. Unknown predicates fail. There is no cut and no
/// occurs check.
///
/// The knowledge base must outlive the stream. Each stream owns its
/// bindings, so concurrent streams over one knowledge base are safe as long
/// as the registered builtins are.
class SolutionStream {
 public:
  SolutionStream(const KnowledgeBase& kb, std::vector<Literal> query,
                 SolveLimits limits = {})
      : kb_(&kb), limits_(limits) {
    if (limits_.depth < 1) throw Error("depth limit must be at least 1");
    // Every variable becomes one node so bindings can be keyed by identity.
    std::unordered_map<std::string, Term> renamed;
    std::vector<Literal> goals;
    goals.reserve(query.size());
    for (auto& lit : query) {
      goals.push_back(
          Literal{rename_query(lit.goal, renamed), lit.negated});
    }
    for (auto& [name, var] : renamed) {
      if (name.empty() || name.front() != '_') answer_vars_.push_back(var);
    }
    std::sort(answer_vars_.begin(), answer_vars_.end());
    for (std::size_t i = goals.size(); i-- > 0;) {
      goals_ = std::make_shared<const GoalNode>(
          GoalNode{std::move(goals[i]), 1, goals_});
    }
  }

  SolutionStream(const SolutionStream&) = delete;
  SolutionStream& operator=(const SolutionStream&) = delete;
  SolutionStream(SolutionStream&&) noexcept = default;
  SolutionStream& operator=(SolutionStream&&) noexcept = default;

  /// Next answer, or nullopt once the search space is exhausted. Answers
  /// bind the query's named variables (names starting with '_' are hidden).
  std::optional<Substitution> next() {
    if (done_) return std::nullopt;
    if (started_) {
      if (!backtrack()) return finish();
    }
    started_ = true;
    return run();
  }

  /// Number of resolution steps performed so far.
  std::size_t steps() const noexcept { return steps_; }

  class iterator {
   public:
    using value_type = Substitution;
    using difference_type = std::ptrdiff_t;
    iterator() = default;
    explicit iterator(SolutionStream* s) : s_(s) { ++*this; }
    const Substitution& operator*() const { return *current_; }
    const Substitution* operator->() const { return &*current_; }
    iterator& operator++() {
      current_ = s_->next();
      if (!current_) s_ = nullptr;
      return *this;
    }
    friend bool operator==(const iterator& a, const iterator& b) {
      return a.s_ == b.s_;
    }

   private:
    SolutionStream* s_ = nullptr;
    std::optional<Substitution> current_;
  };

  iterator begin() { return iterator(this); }
  iterator end() { return iterator(); }

 private:
  struct GoalNode {
    Literal literal;
    std::size_t depth;
    std::shared_ptr<const GoalNode> next;
  };
  using GoalList = std::shared_ptr<const GoalNode>;

  struct Binding {
    Term var;
    Term value;
  };

  struct Store {
    std::unordered_map<const void*, Binding> map;
    std::vector<const void*> trail;

    const Term* lookup(const Term& var) const {
      auto it = map.find(var.identity());
      return it == map.end() ? nullptr : &it->second.value;
    }
    void bind(const Term& var, Term value) {
      map.insert_or_assign(var.identity(), Binding{var, std::move(value)});
      trail.push_back(var.identity());
    }
    void undo(std::size_t mark) {
      while (trail.size() > mark) {
        map.erase(trail.back());
        trail.pop_back();
      }
    }
  };

  struct ChoicePoint {
    ChoicePoint(GoalList g, Term c, std::size_t mark)
        : goal(std::move(g)), call(std::move(c)), trail_mark(mark) {}

    GoalList goal;  // goal being resolved; goal->next is the continuation
    Term call;
    std::size_t trail_mark = 0;
    bool builtin = false;
    // Clause alternatives.
    std::optional<std::string> index_key;
    std::size_t layer = 0;
    ClauseCursor cursor;
    // Builtin alternatives.
    BuiltinAnswers answers;
    std::size_t answer = 0;
  };

  static Term rename_query(const Term& t,
                           std::unordered_map<std::string, Term>& vars) {
    if (t.is_var()) {
      std::string key = t.name() + "#" + std::to_string(t.scope());
      auto it = vars.find(key);
      if (it != vars.end()) return it->second;
      Term fresh = Term::var(t.name(), t.scope());
      vars.emplace(std::move(key), fresh);
      return fresh;
    }
    if (!t.is_compound() || t.is_ground()) return t;
    std::vector<Term> args;
    args.reserve(t.arity());
    for (const auto& a : t.args()) args.push_back(rename_query(a, vars));
    return Term::with_args(t, std::move(args));
  }

  using Renaming = std::vector<std::pair<Term, Term>>;

  static Term rename(const Term& t, std::uint64_t scope, Renaming& vars) {
    if (t.is_ground()) return t;
    if (t.is_var()) {
      for (auto& [original, fresh] : vars) {
        if (original == t) return fresh;
      }
      Term fresh = Term::rescoped(t, scope);
      vars.emplace_back(t, fresh);
      return fresh;
    }
    std::vector<Term> args;
    args.reserve(t.arity());
    for (const auto& a : t.args()) args.push_back(rename(a, scope, vars));
    return Term::with_args(t, std::move(args));
  }

  std::optional<Substitution> finish() {
    done_ = true;
    choices_.clear();
    goals_.reset();
    return std::nullopt;
  }

  Substitution make_answer() const {
    Substitution out;
    for (const auto& v : answer_vars_) out.bind(v, resolve(v, store_));
    return out;
  }

  std::optional<Substitution> run() {
    for (;;) {
      if (!goals_) return make_answer();
      GoalList node = goals_;
      if (node->depth > limits_.depth) {
        throw DepthExceeded("resolution depth exceeded " +
                            std::to_string(limits_.depth));
      }
      ++steps_;
      const Literal& lit = node->literal;
      Term goal = deref(lit.goal, store_);
      if (goal.is_var()) throw Error("unbound goal " + goal.to_string());
      if (!goal.is_callable()) {
        throw Error("goal is not callable: " + goal.to_string());
      }

      if (lit.negated) {
        Term call = resolve(goal, store_);
        if (!call.is_ground()) {
          throw Floundered("negated goal is not ground: \\+ " +
                           call.to_string());
        }
        SolveLimits sub{limits_.depth - node->depth + 1};
        SolutionStream inner(*kb_, {Literal::positive(call)}, sub);
        bool holds = inner.next().has_value();
        steps_ += inner.steps();
        if (holds) {
          if (!backtrack()) return finish();
        } else {
          goals_ = node->next;
        }
        continue;
      }

      if (const BuiltinFn* fn = kb_->find_builtin(goal.name(), goal.arity())) {
        Term call = resolve(goal, store_);
        ChoicePoint cp(node, call, store_.trail.size());
        cp.builtin = true;
        cp.answers = (*fn)(call.args());
        choices_.push_back(std::move(cp));
      } else {
        ChoicePoint cp(node, goal, store_.trail.size());
        if (goal.is_compound()) {
          cp.index_key = arg_key(deref(goal.args()[0], store_));
        }
        cp.layer = 0;
        cp.cursor = cursor_for(goal, 0, cp.index_key);
        choices_.push_back(std::move(cp));
      }
      if (!resume_top() && !backtrack()) return finish();
    }
  }

  ClauseCursor cursor_for(const Term& call, std::size_t layer,
                          const std::optional<std::string>& key) const {
    const KnowledgeBase* kb = kb_->chain()[layer];
    return ClauseCursor(kb->own_predicate(key_of(call)), key);
  }

  // Tries the remaining alternatives of the top choice point. Pops it and
  // returns false when none succeeds.
  bool resume_top() {
    ChoicePoint& cp = choices_.back();
    store_.undo(cp.trail_mark);
    const GoalNode& node = *cp.goal;
    if (cp.builtin) {
      while (cp.answer < cp.answers.size()) {
        const auto& tuple = cp.answers[cp.answer++];
        bool ok = tuple.size() == cp.call.arity();
        for (std::size_t i = 0; ok && i < tuple.size(); ++i) {
          ok = unify_into(cp.call.args()[i], tuple[i], store_);
        }
        if (ok) {
          goals_ = node.next;
          return true;
        }
        store_.undo(cp.trail_mark);
      }
      choices_.pop_back();
      return false;
    }

    const auto layers = kb_->chain().size();
    for (;;) {
      const Clause* clause = cp.cursor.next();
      if (clause == nullptr) {
        if (++cp.layer >= layers) break;
        cp.cursor = cursor_for(cp.call, cp.layer, cp.index_key);
        continue;
      }
      // Ground clauses need no renaming.
      const bool ground = clause->is_ground();
      Renaming vars;
      vars.reserve(4);
      std::uint64_t scope = ground ? 0 : ++next_scope_;
      Term head = ground ? clause->head() : rename(clause->head(), scope, vars);
      if (!unify_into(cp.call, head, store_)) {
        store_.undo(cp.trail_mark);
        continue;
      }
      GoalList rest = node.next;
      const auto& body = clause->body();
      for (std::size_t i = body.size(); i-- > 0;) {
        Term g = ground ? body[i].goal : rename(body[i].goal, scope, vars);
        rest = std::make_shared<const GoalNode>(GoalNode{
            Literal{std::move(g), body[i].negated}, node.depth + 1,
            std::move(rest)});
      }
      goals_ = std::move(rest);
      return true;
    }
    choices_.pop_back();
    return false;
  }

  bool backtrack() {
    while (!choices_.empty()) {
      if (resume_top()) return true;
    }
    return false;
  }

  const KnowledgeBase* kb_;
  SolveLimits limits_;
  GoalList goals_;
  Store store_;
  std::vector<ChoicePoint> choices_;
  std::vector<Term> answer_vars_;
  std::uint64_t next_scope_ = 0;
  std::size_t steps_ = 0;
  bool started_ = false;
  bool done_ = false;
};

inline SolutionStream solve(const KnowledgeBase& kb, std::vector<Literal> query,
                            SolveLimits limits = {}) {
  return SolutionStream(kb, std::move(query), limits);
}

inline SolutionStream solve(const KnowledgeBase& kb, std::string_view query,
                            SolveLimits limits = {}) {
  return SolutionStream(kb, parse_query(query), limits);
}

/// Collects up to `max_answers` answers.
inline std::vector<Substitution> solve_all(
    const KnowledgeBase& kb, std::vector<Literal> query, SolveLimits limits = {},
    std::size_t max_answers = static_cast<std::size_t>(-1)) {
  SolutionStream stream(kb, std::move(query), limits);
  std::vector<Substitution> out;
  while (out.size() < max_answers) {
    auto s = stream.next();
    if (!s) break;
    out.push_back(std::move(*s));
  }
  return out;
}

inline std::vector<Substitution> solve_all(const KnowledgeBase& kb,
                                           std::string_view query,
                                           SolveLimits limits = {}) {
  return solve_all(kb, parse_query(query), limits);
}

inline bool provable(const KnowledgeBase& kb, std::vector<Literal> query,
                     SolveLimits limits = {}) {
  SolutionStream stream(kb, std::move(query), limits);
  return stream.next().has_value();
}

}  // namespace lucon::logic
