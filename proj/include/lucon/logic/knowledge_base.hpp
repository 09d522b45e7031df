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
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lucon/error.hpp"
#include "lucon/logic/clause.hpp"
#include "lucon/logic/reader.hpp"
#include "lucon/logic/term.hpp"

namespace lucon::logic {

/// A predicate name is already taken by a builtin or by user clauses.
class NameCollision : public Error {
 public:
  using Error::Error;
};

/// Each answer is a full argument tuple that the solver unifies with the
/// call's arguments. An empty result means the call fails.
using BuiltinAnswers = std::vector<std::vector<Term>>;

/// Host function behind a builtin predicate. Arguments arrive with the
/// current bindings applied; unbound arguments are variables.
using BuiltinFn = std::function<BuiltinAnswers(std::span<const Term> args)>;

struct PredicateKey {
  std::string functor;
  std::size_t arity = 0;

  friend bool operator==(const PredicateKey&, const PredicateKey&) = default;
  std::string to_string() const {
    return functor + "/" + std::to_string(arity);
  }
};

struct PredicateKeyHash {
  std::size_t operator()(const PredicateKey& k) const noexcept {
    return std::hash<std::string>{}(k.functor) * 31 + k.arity;
  }
};

inline PredicateKey key_of(const Term& callable) {
  return PredicateKey{callable.name(), callable.arity()};
}

/// Index key of a clause or goal argument; nullopt for variables.
inline std::optional<std::string> arg_key(const Term& a) {
  switch (a.kind()) {
    case TermKind::var: return std::nullopt;
    case TermKind::atom: return "a" + a.name();
    case TermKind::string: return "s" + a.name();
    case TermKind::integer: return "i" + std::to_string(a.int_value());
    case TermKind::compound:
      return "c" + a.name() + "/" + std::to_string(a.arity());
  }
  return std::nullopt;
}

/// First-argument index key; nullopt for unbound first arguments.
inline std::optional<std::string> first_arg_key(const Term& goal) {
  if (!goal.is_compound()) return std::nullopt;
  return arg_key(goal.args()[0]);
}

/// Clauses of one predicate with a first-argument index.
struct Predicate {
  std::vector<Clause> clauses;
  std::vector<std::uint32_t> unkeyed;  // first argument is a variable
  std::unordered_map<std::string, std::vector<std::uint32_t>> keyed;
};

/// Iterates candidate clauses of a predicate in source order, merging the
/// first-argument bucket with the clauses whose first argument is unbound.
class ClauseCursor {
 public:
  ClauseCursor() = default;
  ClauseCursor(const Predicate* pred, const std::optional<std::string>& key)
      : pred_(pred) {
    if (pred_ == nullptr) return;
    if (!key) {
      all_ = true;
      return;
    }
    auto it = pred_->keyed.find(*key);
    if (it != pred_->keyed.end()) keyed_ = it->second;
    unkeyed_ = pred_->unkeyed;
  }

  const Clause* next() {
    if (pred_ == nullptr) return nullptr;
    if (all_) {
      if (i_ >= pred_->clauses.size()) return nullptr;
      return &pred_->clauses[i_++];
    }
    bool have_a = i_ < keyed_.size();
    bool have_b = j_ < unkeyed_.size();
    if (!have_a && !have_b) return nullptr;
    if (have_a && (!have_b || keyed_[i_] < unkeyed_[j_])) {
      return &pred_->clauses[keyed_[i_++]];
    }
    return &pred_->clauses[unkeyed_[j_++]];
  }

 private:
  const Predicate* pred_ = nullptr;
  std::span<const std::uint32_t> keyed_;
  std::span<const std::uint32_t> unkeyed_;
  std::size_t i_ = 0;
  std::size_t j_ = 0;
  bool all_ = false;
};

/// Horn-clause store with builtin predicates.
///
/// A knowledge base may extend an immutable parent: lookups see the parent's
/// clauses first, then its own. Extending is O(1), which lets callers layer
/// per-query facts or builtins over a shared compiled program without
/// mutating it. Share finished knowledge bases as
/// `std::shared_ptr<const KnowledgeBase>`.
class KnowledgeBase {
 public:
  KnowledgeBase() { chain_.push_back(this); }

  explicit KnowledgeBase(std::shared_ptr<const KnowledgeBase> parent)
      : parent_(std::move(parent)) {
    if (parent_) chain_ = parent_->chain_;
    chain_.push_back(this);
  }

  KnowledgeBase(const KnowledgeBase&) = delete;
  KnowledgeBase& operator=(const KnowledgeBase&) = delete;

  void add_clause(Clause clause) {
    PredicateKey key = key_of(clause.head());
    if (find_builtin(key.functor, key.arity) != nullptr) {
      throw NameCollision("clause for " + key.to_string() +
                          " collides with a builtin of the same name");
    }
    Predicate& pred = predicates_[key];
    auto index = static_cast<std::uint32_t>(pred.clauses.size());
    if (auto k = first_arg_key(clause.head())) {
      pred.keyed[*k].push_back(index);
    } else {
      pred.unkeyed.push_back(index);
    }
    pred.clauses.push_back(std::move(clause));
    order_.push_back({key, index});
  }

  void add_fact(Term head) { add_clause(Clause(std::move(head))); }

  /// Parses and adds every clause of `program`.
  void load(std::string_view program) {
    for (auto& c : parse_program(program)) add_clause(std::move(c));
  }

  void register_builtin(std::string name, std::size_t arity, BuiltinFn fn) {
    PredicateKey key{std::move(name), arity};
    for (const KnowledgeBase* kb : chain_) {
      if (kb->predicates_.count(key) != 0) {
        throw NameCollision("builtin " + key.to_string() +
                            " collides with user clauses");
      }
      if (kb->builtins_.count(key) != 0) {
        throw NameCollision("builtin " + key.to_string() +
                            " is already registered");
      }
    }
    builtins_.emplace(std::move(key), std::move(fn));
  }

  const BuiltinFn* find_builtin(const std::string& name,
                                std::size_t arity) const {
    PredicateKey key{name, arity};
    for (const KnowledgeBase* kb : chain_) {
      auto it = kb->builtins_.find(key);
      if (it != kb->builtins_.end()) return &it->second;
    }
    return nullptr;
  }

  /// This layer's clauses for `key`, or null.
  const Predicate* own_predicate(const PredicateKey& key) const {
    auto it = predicates_.find(key);
    return it == predicates_.end() ? nullptr : &it->second;
  }

  /// Layers from the root ancestor to this knowledge base.
  std::span<const KnowledgeBase* const> chain() const { return chain_; }

  bool defines(const std::string& functor, std::size_t arity) const {
    PredicateKey key{functor, arity};
    for (const KnowledgeBase* kb : chain_) {
      if (kb->predicates_.count(key) != 0) return true;
    }
    return false;
  }

  std::size_t clause_count() const {
    std::size_t n = 0;
    for (const KnowledgeBase* kb : chain_) n += kb->order_.size();
    return n;
  }

  /// All clauses of every layer in insertion order.
  std::vector<Clause> clauses() const {
    std::vector<Clause> out;
    for (const KnowledgeBase* kb : chain_) {
      for (const auto& [key, index] : kb->order_) {
        out.push_back(kb->predicates_.at(key).clauses[index]);
      }
    }
    return out;
  }

  /// Registered builtin keys of every layer (unordered).
  std::vector<PredicateKey> builtin_keys() const {
    std::vector<PredicateKey> out;
    for (const KnowledgeBase* kb : chain_) {
      for (const auto& [key, fn] : kb->builtins_) out.push_back(key);
    }
    return out;
  }

 private:
  std::shared_ptr<const KnowledgeBase> parent_;
  std::vector<const KnowledgeBase*> chain_;
  std::unordered_map<PredicateKey, Predicate, PredicateKeyHash> predicates_;
  std::unordered_map<PredicateKey, BuiltinFn, PredicateKeyHash> builtins_;
  std::vector<std::pair<PredicateKey, std::uint32_t>> order_;
};

/// Renders clauses in the textual clause format, one per line.
inline std::string format_clauses(std::span<const Clause> clauses) {
  std::string out;
  for (const auto& c : clauses) {
    out += c.to_string();
    out.push_back('\n');
  }
  return out;
}

}  // namespace lucon::logic
