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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lucon/error.hpp"
#include "lucon/logic/term.hpp"

namespace lucon::logic {

struct VarKey {
  std::string name;
  std::uint64_t scope = 0;

  friend auto operator<=>(const VarKey&, const VarKey&) = default;
};

/// A binding store concept used by `unify_into`:
///   const Term* lookup(const Term& var) const;
///   void bind(const Term& var, Term value);

/// Follows variable bindings until reaching a non-variable or a free variable.
template <typename Store>
Term deref(Term t, const Store& store) {
  while (t.is_var()) {
    const Term* bound = store.lookup(t);
    if (bound == nullptr) break;
    t = *bound;
  }
  return t;
}

/// Unifies `a` and `b`, extending `store`. No occurs check: binding X to a
/// term containing X succeeds and yields a cyclic substitution.
///
/// On failure the store may hold partial bindings; callers that need to
/// roll back must do so themselves (the solver uses a trail).
template <typename Store>
bool unify_into(const Term& a, const Term& b, Store& store) {
  std::vector<std::pair<Term, Term>> pending;
  pending.emplace_back(a, b);
  while (!pending.empty()) {
    auto [x0, y0] = std::move(pending.back());
    pending.pop_back();
    Term x = deref(std::move(x0), store);
    Term y = deref(std::move(y0), store);
    if (x.identity() == y.identity()) continue;
    if (x.is_var()) {
      if (y.is_var() && x == y) continue;
      store.bind(x, y);
      continue;
    }
    if (y.is_var()) {
      store.bind(y, x);
      continue;
    }
    if (x.kind() != y.kind()) return false;
    switch (x.kind()) {
      case TermKind::integer:
        if (x.int_value() != y.int_value()) return false;
        break;
      case TermKind::atom:
      case TermKind::string:
        if (x.name() != y.name()) return false;
        break;
      case TermKind::compound:
        if (x.arity() != y.arity() || x.name() != y.name()) return false;
        for (std::size_t i = x.arity(); i-- > 0;) {
          pending.emplace_back(x.args()[i], y.args()[i]);
        }
        break;
      case TermKind::var:
        break;
    }
  }
  return true;
}

/// Fully applies the bindings in `store` to `t`.
template <typename Store>
Term resolve(const Term& t, const Store& store, std::size_t depth = 0) {
  if (depth > 100000) throw Error("cyclic term while resolving bindings");
  Term d = deref(t, store);
  if (!d.is_compound() || d.is_ground()) return d;
  std::vector<Term> args;
  args.reserve(d.arity());
  bool changed = false;
  for (const auto& a : d.args()) {
    args.push_back(resolve(a, store, depth + 1));
    changed = changed || args.back().identity() != a.identity();
  }
  if (!changed) return d;
  return Term::with_args(d, std::move(args));
}

/// A substitution keyed by variable name and scope.
class Substitution {
 public:
  const Term* lookup(const Term& var) const {
    auto it = bindings_.find(VarKey{var.name(), var.scope()});
    return it == bindings_.end() ? nullptr : &it->second;
  }

  void bind(const Term& var, Term value) {
    bindings_.insert_or_assign(VarKey{var.name(), var.scope()},
                               std::move(value));
  }

  /// Binding of a source-level (scope 0) variable, if any.
  std::optional<Term> get(std::string_view name) const {
    auto it = bindings_.find(VarKey{std::string(name), 0});
    if (it == bindings_.end()) return std::nullopt;
    return it->second;
  }

  /// Like `get`, but throws if the variable is unbound.
  Term at(std::string_view name) const {
    auto v = get(name);
    if (!v) throw Error("variable " + std::string(name) + " is unbound");
    return *v;
  }

  Term apply(const Term& t) const { return resolve(t, *this); }

  std::size_t size() const noexcept { return bindings_.size(); }
  bool empty() const noexcept { return bindings_.empty(); }
  auto begin() const { return bindings_.begin(); }
  auto end() const { return bindings_.end(); }

  std::string to_string() const {
    std::string out = "{";
    bool first = true;
    for (const auto& [key, value] : bindings_) {
      if (!first) out += ", ";
      first = false;
      out += key.name;
      if (key.scope != 0) out += "_" + std::to_string(key.scope);
      out += " -> ";
      value.write(out);
    }
    return out + "}";
  }

  friend bool operator==(const Substitution&, const Substitution&) = default;

 private:
  std::map<VarKey, Term> bindings_;
};

/// Most general unifier of `a` and `b` extending `bindings`, or nullopt.
inline std::optional<Substitution> unify(const Term& a, const Term& b,
                                         Substitution bindings = {}) {
  if (!unify_into(a, b, bindings)) return std::nullopt;
  return bindings;
}

/// True when `a` and `b` unify under an empty substitution.
inline bool unifiable(const Term& a, const Term& b) {
  Substitution s;
  return unify_into(a, b, s);
}

}  // namespace lucon::logic
