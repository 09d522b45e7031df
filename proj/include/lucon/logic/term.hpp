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
#include <cctype>
#include <compare>
#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lucon::logic {

enum class TermKind : std::uint8_t { var, integer, atom, string, compound };

class Term;

namespace detail {

struct TermNode {
  TermKind kind;
  // Atom name, variable name, functor, or string contents.
  std::string text;
  // Integer value, or the renaming scope of a variable.
  std::int64_t number = 0;
  std::vector<Term> args;
  bool ground = true;
  std::size_t hash = 0;
  std::size_t name_hash = 0;  // hash of `text`
};

inline std::size_t hash_mix(std::size_t seed, std::size_t value) {
  return seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

inline bool has_whitespace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

inline void check_name(std::string_view what, std::string_view name) {
  if (name.empty()) {
    throw std::invalid_argument(std::string(what) + " name must not be empty");
  }
  if (has_whitespace(name)) {
    throw std::invalid_argument(std::string(what) + " name '" +
                                std::string(name) +
                                "' must not contain whitespace");
  }
}

}  // namespace detail

/// Immutable first-order term: atom, variable, integer, string or compound.
///
/// Terms share structure and are cheap to copy. Equality is structural;
/// ordering follows the standard order of terms (Var < Int < Atom < Str <
/// Compound), which keeps label sets and memo keys canonical.
class Term {
 public:
  static Term atom(std::string name) {
    detail::check_name("atom", name);
    auto node = std::make_shared<detail::TermNode>();
    node->kind = TermKind::atom;
    node->text = std::move(name);
    node->name_hash = std::hash<std::string>{}(node->text);
    node->hash = detail::hash_mix(node->name_hash, 1);
    return Term(std::move(node));
  }

  /// Variables with equal name and scope are the same variable. Scope 0 is
  /// used for source-level terms; the solver renames clauses into fresh
  /// scopes.
  static Term var(std::string name, std::uint64_t scope = 0) {
    detail::check_name("variable", name);
    auto node = std::make_shared<detail::TermNode>();
    node->kind = TermKind::var;
    node->text = std::move(name);
    node->number = static_cast<std::int64_t>(scope);
    node->ground = false;
    node->name_hash = std::hash<std::string>{}(node->text);
    node->hash = detail::hash_mix(detail::hash_mix(node->name_hash, 2), scope);
    return Term(std::move(node));
  }

  /// The variable `v` moved to another scope.
  static Term rescoped(const Term& v, std::uint64_t scope) {
    auto node = std::make_shared<detail::TermNode>();
    node->kind = TermKind::var;
    node->text = v.node_->text;
    node->number = static_cast<std::int64_t>(scope);
    node->ground = false;
    node->name_hash = v.node_->name_hash;
    node->hash = detail::hash_mix(detail::hash_mix(node->name_hash, 2), scope);
    return Term(std::move(node));
  }

  static Term integer(std::int64_t value) {
    auto node = std::make_shared<detail::TermNode>();
    node->kind = TermKind::integer;
    node->number = value;
    node->hash = detail::hash_mix(std::hash<std::int64_t>{}(value), 3);
    return Term(std::move(node));
  }

  static Term string(std::string value) {
    auto node = std::make_shared<detail::TermNode>();
    node->kind = TermKind::string;
    node->text = std::move(value);
    node->hash = detail::hash_mix(std::hash<std::string>{}(node->text), 4);
    return Term(std::move(node));
  }

  static Term compound(std::string functor, std::vector<Term> args) {
    detail::check_name("functor", functor);
    if (args.empty()) {
      throw std::invalid_argument("compound term '" + functor +
                                  "' needs at least one argument");
    }
    auto node = std::make_shared<detail::TermNode>();
    node->kind = TermKind::compound;
    node->text = std::move(functor);
    node->name_hash = std::hash<std::string>{}(node->text);
    return finish_compound(std::move(node), std::move(args));
  }

  /// A compound with the functor of `like` and new arguments of equal arity.
  static Term with_args(const Term& like, std::vector<Term> args) {
    auto node = std::make_shared<detail::TermNode>();
    node->kind = TermKind::compound;
    node->text = like.node_->text;
    node->name_hash = like.node_->name_hash;
    return finish_compound(std::move(node), std::move(args));
  }

  static Term boolean(bool value) { return atom(value ? "true" : "false"); }

  TermKind kind() const noexcept { return node_->kind; }
  bool is_var() const noexcept { return kind() == TermKind::var; }
  bool is_atom() const noexcept { return kind() == TermKind::atom; }
  bool is_integer() const noexcept { return kind() == TermKind::integer; }
  bool is_string() const noexcept { return kind() == TermKind::string; }
  bool is_compound() const noexcept { return kind() == TermKind::compound; }
  /// Atoms and compounds can be called as goals.
  bool is_callable() const noexcept { return is_atom() || is_compound(); }

  /// Atom name, variable name, or functor.
  const std::string& name() const noexcept { return node_->text; }
  const std::string& str_value() const noexcept { return node_->text; }
  std::int64_t int_value() const noexcept { return node_->number; }
  std::uint64_t scope() const noexcept {
    return static_cast<std::uint64_t>(node_->number);
  }
  std::span<const Term> args() const noexcept { return node_->args; }
  const Term& arg(std::size_t i) const { return node_->args.at(i); }
  std::size_t arity() const noexcept { return node_->args.size(); }
  bool is_ground() const noexcept { return node_->ground; }
  std::size_t hash() const noexcept { return node_->hash; }

  /// Identity of the underlying node; stable while the term is alive.
  const void* identity() const noexcept { return node_.get(); }

  std::string to_string() const {
    std::string out;
    write(out);
    return out;
  }

  void write(std::string& out) const;

  friend bool operator==(const Term& a, const Term& b) {
    if (a.node_ == b.node_) return true;
    if (a.hash() != b.hash()) return false;
    return compare(a, b) == 0;
  }

  friend std::strong_ordering operator<=>(const Term& a, const Term& b) {
    int c = compare(a, b);
    if (c < 0) return std::strong_ordering::less;
    if (c > 0) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  friend std::ostream& operator<<(std::ostream& os, const Term& t) {
    return os << t.to_string();
  }

  static int compare(const Term& a, const Term& b);

 private:
  static Term finish_compound(std::shared_ptr<detail::TermNode> node,
                              std::vector<Term> args) {
    std::size_t h = detail::hash_mix(node->name_hash, 5);
    bool ground = true;
    for (const auto& a : args) {
      h = detail::hash_mix(h, a.hash());
      ground = ground && a.is_ground();
    }
    node->args = std::move(args);
    node->ground = ground;
    node->hash = h;
    return Term(std::move(node));
  }

  explicit Term(std::shared_ptr<const detail::TermNode> node)
      : node_(std::move(node)) {}

  std::shared_ptr<const detail::TermNode> node_;
};

/// True when `name` can be written as an atom without quotes.
inline bool is_plain_atom_name(std::string_view name) {
  if (name.empty()) return false;
  if (!std::islower(static_cast<unsigned char>(name.front()))) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) != 0 || c == '_';
  });
}

inline void write_quoted(std::string& out, std::string_view text, char quote) {
  out.push_back(quote);
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c == quote) out.push_back('\\');
        out.push_back(c);
    }
  }
  out.push_back(quote);
}

inline void write_atom_name(std::string& out, std::string_view name) {
  if (is_plain_atom_name(name)) {
    out += name;
  } else {
    write_quoted(out, name, '\'');
  }
}

inline void Term::write(std::string& out) const {
  switch (kind()) {
    case TermKind::var:
      out += name();
      if (scope() != 0) {
        out += "_";
        out += std::to_string(scope());
      }
      break;
    case TermKind::integer:
      out += std::to_string(int_value());
      break;
    case TermKind::atom:
      write_atom_name(out, name());
      break;
    case TermKind::string:
      write_quoted(out, str_value(), '"');
      break;
    case TermKind::compound: {
      write_atom_name(out, name());
      out.push_back('(');
      bool first = true;
      for (const auto& a : args()) {
        if (!first) out.push_back(',');
        first = false;
        a.write(out);
      }
      out.push_back(')');
      break;
    }
  }
}

inline int Term::compare(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return 0;
  if (a.kind() != b.kind()) {
    return static_cast<int>(a.kind()) < static_cast<int>(b.kind()) ? -1 : 1;
  }
  switch (a.kind()) {
    case TermKind::integer:
      return a.int_value() < b.int_value() ? -1
             : a.int_value() > b.int_value() ? 1
                                               : 0;
    case TermKind::var: {
      int c = a.name().compare(b.name());
      if (c != 0) return c < 0 ? -1 : 1;
      return a.scope() < b.scope() ? -1 : a.scope() > b.scope() ? 1 : 0;
    }
    case TermKind::atom:
    case TermKind::string: {
      int c = a.name().compare(b.name());
      return c < 0 ? -1 : c > 0 ? 1 : 0;
    }
    case TermKind::compound: {
      if (a.arity() != b.arity()) return a.arity() < b.arity() ? -1 : 1;
      int c = a.name().compare(b.name());
      if (c != 0) return c < 0 ? -1 : 1;
      for (std::size_t i = 0; i < a.arity(); ++i) {
        int ci = compare(a.args()[i], b.args()[i]);
        if (ci != 0) return ci;
      }
      return 0;
    }
  }
  return 0;
}

struct TermHash {
  std::size_t operator()(const Term& t) const noexcept { return t.hash(); }
};

/// Replaces every occurrence of atom `from` with `to`.
inline Term replace_atom(const Term& t, std::string_view from, const Term& to) {
  if (t.is_atom()) return t.name() == from ? to : t;
  if (!t.is_compound()) return t;
  std::vector<Term> args;
  args.reserve(t.arity());
  for (const auto& a : t.args()) args.push_back(replace_atom(a, from, to));
  return Term::compound(t.name(), std::move(args));
}

/// Collects the distinct variables of `t` in first-occurrence order.
inline void collect_vars(const Term& t, std::vector<Term>& out) {
  if (t.is_var()) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    return;
  }
  for (const auto& a : t.args()) collect_vars(a, out);
}

}  // namespace lucon::logic

template <>
struct std::hash<lucon::logic::Term> {
  std::size_t operator()(const lucon::logic::Term& t) const noexcept {
    return t.hash();
  }
};
