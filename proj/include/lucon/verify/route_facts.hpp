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

#include <vector>

#include "lucon/logic/clause.hpp"
#include "lucon/route/route.hpp"

namespace lucon::verify {

using logic::Clause;
using logic::Term;

/// The route as logic facts: stmt/1 and succ/2 over statement names, plus
/// stmt_kind/2, stmt_number/2 and stmt_service/2 metadata.
struct RouteFacts {
  std::vector<Clause> clauses;

  std::size_t count(std::string_view functor) const {
    std::size_t n = 0;
    for (const auto& c : clauses) n += c.head().name() == functor;
    return n;
  }
};

inline RouteFacts compile_route_facts(const route::Route& r) {
  RouteFacts out;
  auto fact = [&](const char* name, std::vector<Term> args) {
    out.clauses.emplace_back(Term::compound(name, std::move(args)));
  };
  for (const auto& [n, s] : r.statements) {
    Term self = Term::atom(s.name);
    fact("stmt", {self});
    fact("stmt_number", {self, Term::integer(n)});
    fact("stmt_kind", {self, Term::atom(std::string(route::to_string(s.kind)))});
    if (!s.service.empty()) fact("stmt_service", {self, Term::atom(s.service)});
  }
  for (const auto& [n, s] : r.statements) {
    for (auto t : route::successors(r, n)) {
      fact("succ", {Term::atom(s.name), Term::atom(r.at(t).name)});
    }
  }
  return out;
}

}  // namespace lucon::verify
