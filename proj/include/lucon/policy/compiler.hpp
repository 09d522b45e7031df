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

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lucon/logic/builtins.hpp"
#include "lucon/logic/knowledge_base.hpp"
#include "lucon/logic/solver.hpp"
#include "lucon/policy/ast.hpp"
#include "lucon/taint/labels.hpp"

namespace lucon::policy {

using logic::Clause;
using logic::KnowledgeBase;

/// Placeholder for an absent service id or URL in decision queries.
inline const Term& no_value() {
  static const Term t = Term::atom("$none");
  return t;
}

/// Matching rules shared by every compiled policy. `lacks_label/1` is bound
/// per decision request.
inline constexpr std::string_view kPolicyHelpers = R"(
service_matches(S, S, _).
service_matches(S, _, Url) :- has_endpoint(S, Re), regex(Re, Url, true).
targets(R, Id, Url) :- has_target(R, S), service_matches(S, Id, Url).
missing_trigger(R) :- receives_label(R, L), lacks_label(L).
rule_applies(R, Id, Url) :- rule(R), targets(R, Id, Url), \+ missing_trigger(R).
)";

struct CompiledPolicy {
  std::shared_ptr<const KnowledgeBase> kb;
  PolicyAst ast;
  std::vector<Clause> facts;  // the policy program without helpers
  std::unordered_map<std::string, std::size_t> rule_index;
  std::unordered_map<std::string, std::size_t> service_index;
  std::shared_ptr<logic::RegexCache> regex;

  const FlowRule* rule(std::string_view name) const {
    auto it = rule_index.find(std::string(name));
    return it == rule_index.end() ? nullptr : &ast.rules[it->second];
  }
  const ServiceDecl* service(std::string_view id) const {
    auto it = service_index.find(std::string(id));
    return it == service_index.end() ? nullptr : &ast.services[it->second];
  }
  /// Position of a rule in declaration order.
  std::size_t rule_position(std::string_view name) const {
    return rule_index.at(std::string(name));
  }
};

inline Term decision_id(const FlowRule& r) {
  return Term::atom("dec_" + r.name);
}

/// Policy facts in the rule/has_target/has_decision vocabulary.
inline std::vector<Clause> policy_facts(const PolicyAst& ast) {
  std::vector<Clause> out;
  auto fact = [&](std::string name, std::vector<Term> args) {
    out.emplace_back(Term::compound(std::move(name), std::move(args)));
  };
  for (const auto& r : ast.rules) {
    Term rule = Term::atom(r.name);
    Term dec = decision_id(r);
    fact("rule", {rule});
    fact("has_target", {rule, Term::atom(r.target)});
    for (const auto& l : r.trigger_labels) fact("receives_label", {rule, l});
    fact("has_decision", {rule, dec});
    fact("has_effect", {dec, Term::atom(std::string(to_string(r.decision.effect)))});
    for (const auto& o : r.decision.obligations) {
      fact("has_obligation", {dec, o.action});
      fact("has_otherwise",
           {dec, o.action, Term::atom(std::string(to_string(o.otherwise)))});
    }
  }
  for (const auto& s : ast.services) {
    Term svc = Term::atom(s.id);
    fact("service", {svc});
    fact("has_endpoint", {svc, Term::string(s.endpoint)});
    for (const auto& p : s.properties) fact("has_property", {svc, p});
    for (const auto& c : s.capabilities) fact("has_capability", {svc, c});
    for (const auto& l : s.creates_labels) fact("creates_label", {svc, l});
    for (const auto& l : s.removes_labels) fact("removes_label", {svc, l});
  }
  return out;
}

inline CompiledPolicy compile(PolicyAst ast) {
  CompiledPolicy cp;
  cp.regex = std::make_shared<logic::RegexCache>();
  auto kb = std::make_shared<KnowledgeBase>();
  logic::register_standard_builtins(*kb, cp.regex);
  kb->load(kPolicyHelpers);
  cp.facts = policy_facts(ast);
  for (const auto& c : cp.facts) kb->add_clause(c);
  for (std::size_t i = 0; i < ast.rules.size(); ++i) {
    cp.rule_index.emplace(ast.rules[i].name, i);
  }
  for (std::size_t i = 0; i < ast.services.size(); ++i) {
    cp.service_index.emplace(ast.services[i].id, i);
    cp.regex->warm(ast.services[i].endpoint);
  }
  cp.kb = std::move(kb);
  cp.ast = std::move(ast);
  return cp;
}

/// Services whose endpoint regex fully matches `url`, in declaration order.
inline std::vector<std::string> match_services(const CompiledPolicy& cp,
                                               const std::string& url) {
  std::vector<std::string> out;
  std::vector<logic::Literal> query = {
      logic::Literal::positive(Term::compound("service", {Term::var("S")})),
      logic::Literal::positive(
          Term::compound("has_endpoint", {Term::var("S"), Term::var("Re")})),
      logic::Literal::positive(Term::compound(
          "regex", {Term::var("Re"), Term::string(url), Term::atom("true")})),
  };
  for (const auto& s : logic::solve(*cp.kb, std::move(query))) {
    out.push_back(s.at("S").name());
  }
  return out;
}

/// Union of the label transfers of every service selected by id or by
/// endpoint match.
inline taint::LabelTransfer resolve_transfer(
    const CompiledPolicy& cp, std::string_view service_id,
    const std::optional<std::string>& url) {
  std::vector<const ServiceDecl*> selected;
  if (const ServiceDecl* s = cp.service(service_id)) selected.push_back(s);
  if (url) {
    for (const auto& id : match_services(cp, *url)) {
      const ServiceDecl* s = cp.service(id);
      if (std::find(selected.begin(), selected.end(), s) == selected.end()) {
        selected.push_back(s);
      }
    }
  }
  taint::LabelTransfer t;
  for (const ServiceDecl* s : selected) {
    taint::LabelTransfer one{s->removes_labels,
                             taint::LabelSet(s->creates_labels)};
    t.merge(one);
  }
  return t;
}

/// True if some declared service is selected by id or URL.
inline bool resolves(const CompiledPolicy& cp, std::string_view service_id,
                     const std::optional<std::string>& url) {
  if (cp.service(service_id) != nullptr) return true;
  return url && !match_services(cp, *url).empty();
}

}  // namespace lucon::policy
