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
#include <optional>
#include <string>
#include <vector>

#include "lucon/logic/knowledge_base.hpp"
#include "lucon/logic/solver.hpp"
#include "lucon/policy/compiler.hpp"
#include "lucon/taint/labels.hpp"

namespace lucon::pdp {

using logic::Term;
using policy::CompiledPolicy;
using policy::Effect;
using policy::Obligation;
using taint::LabelSet;

/// A message about to enter a service. The target is selected by service id,
/// by endpoint URL, or both; a rule applies if either selects its target.
struct DecisionRequest {
  std::optional<std::string> service_id;
  std::optional<std::string> endpoint_url;
  const LabelSet& labels;
  // Substituted for the atom `message` in obligation actions.
  Term message_ref = Term::atom("message");
};

struct DecisionResult {
  Effect effect = Effect::allow;
  std::vector<Obligation> obligations;
  std::vector<std::string> matched_rules;  // declaration order

  friend bool operator==(const DecisionResult&, const DecisionResult&) = default;
};

struct DecideOptions {
  bool default_deny = false;  // no match gives drop instead of allow
  logic::SolveLimits limits{};
};

/// Evaluates the compiled policy for one request. Effects of all matching
/// rules fold to the most restrictive one; obligations are concatenated in
/// rule declaration order.
inline DecisionResult decide(const CompiledPolicy& cp, const DecisionRequest& req,
                             const DecideOptions& options = {}) {
  const LabelSet& labels = req.labels;
  logic::KnowledgeBase request_kb(cp.kb);
  request_kb.register_builtin(
      "lacks_label", 1,
      [&labels](std::span<const Term> args) -> logic::BuiltinAnswers {
        if (labels.matches(args[0])) return {};
        return {{args[0]}};
      });

  Term id = req.service_id ? Term::atom(*req.service_id) : policy::no_value();
  Term url = req.endpoint_url ? Term::string(*req.endpoint_url)
                              : policy::no_value();
  Term rule_var = Term::var("R");
  std::vector<logic::Literal> query = {logic::Literal::positive(
      Term::compound("rule_applies", {rule_var, id, url}))};

  const std::size_t n_rules = cp.ast.rules.size();
  std::vector<bool> seen(n_rules, false);
  std::size_t matched = 0;
  logic::SolutionStream stream(request_kb, std::move(query), options.limits);
  while (auto s = stream.next()) {
    std::size_t pos = cp.rule_position(s->at("R").name());
    if (!seen[pos]) {
      seen[pos] = true;
      ++matched;
    }
  }

  DecisionResult result;
  if (matched == 0) {
    result.effect = options.default_deny ? Effect::drop : Effect::allow;
    return result;
  }
  result.matched_rules.reserve(matched);
  for (std::size_t i = 0; i < n_rules; ++i) {
    if (!seen[i]) continue;
    const policy::FlowRule& rule = cp.ast.rules[i];
    result.matched_rules.push_back(rule.name);
    result.effect = policy::most_restrictive(result.effect, rule.decision.effect);
    for (const auto& o : rule.decision.obligations) {
      result.obligations.push_back(
          {logic::replace_atom(o.action, "message", req.message_ref),
           o.otherwise});
    }
  }
  return result;
}

}  // namespace lucon::pdp
