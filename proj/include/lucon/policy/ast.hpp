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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lucon/error.hpp"
#include "lucon/logic/term.hpp"

namespace lucon::policy {

using logic::Term;

/// Ordered by restrictiveness: allow < drop < error.
enum class Effect { allow = 0, drop = 1, error = 2 };

inline std::string_view to_string(Effect e) {
  switch (e) {
    case Effect::allow: return "allow";
    case Effect::drop: return "drop";
    case Effect::error: return "error";
  }
  return "?";
}

inline std::optional<Effect> parse_effect(std::string_view s) {
  if (s == "allow") return Effect::allow;
  if (s == "drop") return Effect::drop;
  if (s == "error") return Effect::error;
  return std::nullopt;
}

/// The more restrictive of two effects.
inline Effect most_restrictive(Effect a, Effect b) {
  return static_cast<int>(a) >= static_cast<int>(b) ? a : b;
}

struct Obligation {
  Term action;
  Effect otherwise = Effect::error;

  friend bool operator==(const Obligation&, const Obligation&) = default;
};

struct Decision {
  Effect effect = Effect::allow;
  std::vector<Obligation> obligations;

  friend bool operator==(const Decision&, const Decision&) = default;
};

struct ServiceDecl {
  std::string id;
  std::string endpoint;  // ECMAScript regex, full match
  std::vector<Term> properties;
  std::vector<Term> capabilities;  // stored, not interpreted
  std::vector<Term> creates_labels;
  std::vector<Term> removes_labels;

  friend bool operator==(const ServiceDecl&, const ServiceDecl&) = default;
};

struct FlowRule {
  std::string name;
  std::string target;  // service id
  std::vector<Term> trigger_labels;  // all must be present
  Decision decision;

  friend bool operator==(const FlowRule&, const FlowRule&) = default;
};

struct PolicyAst {
  std::vector<ServiceDecl> services;
  std::vector<FlowRule> rules;

  const ServiceDecl* find_service(std::string_view id) const {
    for (const auto& s : services) {
      if (s.id == id) return &s;
    }
    return nullptr;
  }
  const FlowRule* find_rule(std::string_view name) const {
    for (const auto& r : rules) {
      if (r.name == name) return &r;
    }
    return nullptr;
  }

  friend bool operator==(const PolicyAst&, const PolicyAst&) = default;
};

}  // namespace lucon::policy
