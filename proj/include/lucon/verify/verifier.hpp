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
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "lucon/pdp/pdp.hpp"
#include "lucon/policy/compiler.hpp"
#include "lucon/route/route.hpp"
#include "lucon/verify/route_facts.hpp"

namespace lucon::verify {

using policy::Effect;
using route::Route;
using route::Statement;
using route::StmtKind;
using route::StmtNo;
using taint::LabelSet;

struct TraceStep {
  StmtNo statement = 0;
  std::string name;
  StmtKind kind = StmtKind::from;
  LabelSet labels;  // on arrival; created labels for `from`

  friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct Counterexample {
  std::string rule;
  Effect effect = Effect::drop;
  std::string violating_service;
  StmtNo statement = 0;
  LabelSet offending_labels;
  std::vector<TraceStep> trace;
  // Choice outcomes that lead along the trace.
  std::map<StmtNo, bool> choices;

  friend bool operator==(const Counterexample&, const Counterexample&) = default;
};

struct Verdict {
  std::vector<Counterexample> counterexamples;
  std::vector<std::string> warnings;
  std::size_t states_explored = 0;

  bool valid() const { return counterexamples.empty(); }
};

struct VerifyOptions {
  pdp::DecideOptions decide;
  // Report every violating path instead of one per (rule, statement,
  // offending labels).
  bool all_paths = false;
};

/// Rule name reported when default-deny drops a flow no rule matches.
inline constexpr std::string_view kDefaultDenyRule = "default_deny";

namespace detail {

struct Path {
  std::vector<TraceStep> steps;
  std::map<StmtNo, bool> choices;
};

// A copy either arrives at the end of its segment with some labels, or is
// stopped on the way (nullopt).
using Outcome = std::pair<std::optional<LabelSet>, Path>;

class Explorer {
 public:
  Explorer(const Route& r, const policy::CompiledPolicy& cp,
           const VerifyOptions& options)
      : route_(r), cp_(cp), options_(options), joins_(route::split_joins(r)) {
    for (const auto& [n, s] : r.statements) {
      if (s.kind != StmtKind::from && !s.touches_service()) continue;
      std::optional<std::string> url;
      if (s.kind != StmtKind::bean) url = r.endpoint_of(s.service);
      transfers_.emplace(n, policy::resolve_transfer(cp, s.service, url));
      if (!policy::resolves(cp, s.service, url) &&
          warned_.insert(s.service).second) {
        verdict_.warnings.push_back("service " + s.service +
                                    " has no declared label transfer; "
                                    "assuming it neither creates nor removes "
                                    "labels");
      }
    }
  }

  Verdict run() {
    StmtNo entry = route_.entry();
    explore(entry, transfers_.at(entry).creates, {}, std::nullopt);
    return std::move(verdict_);
  }

 private:
  std::vector<Outcome> explore(StmtNo n, const LabelSet& labels,
                               const Path& prefix, std::optional<StmtNo> stop) {
    if (stop && n == *stop) return {{labels, {}}};
    auto key = std::make_pair(n, labels);
    if (!options_.all_paths) {
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    if (seen_.insert(key).second) ++verdict_.states_explored;

    const Statement& s = route_.at(n);
    TraceStep step{n, s.name, s.kind, labels};
    Path here = prefix;
    here.steps.push_back(step);
    std::vector<Outcome> out;

    // Continues at `to` and prepends this statement to every outcome.
    auto follow = [&](StmtNo to, const LabelSet& l,
                      std::optional<bool> choice = std::nullopt) {
      Path p = here;
      if (choice) p.choices[n] = *choice;
      for (auto& [o, sub] : explore(to, l, p, stop)) {
        Path full;
        full.steps.push_back(step);
        full.steps.insert(full.steps.end(), sub.steps.begin(), sub.steps.end());
        full.choices = std::move(sub.choices);
        if (choice) full.choices[n] = *choice;
        out.emplace_back(std::move(o), std::move(full));
      }
    };
    auto next = [&]() -> std::optional<StmtNo> {
      auto succ = route::successors(route_, n);
      if (succ.empty()) return std::nullopt;
      return succ.front();
    };

    switch (s.kind) {
      case StmtKind::to:
      case StmtKind::bean:
        if (check(s, labels, here)) {
          out.push_back({std::nullopt, Path{{step}, {}}});
          break;
        }
        [[fallthrough]];
      case StmtKind::from:
      case StmtKind::aggregate:
      case StmtKind::set_msg_prop:
      case StmtKind::set_env_prop: {
        LabelSet after = labels;
        if (s.kind == StmtKind::to || s.kind == StmtKind::bean) {
          after = transfers_.at(n).apply(labels);
        }
        if (auto t = next()) {
          follow(*t, after);
        } else {
          out.push_back({after, Path{{step}, {}}});
        }
        break;
      }
      case StmtKind::choice:
        follow(s.then_target, labels, true);
        if (s.else_target != s.then_target) follow(s.else_target, labels, false);
        break;
      case StmtKind::split:
        split(s, labels, here, step, stop, out);
        break;
    }

    if (!options_.all_paths) {
      dedupe(out);
      memo_.emplace(key, out);
    }
    return out;
  }

  void split(const Statement& s, const LabelSet& labels, const Path& here,
             const TraceStep& step, std::optional<StmtNo> stop,
             std::vector<Outcome>& out) {
    StmtNo agg = joins_.at(s.number);
    std::vector<std::vector<Outcome>> branches;
    for (StmtNo head : route::successors(route_, s.number)) {
      auto r = explore(head, labels, here, agg);
      if (!options_.all_paths) dedupe(r);
      branches.push_back(std::move(r));
    }
    // Every combination of branch outcomes; branches are disjoint, so
    // their choices are independent.
    std::vector<std::size_t> idx(branches.size(), 0);
    for (;;) {
      LabelSet joined;
      bool any = false;
      std::size_t shown = branches.size();
      std::map<StmtNo, bool> choices;
      for (std::size_t i = 0; i < branches.size(); ++i) {
        const auto& [o, p] = branches[i][idx[i]];
        for (const auto& [c, v] : p.choices) choices[c] = v;
        if (!o) continue;
        any = true;
        joined |= *o;
        if (shown == branches.size() ||
            o->size() > branches[shown][idx[shown]].first->size()) {
          shown = i;
        }
      }
      Path tail;
      tail.steps.push_back(step);
      if (shown < branches.size()) {
        const auto& steps = branches[shown][idx[shown]].second.steps;
        tail.steps.insert(tail.steps.end(), steps.begin(), steps.end());
      }
      tail.choices = choices;
      if (!any) {
        out.push_back({std::nullopt, tail});
      } else {
        Path p = here;
        p.steps.insert(p.steps.end(), tail.steps.begin() + 1, tail.steps.end());
        for (const auto& [c, v] : choices) p.choices[c] = v;
        for (auto& [o, sub] : explore(agg, joined, p, stop)) {
          Path full = tail;
          full.steps.insert(full.steps.end(), sub.steps.begin(), sub.steps.end());
          for (const auto& [c, v] : sub.choices) full.choices[c] = v;
          out.emplace_back(std::move(o), std::move(full));
        }
      }
      // Next combination.
      std::size_t i = 0;
      while (i < idx.size() && ++idx[i] == branches[i].size()) idx[i++] = 0;
      if (i == idx.size()) break;
    }
  }

  // Decides the arrival at a service statement. Records counterexamples and
  // returns true if the copy is stopped there.
  bool check(const Statement& s, const LabelSet& labels, const Path& path) {
    std::optional<std::string> url;
    if (s.kind == StmtKind::to) url = route_.endpoint_of(s.service);
    pdp::DecisionRequest req{s.service, url, labels};
    pdp::DecisionResult d = pdp::decide(cp_, req, options_.decide);
    if (d.effect == Effect::allow) return false;
    if (d.matched_rules.empty()) {
      record(std::string(kDefaultDenyRule), d.effect, s, labels, path);
    }
    for (const auto& name : d.matched_rules) {
      const policy::FlowRule* rule = cp_.rule(name);
      if (rule->decision.effect == Effect::allow) continue;
      LabelSet offending;
      for (const auto& t : rule->trigger_labels) {
        for (const auto& l : labels.matching(t)) offending.insert(l);
      }
      record(name, rule->decision.effect, s, offending, path);
    }
    return true;
  }

  void record(std::string rule, Effect effect, const Statement& s,
              LabelSet offending, const Path& path) {
    Counterexample ce{std::move(rule), effect, s.service, s.number,
                      std::move(offending), path.steps, path.choices};
    if (options_.all_paths) {
      for (const auto& c : verdict_.counterexamples) {
        if (c == ce) return;
      }
    } else if (!reported_
                    .insert({ce.rule, ce.statement, ce.offending_labels})
                    .second) {
      return;
    }
    verdict_.counterexamples.push_back(std::move(ce));
  }

  static void dedupe(std::vector<Outcome>& v) {
    std::vector<Outcome> kept;
    for (auto& o : v) {
      bool dup = false;
      for (const auto& k : kept) dup = dup || k.first == o.first;
      if (!dup) kept.push_back(std::move(o));
    }
    v = std::move(kept);
  }

  const Route& route_;
  const policy::CompiledPolicy& cp_;
  const VerifyOptions& options_;
  std::map<StmtNo, StmtNo> joins_;
  std::map<StmtNo, taint::LabelTransfer> transfers_;
  std::set<std::string> warned_;
  std::map<std::pair<StmtNo, LabelSet>, std::vector<Outcome>> memo_;
  std::set<std::pair<StmtNo, LabelSet>> seen_;
  std::set<std::tuple<std::string, StmtNo, LabelSet>> reported_;
  Verdict verdict_;
};

}  // namespace detail

/// Explores every label evolution through the route and reports each flow
/// the policy would stop. Choices are taken both ways.
inline Verdict verify(const Route& r, const policy::CompiledPolicy& cp,
                      const VerifyOptions& options = {}) {
  return detail::Explorer(r, cp, options).run();
}

/// Counterexample text: a three-line reason, a blank line, then the flow.
inline std::string render_counterexample(const Counterexample& ce,
                                         std::string_view route_name) {
  std::string out = "Route " + std::string(route_name) + " is invalid because\n";
  out += "service " + ce.violating_service + " may receive label(s) " +
         ce.offending_labels.to_string() + ".\n";
  out += "This is forbidden by rule " + ce.rule + "\n";
  out += "\nExample flows violating policy follow:\n";
  for (const auto& st : ce.trace) {
    out += "|-- " + st.name +
           (st.kind == StmtKind::from ? " creates" : " receives") +
           " message labeled " + st.labels.to_string() + "\n";
  }
  out += "|-- fail!\n";
  return out;
}

inline std::string render_verdict(const Verdict& v, std::string_view route_name) {
  if (v.valid()) return "Route " + std::string(route_name) + " is valid\n";
  std::string out;
  for (std::size_t i = 0; i < v.counterexamples.size(); ++i) {
    if (i) out += "\n";
    out += render_counterexample(v.counterexamples[i], route_name);
  }
  return out;
}

inline nlohmann::json to_json(const Counterexample& ce) {
  auto labels = [](const LabelSet& ls) {
    auto a = nlohmann::json::array();
    for (const auto& l : ls) a.push_back(l.to_string());
    return a;
  };
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& st : ce.trace) {
    trace.push_back({{"statement", st.statement},
                     {"name", st.name},
                     {"kind", std::string(route::to_string(st.kind))},
                     {"labels", labels(st.labels)}});
  }
  nlohmann::json choices = nlohmann::json::object();
  for (const auto& [n, v] : ce.choices) choices[std::to_string(n)] = v;
  return {{"rule", ce.rule},
          {"effect", std::string(policy::to_string(ce.effect))},
          {"service", ce.violating_service},
          {"statement", ce.statement},
          {"offending_labels", labels(ce.offending_labels)},
          {"trace", trace},
          {"choices", choices}};
}

inline nlohmann::json to_json(const Verdict& v, std::string_view route_name) {
  nlohmann::json j;
  j["route"] = std::string(route_name);
  j["valid"] = v.valid();
  j["counterexamples"] = nlohmann::json::array();
  for (const auto& ce : v.counterexamples) {
    j["counterexamples"].push_back(to_json(ce));
  }
  j["warnings"] = v.warnings;
  j["states_explored"] = v.states_explored;
  return j;
}

}  // namespace lucon::verify
