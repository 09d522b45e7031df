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

#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lucon/logic/solver.hpp"
#include "lucon/pdp/pdp.hpp"
#include "lucon/policy/compiler.hpp"
#include "lucon/route/message.hpp"
#include "lucon/route/route.hpp"
#include "lucon/runtime/registry.hpp"

namespace lucon::runtime {

using policy::Effect;
using route::Route;
using route::Statement;
using route::StmtKind;
using route::StmtNo;
using taint::LabelSet;

/// A set-prop expression or choice condition could not be evaluated.
class EvalError : public Error {
 public:
  using Error::Error;
};

enum class RunStatus { completed, dropped, errored };

inline std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::dropped: return "dropped";
    case RunStatus::errored: return "errored";
  }
  return "?";
}

struct AuditEvent {
  std::string route;
  StmtNo statement = 0;
  std::string statement_name;
  StmtKind kind = StmtKind::from;
  std::string message_id;
  LabelSet labels_before;
  LabelSet labels_after;
  std::optional<Effect> decision;  // to and bean only
  std::vector<std::string> rules;  // rules that matched
  std::string note;
};

inline nlohmann::json labels_json(const LabelSet& labels) {
  auto out = nlohmann::json::array();
  for (const auto& l : labels) out.push_back(l.to_string());
  return out;
}

inline nlohmann::json to_json(const AuditEvent& e) {
  nlohmann::json j;
  j["route"] = e.route;
  j["statement"] = e.statement;
  j["name"] = e.statement_name;
  j["kind"] = std::string(route::to_string(e.kind));
  j["message"] = e.message_id;
  j["labels_before"] = labels_json(e.labels_before);
  j["labels_after"] = labels_json(e.labels_after);
  j["decision"] = e.decision ? nlohmann::json(std::string(
                                   policy::to_string(*e.decision)))
                             : nlohmann::json(nullptr);
  j["rules"] = e.rules;
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

struct RunOutcome {
  RunStatus status = RunStatus::completed;
  std::optional<StmtNo> at_statement;
  std::string rule;    // rule behind a drop or policy error
  std::string reason;  // human-readable cause when not completed
  std::vector<Message> final_messages;
  std::vector<AuditEvent> audit;
  std::size_t pdp_calls = 0;
};

inline nlohmann::json to_json(const Message& m) {
  nlohmann::json props = nlohmann::json::object();
  for (const auto& [k, v] : m.props) props[k] = v.to_string();
  return {{"id", m.id},
          {"payload", m.payload},
          {"props", props},
          {"labels", labels_json(m.labels)}};
}

inline nlohmann::json to_json(const RunOutcome& o) {
  nlohmann::json j;
  j["status"] = std::string(to_string(o.status));
  j["at_statement"] =
      o.at_statement ? nlohmann::json(*o.at_statement) : nlohmann::json(nullptr);
  j["rule"] = o.rule.empty() ? nlohmann::json(nullptr) : nlohmann::json(o.rule);
  if (!o.reason.empty()) j["reason"] = o.reason;
  j["final_messages"] = nlohmann::json::array();
  for (const auto& m : o.final_messages) j["final_messages"].push_back(to_json(m));
  j["pdp_calls"] = o.pdp_calls;
  return j;
}

/// The external event a route's `from` consumes.
struct Trigger {
  std::string payload;
  Props props;
};

struct ExecuteOptions {
  pdp::DecideOptions decide;
  // Global variables. A private environment is used when null.
  Env* env = nullptr;
  // Forced outcomes of choice statements, by statement number.
  std::map<StmtNo, bool> choices;
  logic::SolveLimits eval_limits;
};

namespace detail {

inline std::string next_message_id() {
  static std::atomic<std::uint64_t> counter{0};
  return "m" + std::to_string(++counter);
}

}  // namespace detail

/// Step-wise interpreter for one route execution. Split branches run one
/// after another in successor order; a branch is finished when it reaches
/// the aggregate of its split.
class Interpreter {
 public:
  Interpreter(const Route& route, const policy::CompiledPolicy& policy,
              const ServiceRegistry& services,
              const ObligationRegistry& obligations,
              ExecuteOptions options = {})
      : route_(route),
        policy_(policy),
        services_(services),
        obligations_(obligations),
        options_(std::move(options)),
        joins_of_(route::split_joins(route)) {
    env_ = options_.env != nullptr ? options_.env : &own_env_;
    for (const auto& [n, s] : route_.statements) {
      if (s.kind != StmtKind::from && !s.touches_service()) continue;
      if (!services_.contains(s.service)) {
        throw ValidationError("statement " + std::to_string(n) +
                              ": no handler for service '" + s.service + "'");
      }
      std::optional<std::string> url;
      if (s.kind != StmtKind::bean) url = route_.endpoint_of(s.service);
      transfers_.emplace(n, policy::resolve_transfer(policy_, s.service, url));
    }
  }

  Interpreter(const Interpreter&) = delete;
  Interpreter& operator=(const Interpreter&) = delete;

  void start(Trigger trigger) {
    if (started_) throw Error("execution already started");
    started_ = true;
    trigger_ = std::move(trigger);
    threads_.push_back({"", route_.entry(), std::nullopt, false});
  }

  bool active() const { return !threads_.empty(); }

  /// Executes the statement at pc. Returns its audit record.
  const AuditEvent& step() {
    if (!active()) throw Error("execution is not active");
    Thread t = threads_.back();
    const Statement& s = route_.at(t.pc);
    AuditEvent ev;
    ev.route = route_.name;
    ev.statement = s.number;
    ev.statement_name = s.name;
    ev.kind = s.kind;
    try {
      switch (s.kind) {
        case StmtKind::from: exec_from(s, ev); break;
        case StmtKind::to:
        case StmtKind::bean: exec_service(s, t, ev); break;
        case StmtKind::choice: exec_choice(s, t, ev); break;
        case StmtKind::split: exec_split(s, t, ev); break;
        case StmtKind::aggregate: exec_aggregate(s, ev); break;
        case StmtKind::set_msg_prop:
        case StmtKind::set_env_prop: exec_set(s, t, ev); break;
      }
    } catch (const EvalError& e) {
      ev.note = e.what();
      abort(s.number, "", e.what());
    }
    outcome_.audit.push_back(std::move(ev));
    return outcome_.audit.back();
  }

  /// Runs to the end and returns the outcome.
  RunOutcome run() {
    while (active()) step();
    return outcome();
  }

  const RunOutcome& outcome() const { return outcome_; }

  // Execution state.
  std::optional<StmtNo> pc() const {
    if (!active()) return std::nullopt;
    return threads_.back().pc;
  }
  const Statement* next() const {
    auto n = pc();
    return n ? &route_.at(*n) : nullptr;
  }
  const std::map<std::string, Message>& live_messages() const { return live_; }
  std::map<std::string, LabelSet> taints() const {
    std::map<std::string, LabelSet> out;
    for (const auto& [id, m] : live_) out.emplace(id, m.labels);
    return out;
  }
  Props env() const { return env_->snapshot(); }
  /// The message the current thread carries, if any.
  const Message* current() const {
    if (!active()) return nullptr;
    auto it = live_.find(threads_.back().message);
    return it == live_.end() ? nullptr : &it->second;
  }

 private:
  struct Thread {
    std::string message;
    StmtNo pc = 0;
    std::optional<StmtNo> join;  // aggregate closing the innermost split
    bool aggregating = false;
  };
  struct Join {
    std::size_t outstanding = 0;
    std::vector<std::string> arrived;
    std::string parent;
    std::optional<StmtNo> outer;
  };

  Message& message(const Thread& t) { return live_.at(t.message); }

  // Moves the current thread to `to`, parking it at its join or retiring it
  // at the end of the route.
  void advance(StmtNo from_stmt) {
    Thread t = threads_.back();
    threads_.pop_back();
    auto succ = route::successors(route_, from_stmt);
    if (succ.empty()) {
      auto it = live_.find(t.message);
      outcome_.final_messages.push_back(it->second);
      live_.erase(it);
      return;
    }
    move_to(t, succ.front());
  }

  void move_to(Thread t, StmtNo to) {
    t.pc = to;
    t.aggregating = false;
    if (t.join && *t.join == to) {
      Join& j = joins_.at(to);
      j.arrived.push_back(t.message);
      --j.outstanding;
      complete(to);
      return;
    }
    threads_.push_back(std::move(t));
  }

  // A branch message left the route without reaching its join.
  void vanish(const std::optional<StmtNo>& join) {
    if (!join) return;
    --joins_.at(*join).outstanding;
    complete(*join);
  }

  void complete(StmtNo agg) {
    Join& j = joins_.at(agg);
    if (j.outstanding != 0) return;
    if (j.arrived.empty()) {
      auto outer = j.outer;
      joins_.erase(agg);
      vanish(outer);
      return;
    }
    threads_.push_back({j.parent, agg, j.outer, true});
  }

  void abort(StmtNo at, std::string rule, std::string reason) {
    outcome_.status = RunStatus::errored;
    outcome_.at_statement = at;
    outcome_.rule = std::move(rule);
    outcome_.reason = std::move(reason);
    threads_.clear();
  }

  void exec_from(const Statement& s, AuditEvent& ev) {
    Exchange in{trigger_.payload, trigger_.props};
    Exchange out;
    try {
      out = services_.invoke(s.service, in);
    } catch (const std::exception& e) {
      ev.note = std::string("handler failed: ") + e.what();
      abort(s.number, "", ev.note);
      return;
    }
    Message m;
    m.id = detail::next_message_id();
    m.payload = std::move(out.payload);
    m.props = std::move(out.props);
    m.labels = transfers_.at(s.number).creates;
    ev.message_id = m.id;
    ev.labels_after = m.labels;
    threads_.back().message = m.id;
    live_.emplace(m.id, std::move(m));
    advance(s.number);
  }

  void exec_service(const Statement& s, const Thread& t, AuditEvent& ev) {
    Message& m = message(t);
    ev.message_id = m.id;
    ev.labels_before = m.labels;
    std::optional<std::string> url;
    if (s.kind == StmtKind::to) url = route_.endpoint_of(s.service);
    pdp::DecisionRequest req{s.service, url, m.labels, Term::string(m.id)};
    pdp::DecisionResult d = pdp::decide(policy_, req, options_.decide);
    ++outcome_.pdp_calls;
    ev.rules = d.matched_rules;

    Effect effect = d.effect;
    std::string rule = first_rule_with(d, effect);
    // Obligations run in order; the first failure decides.
    std::size_t k = 0;
    bool failed = false;
    for (const auto& rname : d.matched_rules) {
      const auto& owned = policy_.rule(rname)->decision.obligations;
      for (std::size_t i = 0; i < owned.size() && !failed; ++i, ++k) {
        const auto& o = d.obligations[k];
        if (!obligations_.run(o.action, m)) {
          effect = o.otherwise;
          rule = rname;
          ev.note = "obligation " + o.action.to_string() + " failed";
          failed = true;
        }
      }
      if (failed) break;
    }
    ev.decision = effect;
    if (effect == Effect::error) {
      ev.labels_after = m.labels;
      abort(s.number, rule, "policy error by rule " + rule);
      return;
    }
    if (effect == Effect::drop) {
      if (outcome_.status == RunStatus::completed) {
        outcome_.status = RunStatus::dropped;
        outcome_.at_statement = s.number;
        outcome_.rule = rule;
        outcome_.reason = "dropped by rule " + rule;
      }
      Thread gone = threads_.back();
      threads_.pop_back();
      live_.erase(gone.message);
      vanish(gone.join);
      return;
    }
    Exchange out;
    try {
      out = services_.invoke(s.service, Exchange{m.payload, m.props});
    } catch (const std::exception& e) {
      ev.labels_after = m.labels;
      ev.note = std::string("handler failed: ") + e.what();
      abort(s.number, "", ev.note);
      return;
    }
    m.payload = std::move(out.payload);
    m.props = std::move(out.props);
    m.labels = transfers_.at(s.number).apply(m.labels);
    ev.labels_after = m.labels;
    advance(s.number);
  }

  std::string first_rule_with(const pdp::DecisionResult& d, Effect e) const {
    for (const auto& r : d.matched_rules) {
      if (policy_.rule(r)->decision.effect == e) return r;
    }
    return "";
  }

  // Δ and μ_m as env_prop/2 and msg_prop/2 over the policy program.
  std::shared_ptr<logic::KnowledgeBase> eval_kb(const Message& m) const {
    auto kb = std::make_shared<logic::KnowledgeBase>(policy_.kb);
    auto table = [](Props props) {
      return [props = std::move(props)](std::span<const Term>) {
        logic::BuiltinAnswers out;
        for (const auto& [k, v] : props) out.push_back({Term::atom(k), v});
        return out;
      };
    };
    kb->register_builtin("env_prop", 2, table(env_->snapshot()));
    kb->register_builtin("msg_prop", 2, table(m.props));
    return kb;
  }

  bool provable(const logic::KnowledgeBase& kb, const Term& goal) const {
    try {
      logic::SolutionStream st(kb, {logic::Literal::positive(goal)},
                               options_.eval_limits);
      return st.next().has_value();
    } catch (const Error& e) {
      throw EvalError("cannot evaluate " + goal.to_string() + ": " + e.what());
    }
  }

  void exec_choice(const Statement& s, const Thread& t, AuditEvent& ev) {
    const Message& m = message(t);
    ev.message_id = m.id;
    ev.labels_before = ev.labels_after = m.labels;
    bool holds;
    if (auto it = options_.choices.find(s.number); it != options_.choices.end()) {
      holds = it->second;
      ev.note = holds ? "forced then" : "forced otherwise";
    } else {
      holds = provable(*eval_kb(m), *s.expr);
      ev.note = holds ? "then" : "otherwise";
    }
    Thread cur = threads_.back();
    threads_.pop_back();
    move_to(cur, holds ? s.then_target : s.else_target);
  }

  // Value of a set-prop expression: a callable naming a predicate with one
  // more argument is called for its last argument; anything else is its own
  // value.
  Term evaluate(const Message& m, const Term& e) const {
    auto kb = eval_kb(m);
    if (e.is_callable() &&
        (kb->defines(e.name(), e.arity() + 1) ||
         kb->find_builtin(e.name(), e.arity() + 1) != nullptr)) {
      std::vector<Term> args(e.args().begin(), e.args().end());
      Term result = Term::var("Value__");
      args.push_back(result);
      Term call = Term::compound(e.name(), std::move(args));
      std::optional<logic::Substitution> s;
      try {
        logic::SolutionStream st(*kb, {logic::Literal::positive(call)},
                                 options_.eval_limits);
        s = st.next();
      } catch (const Error& err) {
        throw EvalError("cannot evaluate " + e.to_string() + ": " + err.what());
      }
      if (!s) throw EvalError("expression " + e.to_string() + " has no value");
      auto v = s->get("Value__");
      if (!v || !v->is_ground()) {
        throw EvalError("expression " + e.to_string() + " has no ground value");
      }
      return *v;
    }
    return e;
  }

  void exec_set(const Statement& s, const Thread& t, AuditEvent& ev) {
    Message& m = message(t);
    ev.message_id = m.id;
    ev.labels_before = ev.labels_after = m.labels;
    Term v = evaluate(m, *s.expr);
    ev.note = s.key + " := " + v.to_string();
    if (s.kind == StmtKind::set_msg_prop) {
      m.props.insert_or_assign(s.key, v);
    } else {
      env_->set(s.key, v);
    }
    advance(s.number);
  }

  void exec_split(const Statement& s, const Thread& t, AuditEvent& ev) {
    Message m = message(t);
    ev.message_id = m.id;
    ev.labels_before = ev.labels_after = m.labels;
    live_.erase(m.id);
    StmtNo agg = joins_of_.at(s.number);
    auto heads = route::successors(route_, s.number);
    Join& j = joins_[agg];
    j = Join{heads.size(), {}, m.id, t.join};
    threads_.pop_back();
    std::vector<Thread> branches;
    for (std::size_t i = 0; i < heads.size(); ++i) {
      Message copy = m;
      copy.id = m.id + "." + std::to_string(i + 1);
      live_.emplace(copy.id, copy);
      branches.push_back({copy.id, s.number, agg, false});
    }
    // Branch 1 runs first, so it goes on top of the stack. Branches that
    // are empty park at the join afterwards.
    for (std::size_t i = heads.size(); i-- > 0;) {
      if (heads[i] == agg) continue;
      threads_.push_back(branches[i]);
      threads_.back().pc = heads[i];
    }
    for (std::size_t i = 0; i < heads.size(); ++i) {
      if (heads[i] == agg) move_to(branches[i], agg);
    }
  }

  void exec_aggregate(const Statement& s, AuditEvent& ev) {
    Join j = std::move(joins_.at(s.number));
    joins_.erase(s.number);
    Message out;
    out.id = j.parent;
    for (const auto& id : j.arrived) {
      Message& part = live_.at(id);
      ev.labels_before |= part.labels;
      out.labels |= part.labels;
      out.payload += part.payload;
      for (const auto& [k, v] : part.props) out.props.insert_or_assign(k, v);
      live_.erase(id);
    }
    ev.message_id = out.id;
    ev.labels_after = out.labels;
    ev.note = std::to_string(j.arrived.size()) + " branches arrived";
    live_.emplace(out.id, std::move(out));
    advance(s.number);
  }

  const Route& route_;
  const policy::CompiledPolicy& policy_;
  const ServiceRegistry& services_;
  const ObligationRegistry& obligations_;
  ExecuteOptions options_;
  std::map<StmtNo, StmtNo> joins_of_;
  std::map<StmtNo, taint::LabelTransfer> transfers_;
  Env own_env_;
  Env* env_ = nullptr;
  Trigger trigger_;
  bool started_ = false;
  std::vector<Thread> threads_;
  std::map<StmtNo, Join> joins_;
  std::map<std::string, Message> live_;
  RunOutcome outcome_;
};

/// Runs a route to completion for one trigger.
inline RunOutcome execute(const Route& route,
                          const policy::CompiledPolicy& policy,
                          const ServiceRegistry& services,
                          const ObligationRegistry& obligations,
                          Trigger trigger, ExecuteOptions options = {}) {
  Interpreter it(route, policy, services, obligations, std::move(options));
  it.start(std::move(trigger));
  return it.run();
}

}  // namespace lucon::runtime
