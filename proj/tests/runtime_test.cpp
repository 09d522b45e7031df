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

#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "lucon/logic/reader.hpp"
#include "lucon/policy/parser.hpp"
#include "lucon/route/parser.hpp"
#include "lucon/runtime/demo.hpp"
#include "lucon/runtime/interpreter.hpp"

namespace lucon::runtime {
namespace {

using logic::parse_term;

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(LUCON_FIXTURE_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LabelSet labels(std::initializer_list<const char*> ls) {
  LabelSet out;
  for (const char* l : ls) out.insert(parse_term(l));
  return out;
}

policy::CompiledPolicy compile_text(std::string_view text) {
  return policy::compile(policy::parse_policy(text));
}

// Handlers that count their invocations.
struct Probe {
  std::map<std::string, std::shared_ptr<std::atomic<int>>> calls;

  Handler counting(const std::string& name, Handler inner = ServiceRegistry::identity()) {
    auto c = std::make_shared<std::atomic<int>>(0);
    calls[name] = c;
    return [c, inner](const Exchange& in) {
      ++*c;
      return inner(in);
    };
  }
  int count(const std::string& name) const { return *calls.at(name); }
};

ExecuteOptions with_env(Env* env) {
  ExecuteOptions o;
  o.env = env;
  return o;
}

ServiceRegistry identity_services(std::initializer_list<const char*> names) {
  ServiceRegistry r;
  for (const char* n : names) r.add(n, ServiceRegistry::identity());
  return r;
}

const char* kRulePolicy = R"(
service { id s endpoint "src://.*" creates_label raw, temperature }
service { id t endpoint "https://t\\.example/.*" removes_label raw creates_label merge(10) }
service { id b endpoint "bean://b" removes_label temperature creates_label seen }
)";

// One test per operational rule: run up to the statement under test, step
// once, and compare the post-state with what the rule prescribes.

TEST(Semantics, From) {
  Route r = route::parse_route(R"(route R {
    service s = "src://feed"
    1: from(s)
    2: to(t)
  })");
  auto cp = compile_text(kRulePolicy);
  ServiceRegistry services;
  services.add("s", [](const Exchange& in) {
    Exchange out = in;
    out.payload = "read:" + in.payload;
    out.props.insert_or_assign("unit", Term::atom("celsius"));
    return out;
  });
  services.add("t", ServiceRegistry::identity());
  Env env;
  env.set("g", Term::integer(1));
  Interpreter it(r, cp, services, ObligationRegistry{}, with_env(&env));
  it.start({"21", {}});
  EXPECT_EQ(*it.pc(), 1);
  const AuditEvent& ev = it.step();
  ASSERT_EQ(it.live_messages().size(), 1u);
  const Message& m = it.live_messages().begin()->second;
  EXPECT_EQ(ev.message_id, m.id);
  EXPECT_EQ(it.taints().at(m.id), labels({"raw", "temperature"}));
  EXPECT_EQ(m.payload, "read:21");
  EXPECT_EQ(m.props, (Props{{"unit", Term::atom("celsius")}}));
  EXPECT_EQ(it.env(), (Props{{"g", Term::integer(1)}}));
  EXPECT_EQ(*it.pc(), 2);
  EXPECT_EQ(it.outcome().pdp_calls, 0u);
}

TEST(Semantics, To) {
  Route r = route::parse_route(R"(route R {
    service s = "src://feed"
    service t = "https://t.example/in"
    1: from(s)
    2: to(t)
    3: to(u)
  })");
  auto cp = compile_text(kRulePolicy);
  ServiceRegistry services = identity_services({"s", "u"});
  services.add("t", [](const Exchange& in) {
    Exchange out = in;
    out.payload += "!";
    return out;
  });
  Interpreter it(r, cp, services, ObligationRegistry{});
  it.start({"p", {}});
  it.step();
  std::string id = it.current()->id;
  const AuditEvent& ev = it.step();
  EXPECT_EQ(ev.labels_before, labels({"raw", "temperature"}));
  EXPECT_EQ(it.taints().at(id), labels({"temperature", "merge(10)"}));
  EXPECT_EQ(it.current()->payload, "p!");
  EXPECT_TRUE(it.env().empty());
  EXPECT_EQ(*it.pc(), 3);
  EXPECT_EQ(ev.decision, Effect::allow);
  EXPECT_EQ(it.outcome().pdp_calls, 1u);
}

TEST(Semantics, Bean) {
  Route r = route::parse_route(R"(route R {
    service s = "src://feed"
    1: from(s)
    2: bean(b)
    3: to(u)
  })");
  auto cp = compile_text(kRulePolicy);
  ServiceRegistry services = identity_services({"s", "u"});
  services.add("b", [](const Exchange& in) {
    Exchange out = in;
    out.props.insert_or_assign("beaned", Term::boolean(true));
    return out;
  });
  Interpreter it(r, cp, services, ObligationRegistry{});
  it.start({"p", {}});
  it.step();
  std::string id = it.current()->id;
  it.step();
  EXPECT_EQ(it.taints().at(id), labels({"raw", "seen"}));
  EXPECT_EQ(it.current()->props, (Props{{"beaned", Term::boolean(true)}}));
  EXPECT_EQ(*it.pc(), 3);
  EXPECT_EQ(it.outcome().pdp_calls, 1u);
}

class ChoiceRule : public ::testing::TestWithParam<bool> {};

TEST_P(ChoiceRule, FollowsCondition) {
  const bool flag = GetParam();
  Route r = route::parse_route(R"(route R {
    1: from(s)
    2: when env_prop(mode, fast) then goto 3 otherwise goto 4
    3: to(a) -> end
    4: to(b)
  })");
  auto cp = compile_text(kRulePolicy);
  Env env;
  env.set("mode", Term::atom(flag ? "fast" : "slow"));
  ServiceRegistry services = identity_services({"s", "a", "b"});
  Interpreter it(r, cp, services, ObligationRegistry{}, with_env(&env));
  it.start({"p", {{"k", Term::integer(1)}}});
  it.step();
  auto before_taint = it.taints();
  Props before_props = it.current()->props;
  it.step();
  EXPECT_EQ(*it.pc(), flag ? 3 : 4);
  EXPECT_EQ(it.taints(), before_taint);
  EXPECT_EQ(it.current()->props, before_props);
  EXPECT_EQ(it.env().at("mode"), Term::atom(flag ? "fast" : "slow"));
  EXPECT_EQ(it.outcome().pdp_calls, 0u);
}

INSTANTIATE_TEST_SUITE_P(Semantics, ChoiceRule, ::testing::Bool(),
                         [](const auto& info) {
                           return info.param ? "ChoiceTrue" : "ChoiceFalse";
                         });

TEST(Semantics, Split) {
  Route r = route::parse_route(R"(route R {
    service s = "src://feed"
    1: from(s)
    2: split parts -> 3, 4, 5
    3: to(a) -> 6
    4: to(b) -> 6
    5: to(c) -> 6
    6: aggregate concat
  })");
  auto cp = compile_text(kRulePolicy);
  ServiceRegistry services = identity_services({"s", "a", "b", "c"});
  Interpreter it(r, cp, services, ObligationRegistry{});
  it.start({"p", {{"k", Term::integer(1)}}});
  it.step();
  std::string id = it.current()->id;
  it.step();
  auto taints = it.taints();
  ASSERT_EQ(taints.size(), 3u);
  EXPECT_EQ(taints.count(id), 0u);
  for (const auto& [copy, ls] : taints) {
    EXPECT_EQ(ls, labels({"raw", "temperature"}));
    EXPECT_EQ(it.live_messages().at(copy).props,
              (Props{{"k", Term::integer(1)}}));
    EXPECT_NE(copy, id);
  }
  EXPECT_EQ(*it.pc(), 3);
  EXPECT_EQ(it.current()->id, id + ".1");
}

TEST(Semantics, Aggregate) {
  Route r = route::parse_route(R"(route R {
    service s = "src://feed"
    service t = "https://t.example/in"
    1: from(s)
    2: split parts -> 3, 4
    3: to(t) -> 5
    4: bean(b) -> 5
    5: aggregate concat
    6: to(z)
  })");
  auto cp = compile_text(kRulePolicy);
  ServiceRegistry services = identity_services({"s", "t", "b", "z"});
  Interpreter it(r, cp, services, ObligationRegistry{});
  it.start({"p", {}});
  for (int i = 0; i < 4; ++i) it.step();
  ASSERT_EQ(*it.pc(), 5);
  auto parts = it.taints();
  ASSERT_EQ(parts.size(), 2u);
  LabelSet expected;
  for (const auto& [id, ls] : parts) expected |= ls;
  const AuditEvent& ev = it.step();
  ASSERT_EQ(it.taints().size(), 1u);
  EXPECT_EQ(it.taints().begin()->second, expected);
  EXPECT_EQ(expected, labels({"temperature", "merge(10)", "raw", "seen"}));
  EXPECT_EQ(it.current()->payload, "pp");
  EXPECT_EQ(ev.labels_after, expected);
  EXPECT_EQ(*it.pc(), 6);
}

TEST(Semantics, SetMsgProp) {
  Route r = route::parse_route(R"(route R {
    service s = "src://feed"
    1: from(s)
    2: set-msg-prop level := 3
    3: set-msg-prop copy := msg_prop(level)
    4: to(z)
  })");
  auto cp = compile_text(kRulePolicy);
  ServiceRegistry services = identity_services({"s", "z"});
  Env env;
  env.set("g", Term::integer(0));
  Interpreter it(r, cp, services, ObligationRegistry{}, with_env(&env));
  it.start({"p", {{"k", Term::atom("v")}}});
  it.step();
  auto taints = it.taints();
  it.step();
  EXPECT_EQ(it.current()->props,
            (Props{{"k", Term::atom("v")}, {"level", Term::integer(3)}}));
  it.step();
  EXPECT_EQ(it.current()->props.at("copy"), Term::integer(3));
  EXPECT_EQ(it.taints(), taints);
  EXPECT_EQ(it.env(), (Props{{"g", Term::integer(0)}}));
  EXPECT_EQ(*it.pc(), 4);
}

TEST(Semantics, SetEnvProp) {
  Route r = route::parse_route(R"(route R {
    service s = "src://feed"
    1: from(s)
    2: set-env-prop last := f(msg)
    3: to(z)
  })");
  auto cp = compile_text(kRulePolicy);
  ServiceRegistry services = identity_services({"s", "z"});
  Interpreter it(r, cp, services, ObligationRegistry{});
  it.start({"p", {}});
  it.step();
  auto taints = it.taints();
  Props props = it.current()->props;
  it.step();
  EXPECT_EQ(it.env(), (Props{{"last", parse_term("f(msg)")}}));
  EXPECT_EQ(it.taints(), taints);
  EXPECT_EQ(it.current()->props, props);
  EXPECT_EQ(*it.pc(), 3);
}

TEST(Runtime, LabelFigureChain) {
  Route r = route::parse_route(R"(route Chain {
    service src = "mqtt://plant/temperature"
    service A = "https://a.example/in"
    service B = "https://b.example/in"
    service C = "https://c.example/in"
    1: from(src)
    2: to(A)
    3: to(B)
    4: to(C)
  })");
  auto cp = compile_text(R"(
    service { id src endpoint "mqtt://.+" creates_label raw, temperature }
    service { id 'A' endpoint "https://a\\.example/.*" }
    service { id 'B' endpoint "https://b\\.example/.*"
              removes_label raw creates_label merge(10) }
  )");
  ServiceRegistry services = identity_services({"src", "A", "B", "C"});
  RunOutcome o = execute(r, cp, services, {}, {});
  ASSERT_EQ(o.status, RunStatus::completed);
  ASSERT_EQ(o.audit.size(), 4u);
  EXPECT_EQ(o.audit[1].labels_before, labels({"raw", "temperature"}));
  EXPECT_EQ(o.audit[1].labels_after, labels({"raw", "temperature"}));
  EXPECT_EQ(o.audit[3].labels_before, labels({"temperature", "merge(10)"}));
  EXPECT_EQ(o.final_messages.at(0).labels, labels({"temperature", "merge(10)"}));
}

TEST(Runtime, EmptyPolicyCompletesUnlabelled) {
  Route r = route::parse_route("route R { 1: from(s) 2: to(t) }");
  auto cp = compile_text("");
  RunOutcome o = execute(r, cp, identity_services({"s", "t"}), {}, {"x", {}});
  EXPECT_EQ(o.status, RunStatus::completed);
  ASSERT_EQ(o.final_messages.size(), 1u);
  EXPECT_TRUE(o.final_messages[0].labels.empty());
  EXPECT_EQ(o.final_messages[0].payload, "x");
}

TEST(Runtime, SensorRouteIsDroppedAtQueue) {
  Route r = route::parse_route(slurp("sensor_messaging.route"));
  auto cp = compile_text(slurp("dont_publish_raw.lucon"));
  Probe probe;
  ServiceRegistry services;
  for (const char* n : {"sensor", "log", "merge", "Outbound_Queue"}) {
    services.add(n, probe.counting(n));
  }
  ObligationRegistry obligations;
  obligations.add("log", 2, ObligationRegistry::succeed());
  RunOutcome o = execute(r, cp, services, obligations, {"21.5", {}});
  EXPECT_EQ(o.status, RunStatus::dropped);
  EXPECT_EQ(o.at_statement, 6);
  EXPECT_EQ(o.rule, "dontPublishRaw");
  EXPECT_EQ(probe.count("Outbound_Queue"), 0);
  EXPECT_EQ(probe.count("log"), 1);
  EXPECT_EQ(probe.count("merge"), 1);
  EXPECT_TRUE(o.final_messages.empty());
  EXPECT_EQ(o.audit.back().decision, Effect::drop);
  EXPECT_EQ(o.audit.back().labels_before, labels({"raw"}));
}

TEST(Runtime, ObligationFailureAppliesOtherwise) {
  Route r = route::parse_route(slurp("sensor_messaging.route"));
  auto cp = compile_text(slurp("dont_publish_raw.lucon"));
  auto services = identity_services({"sensor", "log", "merge", "Outbound_Queue"});

  ObligationRegistry failing;
  failing.add("log", 2, ObligationRegistry::fail());
  RunOutcome o = execute(r, cp, services, failing, {});
  EXPECT_EQ(o.status, RunStatus::errored);
  EXPECT_EQ(o.at_statement, 6);
  EXPECT_EQ(o.rule, "dontPublishRaw");

  // Unregistered actions fail as well.
  o = execute(r, cp, services, ObligationRegistry{}, {});
  EXPECT_EQ(o.status, RunStatus::errored);

  ObligationRegistry ok;
  std::vector<std::string> seen;
  ok.add("log", 2, [&seen](const Term& action, const Message& m) {
    seen.push_back(action.arg(1).str_value());
    EXPECT_EQ(action.arg(1).str_value(), m.id);
    return true;
  });
  o = execute(r, cp, services, ok, {});
  EXPECT_EQ(o.status, RunStatus::dropped);
  EXPECT_EQ(seen.size(), 1u);
}

TEST(Runtime, ObligationOtherwiseCanBeAnyEffect) {
  Route r = route::parse_route(R"(route R {
    service out = "https://x.example/"
    1: from(s)
    2: to(out)
  })");
  ObligationRegistry failing;
  failing.add("notify", 1, ObligationRegistry::fail());
  for (auto [otherwise, expected] :
       std::vector<std::pair<std::string, RunStatus>>{
           {"allow", RunStatus::completed},
           {"drop", RunStatus::dropped},
           {"error", RunStatus::errored}}) {
    auto cp = compile_text(
        "flow_rule { id r when service { endpoint \"https://.*\" } receives "
        "l decide allow require notify(message) otherwise " + otherwise +
        " }\nservice { id s endpoint \"s://\" creates_label l }");
    RunOutcome o = execute(r, cp, identity_services({"s", "out"}), failing, {});
    EXPECT_EQ(o.status, expected) << otherwise;
  }
}

TEST(Runtime, ImplicitLeakGoesUnnoticed) {
  for (bool tainted : {true, false}) {
    RunOutcome o = taint_permissiveness_demo(tainted);
    ASSERT_EQ(o.status, RunStatus::completed) << o.reason;
    ASSERT_EQ(o.final_messages.size(), 1u);
    const Message& m = o.final_messages[0];
    EXPECT_TRUE(m.labels.empty());
    EXPECT_EQ(m.props.at("public"), Term::integer(tainted ? 1 : 0));
    EXPECT_EQ(m.props.count("tainted"), 0u);
    for (const auto& ev : o.audit) {
      if (ev.decision) {
        EXPECT_EQ(*ev.decision, Effect::allow);
        EXPECT_TRUE(ev.rules.empty());
      }
    }
    // The secret was present: the source labelled the message.
    EXPECT_EQ(o.audit.front().labels_after, labels({"secret"}));
  }
}

TEST(Runtime, FailuresBeforeAndDuringExecution) {
  Route r = route::parse_route(R"(route R {
    1: from(s)
    2: set-msg-prop v := msg_prop(missing)
    3: to(t)
  })");
  auto cp = compile_text("");
  EXPECT_THROW(execute(r, cp, identity_services({"s"}), {}, {}),
               ValidationError);
  RunOutcome o = execute(r, cp, identity_services({"s", "t"}), {}, {});
  EXPECT_EQ(o.status, RunStatus::errored);
  EXPECT_EQ(o.at_statement, 2);

  Route r2 = route::parse_route("route R { 1: from(s) 2: to(t) 3: to(u) }");
  ServiceRegistry services = identity_services({"s", "u"});
  services.add("t", [](const Exchange&) -> Exchange {
    throw std::runtime_error("boom");
  });
  o = execute(r2, cp, services, {}, {});
  EXPECT_EQ(o.status, RunStatus::errored);
  EXPECT_EQ(o.at_statement, 2);
  EXPECT_NE(o.reason.find("boom"), std::string::npos);
}

TEST(Runtime, EnvPersistsAcrossExecutions) {
  Route r = route::parse_route(R"(route R {
    1: from(s)
    2: when env_prop(seen, yes) then goto 4 otherwise goto 3
    3: set-env-prop seen := yes -> end
    4: to(again)
  })");
  auto cp = compile_text("");
  Probe probe;
  ServiceRegistry services = identity_services({"s"});
  services.add("again", probe.counting("again"));
  Env env;
  execute(r, cp, services, {}, {}, with_env(&env));
  EXPECT_EQ(probe.count("again"), 0);
  execute(r, cp, services, {}, {}, with_env(&env));
  EXPECT_EQ(probe.count("again"), 1);
  env.clear();
  execute(r, cp, services, {}, {}, with_env(&env));
  EXPECT_EQ(probe.count("again"), 1);
}

TEST(Runtime, DroppedBranchLeavesTheOthers) {
  Route r = route::parse_route(R"(route R {
    service pub = "https://pub.example/"
    1: from(s)
    2: split p -> 3, 4
    3: to(pub) -> 5
    4: bean(clean) -> 5
    5: aggregate j
    6: to(sink)
  })");
  auto cp = compile_text(R"(
    service { id s endpoint "s://" creates_label l }
    service { id clean endpoint "c://" removes_label l creates_label ok }
    flow_rule { id r when service { endpoint "https://.*" } receives l decide drop }
  )");
  RunOutcome o = execute(r, cp, identity_services({"s", "pub", "clean", "sink"}), {}, {});
  EXPECT_EQ(o.status, RunStatus::dropped);
  EXPECT_EQ(o.at_statement, 3);
  ASSERT_EQ(o.final_messages.size(), 1u);
  EXPECT_EQ(o.final_messages[0].labels, labels({"ok"}));
}

TEST(Runtime, AllBranchesDroppedRemovesMessage) {
  Route r = route::parse_route(R"(route R {
    service pub = "https://pub.example/"
    1: from(s)
    2: split p -> 3, 5
    3: to(pub) -> 5
    5: aggregate j
    6: to(sink)
  })");
  auto cp = compile_text(R"(
    service { id s endpoint "s://" creates_label l }
    flow_rule { id r when service { endpoint "https://.*" } receives l decide drop }
  )");
  Probe probe;
  ServiceRegistry services = identity_services({"s", "pub"});
  services.add("sink", probe.counting("sink"));
  RunOutcome o = execute(r, cp, services, {}, {"x", {}});
  EXPECT_EQ(o.status, RunStatus::dropped);
  // The empty branch still reaches the aggregate.
  EXPECT_EQ(probe.count("sink"), 1);
  ASSERT_EQ(o.final_messages.size(), 1u);
  EXPECT_EQ(o.final_messages[0].payload, "x");
}

// Random split/aggregate blocks with per-branch transfers: the aggregated
// labels equal the union of each branch's transfer applied to the input.
TEST(RuntimeProperty, SplitAggregateMatchesSetAlgebra) {
  std::mt19937 rng(11);
  const std::vector<std::string> pool = {"a", "b", "c", "d", "e"};
  auto some = [&](int max) {
    std::vector<std::string> out;
    for (const auto& l : pool) {
      if (static_cast<int>(rng() % 5) < max) out.push_back(l);
    }
    return out;
  };
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
  };
  for (int iter = 0; iter < 200; ++iter) {
    int k = 1 + static_cast<int>(rng() % 4);
    std::string route_text = "route R {\n 1: from(src)\n 2: split p -> ";
    std::string policy_text;
    auto init = some(3);
    if (!init.empty()) {
      policy_text += "service { id src endpoint \"x://\" creates_label " +
                     join(init) + " }\n";
    }
    LabelSet before;
    for (const auto& l : init) before.insert(Term::atom(l));
    LabelSet expected;
    std::string body;
    for (int i = 0; i < k; ++i) {
      std::string svc = "b" + std::to_string(i);
      route_text += (i ? ", " : "") + std::to_string(10 + i);
      body += " " + std::to_string(10 + i) + ": bean(" + svc + ") -> 50\n";
      auto rm = some(2);
      auto cr = some(1);
      LabelSet out;
      for (const auto& l : before) {
        if (std::find(rm.begin(), rm.end(), l.name()) == rm.end()) out.insert(l);
      }
      for (const auto& l : cr) {
        if (std::find(rm.begin(), rm.end(), l) == rm.end()) out.insert(Term::atom(l));
      }
      // Labels created and removed by one service are rejected by the
      // validator, so drop the overlap from the creates list.
      std::vector<std::string> cr_ok;
      for (const auto& l : cr) {
        if (std::find(rm.begin(), rm.end(), l) == rm.end()) cr_ok.push_back(l);
      }
      std::string decl = "service { id " + svc + " endpoint \"bean://\"";
      if (!rm.empty()) decl += " removes_label " + join(rm);
      if (!cr_ok.empty()) decl += " creates_label " + join(cr_ok);
      policy_text += decl + " }\n";
      expected |= out;
    }
    route_text += "\n" + body + " 50: aggregate j\n}\n";
    Route r = route::parse_route(route_text);
    auto cp = compile_text(policy_text);
    ServiceRegistry services = identity_services({"src"});
    for (int i = 0; i < k; ++i) services.add("b" + std::to_string(i), ServiceRegistry::identity());
    RunOutcome o = execute(r, cp, services, {}, {});
    ASSERT_EQ(o.status, RunStatus::completed);
    ASSERT_EQ(o.final_messages.size(), 1u);
    EXPECT_EQ(o.final_messages[0].labels, expected) << route_text << policy_text;
    if (policy_text.find("removes_label") == std::string::npos &&
        policy_text.find("creates_label", policy_text.find("service { id b")) ==
            std::string::npos) {
      EXPECT_EQ(o.final_messages[0].labels, before);
    }
  }
}

// Random straight-line routes of assignments and services without label
// removal: labels never shrink, assignments never touch labels, and the
// PDP is asked exactly once per service statement.
TEST(RuntimeProperty, MonotonicityAndEnforcementPlacement) {
  std::mt19937 rng(5);
  auto cp = compile_text(R"(
    service { id src endpoint "x://" creates_label a }
    service { id s1 endpoint "y://" creates_label b }
    service { id s2 endpoint "z://" creates_label c(1) }
    flow_rule { id watch when s3 receives zzz decide drop }
    service { id s3 endpoint "w://" }
  )");
  for (int iter = 0; iter < 200; ++iter) {
    std::string text = "route R {\n 1: from(src)\n";
    int n = 2 + static_cast<int>(rng() % 8);
    int service_stmts = 0;
    for (int i = 2; i <= n; ++i) {
      switch (rng() % 5) {
        case 0: text += " " + std::to_string(i) + ": set-msg-prop k" + std::to_string(i) + " := " + std::to_string(i) + "\n"; break;
        case 1: text += " " + std::to_string(i) + ": set-env-prop e" + std::to_string(i) + " := v\n"; break;
        case 2: text += " " + std::to_string(i) + ": bean(s" + std::to_string(1 + rng() % 3) + ")\n"; ++service_stmts; break;
        default: text += " " + std::to_string(i) + ": to(s" + std::to_string(1 + rng() % 3) + ")\n"; ++service_stmts; break;
      }
    }
    text += "}\n";
    Route r = route::parse_route(text);
    RunOutcome o = execute(r, cp, identity_services({"src", "s1", "s2", "s3"}), {}, {});
    ASSERT_EQ(o.status, RunStatus::completed) << text;
    EXPECT_EQ(o.pdp_calls, static_cast<std::size_t>(service_stmts));
    std::size_t decided = 0;
    for (std::size_t i = 0; i < o.audit.size(); ++i) {
      const AuditEvent& ev = o.audit[i];
      EXPECT_TRUE(ev.labels_before.includes(i == 0 ? LabelSet{} : o.audit[i - 1].labels_after));
      EXPECT_TRUE(ev.labels_after.includes(ev.labels_before));
      if (ev.kind == StmtKind::set_msg_prop || ev.kind == StmtKind::set_env_prop) {
        EXPECT_EQ(ev.labels_after, ev.labels_before);
      }
      if (ev.decision) ++decided;
      EXPECT_EQ(ev.decision.has_value(), ev.kind == StmtKind::to || ev.kind == StmtKind::bean);
    }
    EXPECT_EQ(decided, o.pdp_calls);
  }
}

TEST(Runtime, ConcurrentExecutions) {
  Route r = route::parse_route(slurp("sensor_messaging.route"));
  auto cp = compile_text(slurp("dont_publish_raw.lucon"));
  ServiceRegistry services;
  std::atomic<int> serial_active{0};
  std::atomic<bool> overlap{false};
  services.add("sensor", ServiceRegistry::identity());
  services.add("merge", ServiceRegistry::identity());
  services.add("Outbound_Queue", ServiceRegistry::identity());
  services.add("log", [&](const Exchange& in) {
    if (++serial_active > 1) overlap = true;
    std::this_thread::yield();
    --serial_active;
    return in;
  }, true);
  ObligationRegistry obligations;
  obligations.add("log", 2, ObligationRegistry::succeed());
  std::vector<std::thread> pool;
  std::atomic<int> dropped{0};
  for (int i = 0; i < 8; ++i) {
    pool.emplace_back([&] {
      for (int j = 0; j < 50; ++j) {
        if (execute(r, cp, services, obligations, {}).status == RunStatus::dropped) {
          ++dropped;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  EXPECT_EQ(dropped, 400);
  EXPECT_FALSE(overlap);
}

TEST(Runtime, AuditJson) {
  Route r = route::parse_route(slurp("sensor_messaging.route"));
  auto cp = compile_text(slurp("dont_publish_raw.lucon"));
  ObligationRegistry ok;
  ok.add("log", 2, ObligationRegistry::succeed());
  RunOutcome o = execute(r, cp, identity_services({"sensor", "log", "merge", "Outbound_Queue"}), ok, {});
  auto j = to_json(o.audit.back());
  EXPECT_EQ(j["statement"], 6);
  EXPECT_EQ(j["decision"], "drop");
  EXPECT_EQ(j["labels_before"], nlohmann::json::array({"raw"}));
  EXPECT_EQ(j["rules"], nlohmann::json::array({"dontPublishRaw"}));
  auto oj = to_json(o);
  EXPECT_EQ(oj["status"], "dropped");
  EXPECT_EQ(oj["rule"], "dontPublishRaw");
}

}  // namespace
}  // namespace lucon::runtime
