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

#include <regex>

#include "lucon/logic/reader.hpp"
#include "lucon/pdp/bench.hpp"
#include "lucon/pdp/pdp.hpp"
#include "lucon/policy/parser.hpp"
#include "support/kb_oracle.hpp"
#include "support/policy_gen.hpp"

namespace lucon::pdp {
namespace {

using logic::parse_term;

const char* kPolicy = R"(
flow_rule {
  id dontPublishRaw
  when service { endpoint "http[s]?://.+" } receives raw
  decide drop require log("Preventing data leak. ", message) otherwise error
}
)";

// Tests every rule on its own, with std::regex and one-sided matching.
DecisionResult brute_force(const policy::PolicyAst& ast,
                           const std::optional<std::string>& id,
                           const std::optional<std::string>& url,
                           const LabelSet& labels, const Term& message_ref) {
  DecisionResult out;
  for (const auto& r : ast.rules) {
    const policy::ServiceDecl* s = ast.find_service(r.target);
    bool targeted = (id && *id == s->id) ||
                    (url && std::regex_match(*url, std::regex(s->endpoint)));
    if (!targeted) continue;
    bool all = true;
    for (const auto& t : r.trigger_labels) {
      bool any = false;
      for (const auto& l : labels) {
        testing::Env env;
        if (testing::match_ground(t, l, env)) any = true;
      }
      all = all && any;
    }
    if (!all) continue;
    out.matched_rules.push_back(r.name);
    out.effect = policy::most_restrictive(out.effect, r.decision.effect);
    for (const auto& o : r.decision.obligations) {
      out.obligations.push_back(
          {logic::replace_atom(o.action, "message", message_ref), o.otherwise});
    }
  }
  return out;
}

TEST(Decide, RawIsDroppedAtHttpEndpoint) {
  auto cp = policy::compile(policy::parse_policy(kPolicy));
  LabelSet labels{Term::atom("raw")};
  DecisionResult r = decide(cp, {std::nullopt, std::string("https://sink"), labels});
  EXPECT_EQ(r.effect, Effect::drop);
  ASSERT_EQ(r.obligations.size(), 1u);
  EXPECT_EQ(r.obligations[0].action,
            parse_term(R"(log("Preventing data leak. ", message))"));
  EXPECT_EQ(r.obligations[0].otherwise, Effect::error);
  EXPECT_EQ(r.matched_rules, std::vector<std::string>{"dontPublishRaw"});
}

TEST(Decide, MessageReferenceIsBound) {
  auto cp = policy::compile(policy::parse_policy(kPolicy));
  LabelSet labels{Term::atom("raw")};
  Term ref = parse_term("message_ref(m7)");
  DecisionResult r =
      decide(cp, {std::nullopt, std::string("https://sink"), labels, ref});
  EXPECT_EQ(r.obligations[0].action,
            parse_term(R"(log("Preventing data leak. ", message_ref(m7)))"));
}

TEST(Decide, MergedLabelsAreAllowed) {
  auto cp = policy::compile(policy::parse_policy(kPolicy));
  LabelSet labels{Term::atom("temperature"), parse_term("merge(10)")};
  DecisionResult r = decide(cp, {std::nullopt, std::string("https://sink"), labels});
  EXPECT_EQ(r.effect, Effect::allow);
  EXPECT_TRUE(r.obligations.empty());
  EXPECT_TRUE(r.matched_rules.empty());
}

TEST(Decide, EmptyPolicyAllows) {
  auto cp = policy::compile(policy::PolicyAst{});
  LabelSet labels{Term::atom("raw")};
  EXPECT_EQ(decide(cp, {std::string("x"), std::string("https://x"), labels}).effect,
            Effect::allow);
  EXPECT_EQ(decide(cp, {std::string("x"), std::nullopt, labels}, {true}).effect,
            Effect::drop);
}

TEST(Decide, ServiceIdSelectsTarget) {
  auto cp = policy::compile(policy::parse_policy(R"(
    service { id merge endpoint "bean:merge" }
    flow_rule { id r when merge receives secret decide error }
  )"));
  LabelSet labels{Term::atom("secret")};
  EXPECT_EQ(decide(cp, {std::string("merge"), std::nullopt, labels}).effect,
            Effect::error);
  EXPECT_EQ(decide(cp, {std::string("other"), std::nullopt, labels}).effect,
            Effect::allow);
}

TEST(Decide, ConjunctiveAndParameterisedTriggers) {
  auto cp = policy::compile(policy::parse_policy(R"(
    service { id s endpoint ".*" }
    flow_rule { id both when s receives a, b decide drop }
    flow_rule { id cls when s receives classification(X) decide error }
  )"));
  LabelSet only_a{Term::atom("a")};
  LabelSet ab{Term::atom("a"), Term::atom("b")};
  LabelSet secret{parse_term("classification(top_secret)")};
  EXPECT_EQ(decide(cp, {std::string("s"), std::nullopt, only_a}).effect, Effect::allow);
  EXPECT_EQ(decide(cp, {std::string("s"), std::nullopt, ab}).effect, Effect::drop);
  EXPECT_EQ(decide(cp, {std::string("s"), std::nullopt, secret}).effect, Effect::error);
}

TEST(Decide, MostRestrictiveWinsAndObligationsKeepOrder) {
  auto cp = policy::compile(policy::parse_policy(R"(
    service { id s endpoint ".*" }
    flow_rule { id first when s receives x decide allow require a(1) }
    flow_rule { id second when s receives x decide error require b(2) otherwise drop }
    flow_rule { id third when s receives x decide drop require c(3) }
  )"));
  LabelSet x{Term::atom("x")};
  DecisionResult r = decide(cp, {std::string("s"), std::nullopt, x});
  EXPECT_EQ(r.effect, Effect::error);
  EXPECT_EQ(r.matched_rules, (std::vector<std::string>{"first", "second", "third"}));
  ASSERT_EQ(r.obligations.size(), 3u);
  EXPECT_EQ(r.obligations[1].otherwise, Effect::drop);
  EXPECT_EQ(r.obligations[2].action, parse_term("c(3)"));
}

TEST(Decide, RuleMatchedByIdAndUrlCountsOnce) {
  auto cp = policy::compile(policy::parse_policy(R"(
    service { id s endpoint "https://.+" }
    flow_rule { id r when s receives x decide drop require a }
  )"));
  LabelSet x{Term::atom("x")};
  DecisionResult r = decide(cp, {std::string("s"), std::string("https://q"), x});
  EXPECT_EQ(r.matched_rules.size(), 1u);
  EXPECT_EQ(r.obligations.size(), 1u);
}

LabelSet random_labels(std::mt19937& rng, const testing::PolicyGenOptions& o) {
  LabelSet out;
  int n = testing::pick(rng, 5);
  for (int i = 0; i < n; ++i) out.insert(testing::random_label(rng, o));
  return out;
}

TEST(DecideProperties, AgreesWithBruteForce) {
  std::mt19937 rng(31);
  testing::PolicyGenOptions o;
  for (int i = 0; i < 300; ++i) {
    auto ast = testing::random_policy(rng, o);
    auto cp = policy::compile(ast);
    for (int k = 0; k < 5; ++k) {
      LabelSet labels = random_labels(rng, o);
      std::optional<std::string> id;
      std::optional<std::string> url;
      if (testing::pick(rng, 2) == 0) id = "s" + std::to_string(testing::pick(rng, 4));
      if (testing::pick(rng, 3) != 0) {
        url = testing::url_pool()[testing::pick(rng, 5)];
      }
      Term ref = Term::compound("message_ref", {Term::integer(k)});
      DecisionResult got = decide(cp, {id, url, labels, ref});
      EXPECT_EQ(got, brute_force(ast, id, url, labels, ref))
          << policy::format_policy(ast) << labels.to_string();
    }
  }
}

TEST(DecideProperties, AddingLabelsNeverUnmatches) {
  std::mt19937 rng(37);
  testing::PolicyGenOptions o;
  for (int i = 0; i < 200; ++i) {
    auto cp = policy::compile(testing::random_policy(rng, o));
    LabelSet labels = random_labels(rng, o);
    std::optional<std::string> url = testing::url_pool()[testing::pick(rng, 5)];
    DecisionResult before = decide(cp, {std::nullopt, url, labels});
    LabelSet more = labels;
    more.insert(testing::random_label(rng, o));
    DecisionResult after = decide(cp, {std::nullopt, url, more});
    for (const auto& name : before.matched_rules) {
      EXPECT_NE(std::find(after.matched_rules.begin(), after.matched_rules.end(), name),
                after.matched_rules.end());
    }
    EXPECT_GE(static_cast<int>(after.effect), static_cast<int>(before.effect));
  }
}

TEST(DecideProperties, EffectFoldIsOrderIndependent) {
  const Effect all[] = {Effect::allow, Effect::drop, Effect::error};
  for (Effect a : all) {
    for (Effect b : all) {
      EXPECT_EQ(policy::most_restrictive(a, b), policy::most_restrictive(b, a));
      EXPECT_EQ(policy::most_restrictive(a, a), a);
      for (Effect c : all) {
        EXPECT_EQ(policy::most_restrictive(policy::most_restrictive(a, b), c),
                  policy::most_restrictive(a, policy::most_restrictive(b, c)));
      }
    }
  }
}

TEST(DecideProperties, Pure) {
  std::mt19937 rng(41);
  for (int i = 0; i < 50; ++i) {
    auto cp = policy::compile(testing::random_policy(rng));
    LabelSet labels{Term::atom("l0"), Term::atom("l1")};
    std::optional<std::string> url = "https://a.example/push";
    EXPECT_EQ(decide(cp, {std::nullopt, url, labels}),
              decide(cp, {std::nullopt, url, labels}));
  }
}

TEST(Bench, SmokeOneRuleOneLabel) {
  BenchOptions o;
  o.trials = 20;
  o.min_seconds = 0;
  auto rows = bench_decide({1}, {1}, o);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_GT(rows[0].mean_us, 0.0);
  EXPECT_TRUE(std::isfinite(rows[0].mean_us));
  EXPECT_GE(rows[0].p95_us, 0.0);
  EXPECT_EQ(bench_csv(rows).substr(0, 42), "n_rules,n_labels,mean_us,p95_us,mem_bytes\n");
}

TEST(Bench, LinearFit) {
  EXPECT_NEAR(linear_fit_r2({1, 2, 3, 4}, {2, 4, 6, 8}), 1.0, 1e-12);
  EXPECT_LT(linear_fit_r2({1, 2, 3, 4}, {1, 9, 2, 8}), 0.5);
}

}  // namespace
}  // namespace lucon::pdp
