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
#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result lucon(const std::string& args) {
  std::string cmd = std::string(LUCON_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string fixture(const std::string& name) {
  return std::string(LUCON_FIXTURE_DIR) + "/" + name;
}

std::string sample(const std::string& name) {
  return std::string(LUCON_SAMPLE_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Cli, CheckPrintsListing) {
  Result r = lucon("check " + fixture("sensor_messaging.route") + " " +
                   fixture("dont_publish_raw.lucon"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out, slurp(fixture("sensor_messaging.expected")));
}

TEST(Cli, CheckJsonAndValid) {
  Result r = lucon("check --format json " + fixture("sensor_messaging.route") +
                   " " + fixture("dont_publish_raw.lucon"));
  EXPECT_EQ(r.code, 1);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["counterexamples"][0]["rule"], "dontPublishRaw");

  std::string empty = ::testing::TempDir() + "/empty.lucon";
  std::ofstream(empty) << "// nothing\n";
  r = lucon("check " + fixture("sensor_messaging.route") + " " + empty);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "Route Sensor_Messaging is valid\n");
}

TEST(Cli, CompileEmptyPolicy) {
  std::string empty = ::testing::TempDir() + "/empty2.lucon";
  std::ofstream(empty) << "";
  Result r = lucon("compile " + empty);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "");
  r = lucon("compile --emit-clauses " + empty);
  EXPECT_NE(r.out.find("rule_applies(R, Id, Url) :-"), std::string::npos);
}

TEST(Cli, CompileRoute) {
  Result r = lucon("compile " + fixture("sensor_messaging.route"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("succ(aggr,mqueue).\n"), std::string::npos);
}

TEST(Cli, InputErrorsExitTwo) {
  EXPECT_EQ(lucon("check /no/such.route /no/such.lucon").code, 2);
  std::string bad = ::testing::TempDir() + "/bad.lucon";
  std::ofstream(bad) << "flow_rule { id }";
  EXPECT_EQ(lucon("compile " + bad).code, 2);
  EXPECT_EQ(lucon("frobnicate").code, 2);
  EXPECT_EQ(lucon("").code, 2);
}

TEST(Cli, RunWithStubs) {
  std::string audit = ::testing::TempDir() + "/audit.jsonl";
  Result r = lucon("run " + sample("sensor_messaging.route") + " --policy " +
                   sample("dont_publish_raw.lucon") + " --stubs " +
                   sample("sensor_stubs.json") + " --audit " + audit);
  EXPECT_EQ(r.code, 1);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["status"], "dropped");
  EXPECT_EQ(j["at_statement"], 6);
  ASSERT_EQ(j["deliveries"].size(), 1u);
  EXPECT_EQ(j["deliveries"][0]["service"], "log");
  std::istringstream lines(slurp(audit));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    auto ev = nlohmann::json::parse(line);
    EXPECT_TRUE(ev.contains("labels_before"));
    ++n;
  }
  EXPECT_EQ(n, 6);
}

TEST(Cli, RunPersistsGlobals) {
  std::string dir = ::testing::TempDir();
  std::string route = dir + "/counter.route";
  std::ofstream(route) << "route Counter {\n"
                          "  1: from(s)\n"
                          "  2: when env_prop(seen, yes) then goto 4 otherwise goto 3\n"
                          "  3: set-env-prop seen := yes -> end\n"
                          "  4: to(sink)\n"
                          "}\n";
  std::string stubs = dir + "/counter.json";
  std::ofstream(stubs) << R"({"services": {"sink": {"behavior": "sink"}}, "default": "identity"})";
  std::string policy = dir + "/counter.lucon";
  std::ofstream(policy) << "";
  std::string state = dir + "/state.json";
  std::string base = "run " + route + " --policy " + policy + " --stubs " +
                     stubs + " --env-state " + state;
  auto deliveries = [&](const std::string& extra) {
    return nlohmann::json::parse(lucon(base + extra).out)["deliveries"].size();
  };
  EXPECT_EQ(deliveries(" --env-reset"), 0u);
  EXPECT_EQ(deliveries(""), 1u);
  EXPECT_EQ(deliveries(" --env-reset"), 0u);
}

TEST(Cli, BenchCsv) {
  Result r = lucon("bench --rules 10,50,200 --labels 5 --trials 5 --min-seconds 0 --seed 3");
  EXPECT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "n_rules,n_labels,mean_us,p95_us,mem_bytes");
  std::vector<double> means;
  while (std::getline(lines, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    ASSERT_EQ(cols.size(), 5u);
    means.push_back(std::stod(cols[2]));
  }
  ASSERT_EQ(means.size(), 3u);
  EXPECT_LE(means[0], means[1]);
  EXPECT_LE(means[1], means[2]);
}

}  // namespace
