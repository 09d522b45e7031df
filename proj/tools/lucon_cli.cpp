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

// lucon: compile policies, check routes, run routes against stub services
// and benchmark the decision point.

#include <CLI11.hpp>

#include <fstream>
#include <future>
#include <iostream>
#include <mutex>
#include <sstream>

#include "json.hpp"
#include "lucon/bench/alloc_hooks.hpp"
#include "lucon/logic/reader.hpp"
#include "lucon/pdp/bench.hpp"
#include "lucon/policy/parser.hpp"
#include "lucon/route/parser.hpp"
#include "lucon/runtime/interpreter.hpp"
#include "lucon/verify/verifier.hpp"

namespace {

using namespace lucon;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kInputError = 2;

// Input problems that end the command with exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

policy::CompiledPolicy load_policy(const std::string& path) {
  std::string text = read_file(path);
  try {
    return policy::compile(policy::parse_policy(text));
  } catch (const Error& e) {
    throw InputError(path + ":" + e.what());
  }
}

route::Route load_route(const std::string& path) {
  std::string text = read_file(path);
  try {
    return route::parse_route(text);
  } catch (const Error& e) {
    throw InputError(path + ":" + e.what());
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

struct Globals {
  std::size_t depth_limit = logic::SolveLimits{}.depth;
  bool default_deny = false;

  pdp::DecideOptions decide() const {
    pdp::DecideOptions o;
    o.default_deny = default_deny;
    o.limits.depth = depth_limit;
    return o;
  }
};

// compile ----------------------------------------------------------------

struct CompileArgs {
  std::string input;
  std::string output;
  bool emit_clauses = false;
};

int cmd_compile(const CompileArgs& a) {
  std::string dump;
  if (ends_with(a.input, ".route")) {
    auto facts = verify::compile_route_facts(load_route(a.input));
    dump = logic::format_clauses(facts.clauses);
  } else {
    auto cp = load_policy(a.input);
    if (a.emit_clauses) {
      std::string helpers(policy::kPolicyHelpers);
      dump = helpers.substr(helpers.find_first_not_of('\n'));
    }
    dump += logic::format_clauses(cp.facts);
  }
  write_output(a.output, dump);
  return kOk;
}

// check ------------------------------------------------------------------

struct CheckArgs {
  std::string route;
  std::string policy;
  std::string format = "text";
  bool all_paths = false;
};

int cmd_check(const CheckArgs& a, const Globals& g) {
  auto r = load_route(a.route);
  auto cp = load_policy(a.policy);
  verify::VerifyOptions o;
  o.decide = g.decide();
  o.all_paths = a.all_paths;
  verify::Verdict v = verify::verify(r, cp, o);
  for (const auto& w : v.warnings) std::cerr << "warning: " << w << "\n";
  if (a.format == "json") {
    std::cout << verify::to_json(v, r.name).dump(2) << "\n";
  } else {
    std::cout << verify::render_verdict(v, r.name);
  }
  return v.valid() ? kOk : kViolation;
}

// run --------------------------------------------------------------------

logic::Term term_of(const json& v) {
  if (v.is_string()) return logic::parse_term(v.get<std::string>());
  if (v.is_number_integer()) return logic::Term::integer(v.get<std::int64_t>());
  if (v.is_boolean()) return logic::Term::boolean(v.get<bool>());
  throw InputError("unsupported value " + v.dump());
}

route::Props props_of(const json& obj) {
  route::Props out;
  if (obj.is_null()) return out;
  if (!obj.is_object()) throw InputError("props must be an object");
  for (const auto& [k, v] : obj.items()) out.insert_or_assign(k, term_of(v));
  return out;
}

json props_json(const route::Props& props) {
  json out = json::object();
  for (const auto& [k, v] : props) out[k] = v.to_string();
  return out;
}

// A message seen by a sink stub.
struct Delivery {
  std::string route_service;
  runtime::Exchange exchange;
};

class Deliveries {
 public:
  void add(std::string service, const runtime::Exchange& e) {
    std::lock_guard guard(mutex_);
    items_.push_back({std::move(service), e});
  }
  std::vector<Delivery> take() {
    std::lock_guard guard(mutex_);
    return std::move(items_);
  }

 private:
  std::mutex mutex_;
  std::vector<Delivery> items_;
};

runtime::Handler stub_handler(const std::string& name, const json& spec,
                              Deliveries& deliveries) {
  std::string behavior = spec.value("behavior", "identity");
  if (behavior == "identity" || behavior == "echo") {
    return runtime::ServiceRegistry::identity();
  }
  if (behavior == "sink") {
    return [name, &deliveries](const runtime::Exchange& in) {
      deliveries.add(name, in);
      return in;
    };
  }
  if (behavior == "constant") {
    std::string payload = spec.value("payload", "");
    return [payload](const runtime::Exchange& in) {
      return runtime::Exchange{payload, in.props};
    };
  }
  if (behavior == "transform") {
    std::string append = spec.value("append", "");
    route::Props set = props_of(spec.value("set", json::object()));
    std::vector<std::string> remove =
        spec.value("remove", std::vector<std::string>{});
    return [append, set, remove](const runtime::Exchange& in) {
      runtime::Exchange out = in;
      out.payload += append;
      for (const auto& [k, v] : set) out.props.insert_or_assign(k, v);
      for (const auto& k : remove) out.props.erase(k);
      return out;
    };
  }
  if (behavior == "fail") {
    std::string message = spec.value("message", "stub failure");
    return [message](const runtime::Exchange&) -> runtime::Exchange {
      throw std::runtime_error(message);
    };
  }
  throw InputError("service " + name + ": unknown behavior '" + behavior + "'");
}

struct Stubs {
  runtime::Trigger trigger;
  json services = json::object();
  std::optional<json> fallback;
  json obligations = json::object();
};

Stubs load_stubs(const std::string& path) {
  Stubs s;
  if (path.empty()) {
    s.fallback = json{{"behavior", "identity"}};
    return s;
  }
  json j;
  try {
    j = json::parse(read_file(path));
    if (j.contains("trigger")) {
      const json& t = j["trigger"];
      s.trigger.payload = t.value("payload", "");
      s.trigger.props = props_of(t.value("props", json::object()));
    }
    s.services = j.value("services", json::object());
    if (j.contains("default")) {
      const json& d = j["default"];
      s.fallback = d.is_string() ? json{{"behavior", d}} : d;
    }
    s.obligations = j.value("obligations", json::object());
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  } catch (const Error& e) {
    throw InputError(path + ": " + e.what());
  }
  return s;
}

runtime::ServiceRegistry registry_for(const route::Route& r, const Stubs& stubs,
                                      Deliveries& deliveries) {
  runtime::ServiceRegistry services;
  for (const auto& [name, spec] : stubs.services.items()) {
    services.add(name, stub_handler(name, spec, deliveries),
                 spec.value("serialized", false));
  }
  for (const auto& [n, s] : r.statements) {
    if (s.service.empty() || services.contains(s.service)) continue;
    if (!stubs.fallback) {
      throw InputError("route " + r.name + ": no stub for service '" +
                       s.service + "'");
    }
    services.add(s.service, stub_handler(s.service, *stubs.fallback, deliveries));
  }
  return services;
}

runtime::ObligationRegistry obligations_for(const Stubs& stubs) {
  runtime::ObligationRegistry out;
  for (const auto& [key, value] : stubs.obligations.items()) {
    auto slash = key.rfind('/');
    if (slash == std::string::npos) {
      throw InputError("obligation key '" + key + "' is not functor/arity");
    }
    std::string functor = key.substr(0, slash);
    std::size_t arity = std::stoul(key.substr(slash + 1));
    std::string mode = value.is_string() ? value.get<std::string>() : "";
    if (mode == "succeed") {
      out.add(functor, arity, [](const logic::Term& action, const runtime::Message& m) {
        std::cerr << "obligation " << action.to_string() << " for " << m.id << "\n";
        return true;
      });
    } else if (mode == "fail") {
      out.add(functor, arity, runtime::ObligationRegistry::fail());
    } else {
      throw InputError("obligation " + key + ": expected \"succeed\" or \"fail\"");
    }
  }
  return out;
}

struct RunArgs {
  std::vector<std::string> routes;
  std::string policy;
  std::string stubs;
  std::string audit;
  std::string env_state;
  bool env_reset = false;
};

using EnvState = std::map<std::string, route::Props>;

EnvState load_env_state(const std::string& path, bool reset) {
  EnvState out;
  if (path.empty() || reset) return out;
  std::ifstream in(path);
  if (!in) return out;  // first run
  try {
    json j = json::parse(in);
    for (const auto& [route_name, vars] : j.items()) out[route_name] = props_of(vars);
  } catch (const std::exception& e) {
    throw InputError(path + ": " + e.what());
  }
  return out;
}

int cmd_run(const RunArgs& a, const Globals& g) {
  auto cp = load_policy(a.policy);
  Stubs stubs = load_stubs(a.stubs);
  auto obligations = obligations_for(stubs);
  std::vector<route::Route> routes;
  for (const auto& p : a.routes) routes.push_back(load_route(p));

  EnvState state = load_env_state(a.env_state, a.env_reset);
  std::vector<std::unique_ptr<runtime::Env>> envs;
  std::vector<std::unique_ptr<Deliveries>> deliveries;
  std::vector<runtime::ServiceRegistry> registries;
  for (const auto& r : routes) {
    envs.push_back(std::make_unique<runtime::Env>());
    envs.back()->replace(state[r.name]);
    deliveries.push_back(std::make_unique<Deliveries>());
    registries.push_back(registry_for(r, stubs, *deliveries.back()));
  }

  std::vector<std::future<runtime::RunOutcome>> jobs;
  for (std::size_t i = 0; i < routes.size(); ++i) {
    runtime::ExecuteOptions o;
    o.decide = g.decide();
    o.env = envs[i].get();
    o.eval_limits.depth = g.depth_limit;
    jobs.push_back(std::async(std::launch::async, [&, i, o] {
      return runtime::execute(routes[i], cp, registries[i], obligations,
                              stubs.trigger, o);
    }));
  }

  std::string audit;
  int code = kOk;
  for (std::size_t i = 0; i < routes.size(); ++i) {
    runtime::RunOutcome out = jobs[i].get();
    json j = runtime::to_json(out);
    j["route"] = routes[i].name;
    j["deliveries"] = json::array();
    for (const auto& d : deliveries[i]->take()) {
      j["deliveries"].push_back({{"service", d.route_service},
                                 {"payload", d.exchange.payload},
                                 {"props", props_json(d.exchange.props)}});
    }
    std::cout << j.dump() << "\n";
    for (const auto& ev : out.audit) audit += runtime::to_json(ev).dump() + "\n";
    if (out.status != runtime::RunStatus::completed) code = kViolation;
    state[routes[i].name] = envs[i]->snapshot();
  }
  if (!a.audit.empty()) write_output(a.audit, audit);
  if (!a.env_state.empty()) {
    json j = json::object();
    for (const auto& [name, vars] : state) j[name] = props_json(vars);
    write_output(a.env_state, j.dump(2) + "\n");
  }
  return code;
}

// bench ------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::size_t> rules{100, 500, 1000, 5000};
  std::vector<std::size_t> labels{50};
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  double min_seconds = 0.05;
  std::string output;
};

int cmd_bench(const BenchArgs& a) {
  pdp::BenchOptions o;
  o.trials = a.trials;
  o.seed = a.seed;
  o.min_seconds = a.min_seconds;
  o.max_trials = std::max(o.max_trials, a.trials);
  write_output(a.output, pdp::bench_csv(pdp::bench_decide(a.rules, a.labels, o)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lucon: data flow policies for message routes"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--depth-limit", g.depth_limit,
                 "Maximum derivation depth for policy queries")
      ->check(CLI::PositiveNumber);

  CompileArgs ca;
  auto* compile = app.add_subcommand("compile", "Print the clauses of a policy or route");
  compile->add_option("input", ca.input, "Policy (.lucon) or route (.route) file")->required();
  compile->add_option("-o,--output", ca.output, "Write to a file instead of stdout");
  compile->add_flag("--emit-clauses", ca.emit_clauses,
                    "Include the helper clauses shared by every policy");

  CheckArgs ka;
  auto* check = app.add_subcommand("check", "Verify a route against a policy");
  check->add_option("route", ka.route, "Route file")->required();
  check->add_option("policy", ka.policy, "Policy file")->required();
  check->add_option("--format", ka.format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));
  check->add_flag("--all-paths", ka.all_paths, "Report every violating path");
  check->add_flag("--default-deny", g.default_deny, "Drop flows no rule matches");

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Execute routes with stub services");
  run->add_option("routes", ra.routes, "Route files, run concurrently")->required();
  run->add_option("--policy", ra.policy, "Policy file")->required();
  run->add_option("--stubs", ra.stubs, "Stub service manifest (JSON)");
  run->add_option("--audit", ra.audit, "Write audit records (JSON lines)");
  run->add_option("--env-state", ra.env_state, "Load and save global variables");
  run->add_flag("--env-reset", ra.env_reset, "Start with empty global variables");
  run->add_flag("--default-deny", g.default_deny, "Drop flows no rule matches");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Time policy decisions (CSV)");
  bench->add_option("--rules", ba.rules, "Rule counts")->delimiter(',');
  bench->add_option("--labels", ba.labels, "Label counts")->delimiter(',');
  bench->add_option("--trials", ba.trials, "Minimum timed decisions per row");
  bench->add_option("--min-seconds", ba.min_seconds, "Minimum sampling time per row");
  bench->add_option("--seed", ba.seed, "Label shuffle seed");
  bench->add_option("-o,--output", ba.output, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*compile) return cmd_compile(ca);
    if (*check) return cmd_check(ka, g);
    if (*run) return cmd_run(ra, g);
    if (*bench) return cmd_bench(ba);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
