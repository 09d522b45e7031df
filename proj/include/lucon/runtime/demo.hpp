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

#include <string_view>

#include "lucon/policy/parser.hpp"
#include "lucon/route/parser.hpp"
#include "lucon/runtime/interpreter.hpp"

namespace lucon::runtime {

// An implicit flow: `public` ends up equal to `tainted` through control
// flow only. The secret field itself is stripped before the sink, so the
// message reaching the sink carries no labels.
inline constexpr std::string_view kImplicitLeakRoute = R"(route Implicit_Leak {
  service secret_source = "vault://secrets/flag"
  service public_sink = "https://public.example/sink"

  1: from(secret_source)
  2: set-msg-prop public := 1
  3: set-msg-prop tmp := 0
  4: when msg_prop(tainted, true) then goto 5 otherwise goto 6
  5: set-msg-prop tmp := 1
  6: when msg_prop(tmp, 1) then goto 8 otherwise goto 7
  7: set-msg-prop public := 0
  8: bean(strip_secret)
  9: to(public_sink)
}
)";

inline constexpr std::string_view kImplicitLeakPolicy = R"(
service {
  id secret_source
  endpoint "vault://.+"
  creates_label secret
}

service {
  id strip_secret
  endpoint "internal://strip"
  removes_label secret
}

flow_rule {
  id noSecretsInPublic
  when service { endpoint "https://public\\..+" } receives secret
  decide drop
}
)";

/// Runs the implicit-leak program with the secret bit set to `tainted`.
inline RunOutcome taint_permissiveness_demo(const Route& program, bool tainted) {
  static const policy::CompiledPolicy cp =
      policy::compile(policy::parse_policy(kImplicitLeakPolicy));
  ServiceRegistry services;
  services.add("secret_source", ServiceRegistry::identity());
  services.add("strip_secret", [](const Exchange& in) {
    Exchange out = in;
    out.props.erase("tainted");
    return out;
  });
  services.add("public_sink", ServiceRegistry::identity());
  ObligationRegistry obligations;
  Trigger trigger{"", {{"tainted", Term::boolean(tainted)}}};
  return execute(program, cp, services, obligations, std::move(trigger));
}

inline RunOutcome taint_permissiveness_demo(bool tainted) {
  static const Route program = route::parse_route(kImplicitLeakRoute);
  return taint_permissiveness_demo(program, tainted);
}

}  // namespace lucon::runtime
