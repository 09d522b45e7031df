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

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lucon/error.hpp"
#include "lucon/logic/builtins.hpp"
#include "lucon/logic/reader.hpp"
#include "lucon/logic/unify.hpp"
#include "lucon/policy/ast.hpp"
#include "lucon/text/lexer.hpp"

namespace lucon::policy {

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void write_terms(std::string& out, const std::vector<Term>& terms) {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i != 0) out += ", ";
    terms[i].write(out);
  }
}

inline void write_service_body(std::string& out, const ServiceDecl& s,
                               std::string_view indent) {
  auto list = [&](std::string_view kw, const std::vector<Term>& terms) {
    if (terms.empty()) return;
    out += indent;
    out += kw;
    out += ' ';
    write_terms(out, terms);
    out += '\n';
  };
  out += indent;
  out += "endpoint ";
  logic::write_quoted(out, s.endpoint, '"');
  out += '\n';
  list("properties", s.properties);
  list("capabilities", s.capabilities);
  list("creates_label", s.creates_labels);
  list("removes_label", s.removes_labels);
}

class PolicyParser {
 public:
  explicit PolicyParser(std::string_view src)
      : tokens_(text::tokenize(
            src, text::LexerOptions{text::CommentStyle::double_slash, false})),
        reader_(tokens_) {}

  PolicyAst parse() {
    while (!tokens_.at_end()) {
      if (tokens_.accept_keyword("service")) {
        SourceLocation where = tokens_.peek().location;
        ServiceDecl s = service_block(true);
        if (!declared_ids_.insert(s.id).second) {
          throw ValidationError(at(where) + "duplicate service id '" + s.id +
                                "'");
        }
        ast_.services.push_back(std::move(s));
      } else if (tokens_.accept_keyword("flow_rule")) {
        rule_block();
      } else {
        tokens_.fail("expected 'service' or 'flow_rule'");
      }
    }
    hoist_inline_services();
    return std::move(ast_);
  }

 private:
  struct PendingTarget {
    std::size_t rule;
    ServiceDecl service;
  };

  static std::string at(SourceLocation l) {
    return std::to_string(l.line) + ":" + std::to_string(l.column) + ": ";
  }

  std::vector<Term> term_list() {
    std::vector<Term> out;
    out.push_back(reader_.read_term());
    while (tokens_.accept_punct(",")) out.push_back(reader_.read_term());
    return out;
  }

  Effect effect() {
    const text::Token& t = tokens_.peek();
    auto e = t.is(text::TokenKind::identifier) ? parse_effect(t.text)
                                               : std::nullopt;
    if (!e) tokens_.fail("expected an effect (allow, drop or error)");
    tokens_.next();
    return *e;
  }

  ServiceDecl service_block(bool need_id) {
    ServiceDecl s;
    tokens_.expect_punct("{");
    std::set<std::string> seen;
    bool has_endpoint = false;
    while (!tokens_.peek().is_punct("}")) {
      if (tokens_.at_end()) tokens_.fail("expected '}'");
      const text::Token& kw = tokens_.peek();
      if (!kw.is(text::TokenKind::identifier)) {
        tokens_.fail("expected a service attribute");
      }
      if (!seen.insert(kw.text).second) {
        tokens_.fail("attribute '" + kw.text + "' given twice");
      }
      if (tokens_.accept_keyword("id")) {
        s.id = reader_.read_atom_name("a service id");
      } else if (tokens_.accept_keyword("endpoint")) {
        s.endpoint = tokens_.expect(text::TokenKind::string,
                                    "an endpoint regex string").text;
        has_endpoint = true;
      } else if (tokens_.accept_keyword("properties")) {
        s.properties = term_list();
      } else if (tokens_.accept_keyword("capabilities")) {
        s.capabilities = term_list();
      } else if (tokens_.accept_keyword("creates_label")) {
        s.creates_labels = term_list();
      } else if (tokens_.accept_keyword("removes_label")) {
        s.removes_labels = term_list();
      } else {
        tokens_.fail("unknown service attribute");
      }
    }
    SourceLocation close = tokens_.next().location;
    if (need_id && s.id.empty()) {
      throw SyntaxError("service is missing 'id'", close);
    }
    if (!has_endpoint) throw SyntaxError("service is missing 'endpoint'", close);
    return s;
  }

  void rule_block() {
    FlowRule r;
    tokens_.expect_punct("{");
    tokens_.expect_keyword("id");
    SourceLocation name_at = tokens_.peek().location;
    r.name = reader_.read_atom_name("a rule name");
    if (!rule_names_.insert(r.name).second) {
      throw ValidationError(at(name_at) + "duplicate rule name '" + r.name +
                            "'");
    }
    tokens_.expect_keyword("when");
    std::optional<ServiceDecl> inline_service;
    if (tokens_.accept_keyword("service")) {
      inline_service = service_block(false);
    } else {
      target_at_.push_back({ast_.rules.size(), tokens_.peek().location});
      r.target = reader_.read_atom_name("a service reference");
    }
    tokens_.expect_keyword("receives");
    r.trigger_labels = term_list();
    tokens_.expect_keyword("decide");
    r.decision.effect = effect();
    while (tokens_.accept_keyword("require")) {
      Obligation o{reader_.read_callable(), Effect::error};
      if (tokens_.accept_keyword("otherwise")) o.otherwise = effect();
      r.decision.obligations.push_back(std::move(o));
    }
    tokens_.expect_punct("}");
    if (inline_service) {
      pending_.push_back({ast_.rules.size(), std::move(*inline_service)});
    }
    ast_.rules.push_back(std::move(r));
  }

  void hoist_inline_services() {
    std::set<std::string> taken = declared_ids_;
    for (auto& p : pending_) {
      ServiceDecl& s = p.service;
      if (!s.id.empty()) {
        // Inline declaration with an explicit id.
        const ServiceDecl* prior = ast_.find_service(s.id);
        if (prior != nullptr && !(*prior == s)) {
          throw ValidationError("duplicate service id '" + s.id + "'");
        }
        if (prior == nullptr) {
          ast_.services.push_back(s);
          taken.insert(s.id);
        }
        ast_.rules[p.rule].target = s.id;
        continue;
      }
      std::string body;
      write_service_body(body, s, "");
      std::uint64_t n = fnv1a(body) % 100000000ULL;
      for (;;) {
        std::string candidate = "service" + std::to_string(n);
        const ServiceDecl* prior = ast_.find_service(candidate);
        if (prior == nullptr && taken.count(candidate) == 0) {
          s.id = candidate;
          ast_.services.push_back(s);
          taken.insert(candidate);
          break;
        }
        if (prior != nullptr) {
          ServiceDecl same = s;
          same.id = candidate;
          if (*prior == same) {
            s.id = candidate;
            break;
          }
        }
        n = (n + 1) % 100000000ULL;
      }
      ast_.rules[p.rule].target = s.id;
    }
    for (const auto& [rule, where] : target_at_) {
      const std::string& target = ast_.rules[rule].target;
      if (ast_.find_service(target) == nullptr) {
        throw ValidationError(at(where) + "rule '" + ast_.rules[rule].name +
                              "' targets unknown service '" + target + "'");
      }
    }
  }

  text::TokenStream tokens_;
  logic::TermReader reader_;
  PolicyAst ast_;
  std::set<std::string> declared_ids_;
  std::set<std::string> rule_names_;
  std::vector<PendingTarget> pending_;
  std::vector<std::pair<std::size_t, SourceLocation>> target_at_;
};

}  // namespace detail

/// Checks every document invariant; throws ValidationError on the first
/// violation.
inline void validate(const PolicyAst& ast) {
  std::set<std::string> ids;
  for (const auto& s : ast.services) {
    try {
      (void)Term::atom(s.id);
    } catch (const std::invalid_argument&) {
      throw ValidationError("invalid service id '" + s.id + "'");
    }
    if (!ids.insert(s.id).second) {
      throw ValidationError("duplicate service id '" + s.id + "'");
    }
    if (!logic::is_valid_regex(s.endpoint)) {
      throw ValidationError("service '" + s.id +
                            "' has an invalid endpoint regex \"" + s.endpoint +
                            "\"");
    }
    for (const auto& l : s.creates_labels) {
      if (!l.is_ground()) {
        throw ValidationError("service '" + s.id + "' creates non-ground label " +
                              l.to_string());
      }
      for (const auto& r : s.removes_labels) {
        if (logic::unifiable(l, r)) {
          throw ValidationError("service '" + s.id + "' both creates and removes " +
                                l.to_string());
        }
      }
    }
  }
  std::set<std::string> names;
  for (const auto& r : ast.rules) {
    try {
      (void)Term::atom(r.name);
    } catch (const std::invalid_argument&) {
      throw ValidationError("invalid rule name '" + r.name + "'");
    }
    if (!names.insert(r.name).second) {
      throw ValidationError("duplicate rule name '" + r.name + "'");
    }
    if (ids.count(r.target) == 0) {
      throw ValidationError("rule '" + r.name + "' targets unknown service '" +
                            r.target + "'");
    }
    if (r.trigger_labels.empty()) {
      throw ValidationError("rule '" + r.name + "' has no trigger labels");
    }
    for (const auto& o : r.decision.obligations) {
      if (!o.action.is_callable()) {
        throw ValidationError("rule '" + r.name +
                              "' has a non-callable obligation " +
                              o.action.to_string());
      }
    }
  }
}

/// Parses and validates a policy document. Inline service declarations are
/// hoisted to top-level services with generated ids.
inline PolicyAst parse_policy(std::string_view text) {
  PolicyAst ast = detail::PolicyParser(text).parse();
  validate(ast);
  return ast;
}

/// Canonical text: header comment, services, then rules.
inline std::string format_policy(const PolicyAst& ast) {
  std::string out = "// lucon policy\n";
  for (const auto& s : ast.services) {
    out += "\nservice {\n  id ";
    logic::write_atom_name(out, s.id);
    out += '\n';
    detail::write_service_body(out, s, "  ");
    out += "}\n";
  }
  for (const auto& r : ast.rules) {
    out += "\nflow_rule {\n  id ";
    logic::write_atom_name(out, r.name);
    out += "\n  when ";
    logic::write_atom_name(out, r.target);
    out += " receives ";
    detail::write_terms(out, r.trigger_labels);
    out += "\n  decide ";
    out += to_string(r.decision.effect);
    out += '\n';
    for (const auto& o : r.decision.obligations) {
      out += "    require ";
      o.action.write(out);
      out += " otherwise ";
      out += to_string(o.otherwise);
      out += '\n';
    }
    out += "}\n";
  }
  return out;
}

}  // namespace lucon::policy
