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

#include <cctype>
#include <set>
#include <string>
#include <string_view>

#include "lucon/logic/reader.hpp"
#include "lucon/route/route.hpp"
#include "lucon/text/lexer.hpp"

namespace lucon::route {

namespace detail {

class RouteParser {
 public:
  explicit RouteParser(std::string_view src)
      : tokens_(text::tokenize(
            src, text::LexerOptions{text::CommentStyle::double_slash, true})),
        reader_(tokens_) {}

  Route parse() {
    Route r;
    tokens_.expect_keyword("route");
    r.name = name("a route name");
    tokens_.expect_punct("{");
    while (tokens_.accept_keyword("service")) {
      std::string svc = name("a service name");
      tokens_.expect_punct("=");
      std::string url =
          tokens_.expect(text::TokenKind::string, "an endpoint URL string").text;
      r.endpoints.emplace_back(std::move(svc), std::move(url));
    }
    std::vector<bool> named;
    while (!tokens_.peek().is_punct("}")) {
      const text::Token& num = tokens_.peek();
      if (!num.is(text::TokenKind::integer) || num.value <= 0) {
        tokens_.fail("expected a positive statement number");
      }
      SourceLocation where = num.location;
      Statement s;
      s.number = tokens_.next().value;
      tokens_.expect_punct(":");
      statement(s);
      if (tokens_.accept_keyword("as")) {
        s.name = name("a statement name");
        named.push_back(true);
      } else {
        named.push_back(false);
      }
      if (s.kind == StmtKind::choice && tokens_.peek().is_punct("->")) {
        tokens_.fail("a choice names its successors with goto");
      }
      if (tokens_.accept_punct("->")) {
        if (tokens_.accept_keyword("end")) {
          s.flow.kind = Flow::Kind::end;
        } else {
          s.flow.kind = Flow::Kind::explicit_targets;
          s.flow.targets.push_back(number());
          while (tokens_.accept_punct(",")) s.flow.targets.push_back(number());
        }
      }
      if (!r.statements.emplace(s.number, s).second) {
        throw SyntaxError("duplicate statement number " +
                              std::to_string(s.number),
                          where);
      }
      order_.push_back(s.number);
    }
    tokens_.expect_punct("}");
    if (!tokens_.at_end()) tokens_.fail("unexpected input after route");
    assign_default_names(r, named);
    return r;
  }

 private:
  // Route and service names may also be capitalised.
  std::string name(std::string_view what) {
    if (tokens_.peek().is(text::TokenKind::variable)) {
      return tokens_.next().text;
    }
    return reader_.read_atom_name(what);
  }

  StmtNo number() {
    const text::Token& t = tokens_.peek();
    if (!t.is(text::TokenKind::integer) || t.value <= 0) {
      tokens_.fail("expected a statement number");
    }
    return tokens_.next().value;
  }

  void statement(Statement& s) {
    const text::Token& kw = tokens_.peek();
    if (kw.is_identifier("when")) {
      tokens_.next();
      s.kind = StmtKind::choice;
      s.expr = reader_.read_callable();
      tokens_.expect_keyword("then");
      tokens_.expect_keyword("goto");
      s.then_target = number();
      tokens_.expect_keyword("otherwise");
      tokens_.expect_keyword("goto");
      s.else_target = number();
      return;
    }
    if (kw.is_identifier("split") || kw.is_identifier("aggregate")) {
      s.kind = kw.text == "split" ? StmtKind::split : StmtKind::aggregate;
      tokens_.next();
      s.expr = reader_.read_term();
      return;
    }
    if (kw.is_identifier("set-msg-prop") || kw.is_identifier("set-env-prop")) {
      s.kind = kw.text == "set-msg-prop" ? StmtKind::set_msg_prop
                                         : StmtKind::set_env_prop;
      tokens_.next();
      s.key = name("a property name");
      tokens_.expect_punct(":=");
      s.expr = reader_.read_term();
      return;
    }
    if (kw.is_identifier("from") || kw.is_identifier("to") ||
        kw.is_identifier("bean")) {
      s.kind = kw.text == "from"  ? StmtKind::from
               : kw.text == "to" ? StmtKind::to
                                 : StmtKind::bean;
      tokens_.next();
      tokens_.expect_punct("(");
      s.service = name("a service name");
      tokens_.expect_punct(")");
      return;
    }
    tokens_.fail("expected a statement");
  }

  void assign_default_names(Route& r, const std::vector<bool>& named) {
    std::set<std::string> taken;
    for (std::size_t i = 0; i < order_.size(); ++i) {
      if (named[i]) taken.insert(r.statements.at(order_[i]).name);
    }
    for (std::size_t i = 0; i < order_.size(); ++i) {
      if (named[i]) continue;
      Statement& s = r.statements.at(order_[i]);
      std::string base = default_name(s);
      std::string name = base;
      for (int k = 2; taken.count(name) != 0; ++k) {
        name = base + "_" + std::to_string(k);
      }
      s.name = name;
      taken.insert(name);
    }
  }

  text::TokenStream tokens_;
  logic::TermReader reader_;
  std::vector<StmtNo> order_;
};

}  // namespace detail

/// Parses and validates a route in the numbered-statement text format.
inline Route parse_route(std::string_view text) {
  Route r = detail::RouteParser(text).parse();
  validate(r);
  return r;
}

namespace detail {

inline void write_name(std::string& out, std::string_view name) {
  bool capitalised = !name.empty() &&
                     (std::isupper(static_cast<unsigned char>(name[0])) ||
                      name[0] == '_');
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') {
      capitalised = false;
    }
  }
  if (capitalised) {
    out += name;
  } else {
    logic::write_atom_name(out, name);
  }
}

}  // namespace detail

/// Canonical text of a route.
inline std::string format_route(const Route& r) {
  std::string out = "route ";
  detail::write_name(out, r.name);
  out += " {\n";
  for (const auto& [svc, url] : r.endpoints) {
    out += "  service ";
    detail::write_name(out, svc);
    out += " = ";
    logic::write_quoted(out, url, '"');
    out += '\n';
  }
  if (!r.endpoints.empty()) out += '\n';
  for (const auto& [n, s] : r.statements) {
    out += "  " + std::to_string(n) + ": ";
    switch (s.kind) {
      case StmtKind::from:
      case StmtKind::to:
      case StmtKind::bean:
        out += to_string(s.kind);
        out += '(';
        detail::write_name(out, s.service);
        out += ')';
        break;
      case StmtKind::choice:
        out += "when ";
        s.expr->write(out);
        out += " then goto " + std::to_string(s.then_target) +
               " otherwise goto " + std::to_string(s.else_target);
        break;
      case StmtKind::split:
      case StmtKind::aggregate:
        out += to_string(s.kind);
        out += ' ';
        s.expr->write(out);
        break;
      case StmtKind::set_msg_prop:
      case StmtKind::set_env_prop:
        out += to_string(s.kind);
        out += ' ';
        detail::write_name(out, s.key);
        out += " := ";
        s.expr->write(out);
        break;
    }
    if (s.name != default_name(s)) {
      out += " as ";
      detail::write_name(out, s.name);
    }
    if (s.flow.kind == Flow::Kind::end) {
      out += " -> end";
    } else if (s.flow.kind == Flow::Kind::explicit_targets) {
      out += " ->";
      for (std::size_t i = 0; i < s.flow.targets.size(); ++i) {
        out += i == 0 ? " " : ", ";
        out += std::to_string(s.flow.targets[i]);
      }
    }
    out += '\n';
  }
  out += "}\n";
  return out;
}

}  // namespace lucon::route
