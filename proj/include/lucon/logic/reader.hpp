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

#include <string>
#include <string_view>
#include <vector>

#include "lucon/logic/clause.hpp"
#include "lucon/logic/term.hpp"
#include "lucon/text/lexer.hpp"

namespace lucon::logic {

/// Reads Prolog-notation terms from a token stream. Shared by the clause
/// reader and the policy and route parsers.
class TermReader {
 public:
  explicit TermReader(text::TokenStream& tokens) : tokens_(tokens) {}

  Term read_term() {
    const text::Token& t = tokens_.peek();
    switch (t.kind) {
      case text::TokenKind::variable: {
        tokens_.next();
        if (t.text == "_") return Term::var("_G" + std::to_string(++anon_));
        return Term::var(t.text);
      }
      case text::TokenKind::integer:
        tokens_.next();
        return Term::integer(t.value);
      case text::TokenKind::string:
        tokens_.next();
        return Term::string(t.text);
      case text::TokenKind::identifier:
      case text::TokenKind::quoted_atom: {
        std::string name = t.text;
        SourceLocation where = t.location;
        tokens_.next();
        Term functor = make_atom(name, where);
        if (!tokens_.peek().is_punct("(")) return functor;
        tokens_.next();
        std::vector<Term> args;
        args.push_back(read_term());
        while (tokens_.accept_punct(",")) args.push_back(read_term());
        tokens_.expect_punct(")");
        return Term::compound(std::move(name), std::move(args));
      }
      default:
        tokens_.fail("expected a term");
    }
  }

  /// Reads an atom-valued name (identifier or quoted atom).
  std::string read_atom_name(std::string_view what = "an atom") {
    const text::Token& t = tokens_.peek();
    if (!t.is(text::TokenKind::identifier) &&
        !t.is(text::TokenKind::quoted_atom)) {
      tokens_.fail("expected " + std::string(what));
    }
    return tokens_.next().text;
  }

  Literal read_literal() {
    if (tokens_.accept_punct("\\+")) return Literal::negative(read_callable());
    return Literal::positive(read_callable());
  }

  Term read_callable() {
    const text::Token& start = tokens_.peek();
    Term t = read_term();
    if (!t.is_callable()) {
      throw SyntaxError("expected a callable goal", start.location);
    }
    return t;
  }

  Clause read_clause() {
    const text::Token& start = tokens_.peek();
    Term head = read_term();
    if (!head.is_callable()) {
      throw SyntaxError("clause head must be an atom or compound",
                        start.location);
    }
    std::vector<Literal> body;
    if (tokens_.accept_punct(":-")) {
      body.push_back(read_literal());
      while (tokens_.accept_punct(",")) body.push_back(read_literal());
    }
    tokens_.expect_punct(".");
    return Clause(std::move(head), std::move(body));
  }

 private:
  Term make_atom(const std::string& name, SourceLocation where) {
    try {
      return Term::atom(name);
    } catch (const std::invalid_argument& e) {
      throw SyntaxError(e.what(), where);
    }
  }

  text::TokenStream& tokens_;
  std::size_t anon_ = 0;
};

/// Parses exactly one term; a trailing '.' is permitted.
inline Term parse_term(std::string_view src) {
  text::TokenStream tokens(text::tokenize(src));
  TermReader reader(tokens);
  Term t = reader.read_term();
  tokens.accept_punct(".");
  if (!tokens.at_end()) tokens.fail("unexpected input after term");
  return t;
}

/// Parses a program of `head.` facts and `head :- b1, b2.` rules with `%`
/// line comments.
inline std::vector<Clause> parse_program(std::string_view src) {
  text::TokenStream tokens(text::tokenize(src));
  TermReader reader(tokens);
  std::vector<Clause> clauses;
  while (!tokens.at_end()) clauses.push_back(reader.read_clause());
  return clauses;
}

/// Parses a conjunctive query `g1, \+ g2, ...` with an optional final '.'.
inline std::vector<Literal> parse_query(std::string_view src) {
  text::TokenStream tokens(text::tokenize(src));
  TermReader reader(tokens);
  std::vector<Literal> goals;
  goals.push_back(reader.read_literal());
  while (tokens.accept_punct(",")) goals.push_back(reader.read_literal());
  tokens.accept_punct(".");
  if (!tokens.at_end()) tokens.fail("unexpected input after query");
  return goals;
}

}  // namespace lucon::logic
