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
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lucon/error.hpp"

namespace lucon::text {

enum class TokenKind {
  identifier,   // lowercase-initial name: atoms, functors, keywords
  variable,     // uppercase- or underscore-initial name
  integer,
  string,       // "double quoted"
  quoted_atom,  // 'single quoted'
  punct,
  end,
};

struct Token {
  TokenKind kind = TokenKind::end;
  // Decoded text: names as written, string contents unescaped.
  std::string text;
  std::int64_t value = 0;
  SourceLocation location;

  bool is(TokenKind k) const { return kind == k; }
  bool is_punct(std::string_view p) const {
    return kind == TokenKind::punct && text == p;
  }
  bool is_identifier(std::string_view name) const {
    return kind == TokenKind::identifier && text == name;
  }
};

inline std::string describe(const Token& t) {
  switch (t.kind) {
    case TokenKind::end: return "end of input";
    case TokenKind::string: return "string \"" + t.text + "\"";
    case TokenKind::integer: return "integer " + std::to_string(t.value);
    default: return "'" + t.text + "'";
  }
}

enum class CommentStyle { percent, double_slash };

struct LexerOptions {
  CommentStyle comments = CommentStyle::percent;
  // Allows `set-msg-prop` style names (a '-' between letters).
  bool hyphenated_names = false;
};

/// Splits source text into tokens. Punctuation recognised: ( ) { } [ ] , .
/// : :- := -> \+ =
inline std::vector<Token> tokenize(std::string_view src,
                                   LexerOptions options = {}) {
  std::vector<Token> out;
  std::size_t i = 0;
  std::size_t line = 1;
  std::size_t col = 1;

  auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  auto peek = [&](std::size_t off = 0) -> char {
    return i + off < src.size() ? src[i + off] : '\0';
  };
  auto is_name_char = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
  };

  while (i < src.size()) {
    char c = peek();
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    if ((options.comments == CommentStyle::percent && c == '%') ||
        (options.comments == CommentStyle::double_slash && c == '/' &&
         peek(1) == '/')) {
      while (i < src.size() && peek() != '\n') advance();
      continue;
    }

    Token tok;
    tok.location = {line, col};

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i;
      while (i < src.size()) {
        if (is_name_char(peek())) {
          advance();
        } else if (options.hyphenated_names && peek() == '-' &&
                   std::isalpha(static_cast<unsigned char>(peek(1)))) {
          advance();
        } else {
          break;
        }
      }
      tok.text = std::string(src.substr(start, i - start));
      tok.kind = (std::isupper(static_cast<unsigned char>(c)) || c == '_')
                     ? TokenKind::variable
                     : TokenKind::identifier;
      out.push_back(std::move(tok));
      continue;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      std::size_t start = i;
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      tok.kind = TokenKind::integer;
      tok.text = std::string(src.substr(start, i - start));
      try {
        tok.value = std::stoll(tok.text);
      } catch (const std::exception&) {
        throw SyntaxError("integer out of range: " + tok.text, tok.location);
      }
      if (is_name_char(peek())) {
        throw SyntaxError("malformed number", tok.location);
      }
      out.push_back(std::move(tok));
      continue;
    }

    if (c == '"' || c == '\'') {
      char quote = c;
      advance();
      std::string text;
      bool closed = false;
      while (i < src.size()) {
        char d = peek();
        if (d == quote) {
          advance();
          closed = true;
          break;
        }
        if (d == '\n') break;
        if (d == '\\') {
          char e = peek(1);
          if (e == '\\' || e == quote) {
            text.push_back(e);
            advance(2);
          } else if (e == 'n') {
            text.push_back('\n');
            advance(2);
          } else if (e == 't') {
            text.push_back('\t');
            advance(2);
          } else {
            // Unknown escapes stay verbatim so regexes like "a\.b" survive.
            text.push_back('\\');
            advance();
          }
          continue;
        }
        text.push_back(d);
        advance();
      }
      if (!closed) {
        throw SyntaxError(quote == '"' ? "unterminated string"
                                       : "unterminated quoted atom",
                          tok.location);
      }
      tok.kind = quote == '"' ? TokenKind::string : TokenKind::quoted_atom;
      tok.text = std::move(text);
      if (tok.kind == TokenKind::quoted_atom && tok.text.empty()) {
        throw SyntaxError("empty quoted atom", tok.location);
      }
      out.push_back(std::move(tok));
      continue;
    }

    static constexpr std::string_view two_char[] = {":-", ":=", "->", "\\+"};
    bool matched = false;
    for (auto p : two_char) {
      if (src.substr(i, 2) == p) {
        tok.kind = TokenKind::punct;
        tok.text = std::string(p);
        advance(2);
        matched = true;
        break;
      }
    }
    if (matched) {
      out.push_back(std::move(tok));
      continue;
    }
    if (std::string_view("(){}[],.:=").find(c) != std::string_view::npos) {
      tok.kind = TokenKind::punct;
      tok.text = std::string(1, c);
      advance();
      out.push_back(std::move(tok));
      continue;
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'",
                      tok.location);
  }

  Token end;
  end.kind = TokenKind::end;
  end.location = {line, col};
  out.push_back(std::move(end));
  return out;
}

/// Cursor over a token vector with the usual expect/accept helpers.
class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  const Token& peek(std::size_t off = 0) const {
    std::size_t k = pos_ + off;
    return k < tokens_.size() ? tokens_[k] : tokens_.back();
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < tokens_.size() - 1) ++pos_;
    return t;
  }
  bool at_end() const { return peek().is(TokenKind::end); }

  bool accept_punct(std::string_view p) {
    if (peek().is_punct(p)) {
      next();
      return true;
    }
    return false;
  }
  bool accept_keyword(std::string_view k) {
    if (peek().is_identifier(k)) {
      next();
      return true;
    }
    return false;
  }

  const Token& expect_punct(std::string_view p) {
    if (!peek().is_punct(p)) fail("expected '" + std::string(p) + "'");
    return next();
  }
  const Token& expect_keyword(std::string_view k) {
    if (!peek().is_identifier(k)) fail("expected '" + std::string(k) + "'");
    return next();
  }
  const Token& expect(TokenKind kind, std::string_view what) {
    if (!peek().is(kind)) fail("expected " + std::string(what));
    return next();
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw SyntaxError(message + ", found " + describe(peek()),
                      peek().location);
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace lucon::text
