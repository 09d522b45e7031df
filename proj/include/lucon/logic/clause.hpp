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
#include <utility>
#include <vector>

#include "lucon/logic/term.hpp"

namespace lucon::logic {

/// A body goal, optionally negated (`\+ goal`). Builtin calls are ordinary
/// positive literals whose predicate is registered as a builtin.
struct Literal {
  Term goal;
  bool negated = false;

  static Literal positive(Term t) { return Literal{std::move(t), false}; }
  static Literal negative(Term t) { return Literal{std::move(t), true}; }

  std::string to_string() const {
    return negated ? "\\+ " + goal.to_string() : goal.to_string();
  }

  friend bool operator==(const Literal&, const Literal&) = default;
};

/// Horn clause `head :- body`. Facts have an empty body.
class Clause {
 public:
  explicit Clause(Term head, std::vector<Literal> body = {})
      : head_(std::move(head)), body_(std::move(body)) {
    if (!head_.is_callable()) {
      throw std::invalid_argument("clause head must be an atom or compound: " +
                                  head_.to_string());
    }
    ground_ = head_.is_ground();
    for (const auto& l : body_) {
      if (l.goal.is_integer() || l.goal.is_string()) {
        throw std::invalid_argument("body goal is not callable: " +
                                    l.goal.to_string());
      }
      ground_ = ground_ && l.goal.is_ground();
    }
  }

  const Term& head() const noexcept { return head_; }
  const std::vector<Literal>& body() const noexcept { return body_; }
  bool is_fact() const noexcept { return body_.empty(); }
  /// No variables anywhere: the solver can skip renaming.
  bool is_ground() const noexcept { return ground_; }

  std::string to_string() const {
    std::string out = head_.to_string();
    if (!body_.empty()) {
      out += " :- ";
      for (std::size_t i = 0; i < body_.size(); ++i) {
        if (i != 0) out += ", ";
        out += body_[i].to_string();
      }
    }
    return out + ".";
  }

  friend bool operator==(const Clause& a, const Clause& b) {
    return a.head_ == b.head_ && a.body_ == b.body_;
  }

 private:
  Term head_;
  std::vector<Literal> body_;
  bool ground_ = true;
};

}  // namespace lucon::logic
