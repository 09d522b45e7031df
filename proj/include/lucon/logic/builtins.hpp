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

#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "lucon/logic/knowledge_base.hpp"
#include "lucon/logic/term.hpp"

namespace lucon::logic {

/// Thread-safe cache of compiled ECMAScript regular expressions.
class RegexCache {
 public:
  /// Whole-string match. Returns nullopt when the pattern does not compile.
  std::optional<bool> full_match(const std::string& pattern,
                                 const std::string& subject) {
    std::string key;
    key.reserve(pattern.size() + subject.size() + 1);
    key.append(pattern).push_back('\0');
    key.append(subject);
    {
      std::shared_lock lock(mutex_);
      auto it = results_.find(key);
      if (it != results_.end()) return it->second;
    }
    const std::regex* re = get(pattern);
    std::optional<bool> result;
    if (re != nullptr) result = std::regex_match(subject, *re);
    std::unique_lock lock(mutex_);
    if (results_.size() >= kMaxResults) results_.clear();
    results_.emplace(std::move(key), result);
    return result;
  }

  /// Compiles and caches `pattern`; false if it is not a valid regex.
  bool warm(const std::string& pattern) { return get(pattern) != nullptr; }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
  }

 private:
  const std::regex* get(const std::string& pattern) {
    {
      std::shared_lock lock(mutex_);
      auto it = cache_.find(pattern);
      if (it != cache_.end()) return it->second ? &*it->second : nullptr;
    }
    std::optional<std::regex> compiled;
    try {
      compiled.emplace(pattern, std::regex::ECMAScript);
    } catch (const std::regex_error&) {
    }
    std::unique_lock lock(mutex_);
    auto [it, inserted] = cache_.try_emplace(pattern, std::move(compiled));
    return it->second ? &*it->second : nullptr;
  }

  static constexpr std::size_t kMaxResults = 4096;

  mutable std::shared_mutex mutex_;
  // Memoised (pattern, subject) outcomes; cleared wholesale when full.
  std::unordered_map<std::string, std::optional<bool>> results_;
  // Entries are never erased, so returned pointers stay valid.
  std::unordered_map<std::string, std::optional<std::regex>> cache_;
};

inline bool is_valid_regex(const std::string& pattern) {
  try {
    std::regex re(pattern, std::regex::ECMAScript);
    return true;
  } catch (const std::regex_error&) {
    return false;
  }
}

/// Registers the standard host predicates:
///   regex(Pattern, Subject, Result)  Result is true/false for a full match
///   eq(A, B), lt(A, B), lte(A, B)    integer comparison (eq also compares
///                                    ground non-integers structurally)
inline void register_standard_builtins(
    KnowledgeBase& kb,
    std::shared_ptr<RegexCache> cache = std::make_shared<RegexCache>()) {
  kb.register_builtin(
      "regex", 3, [cache](std::span<const Term> args) -> BuiltinAnswers {
        if (!args[0].is_string() || !args[1].is_string()) return {};
        auto matched = cache->full_match(args[0].str_value(),
                                         args[1].str_value());
        if (!matched) return {};
        return {{args[0], args[1], Term::boolean(*matched)}};
      });

  auto compare = [](auto op) {
    return [op](std::span<const Term> args) -> BuiltinAnswers {
      if (!args[0].is_integer() || !args[1].is_integer()) return {};
      if (!op(args[0].int_value(), args[1].int_value())) return {};
      return {{args[0], args[1]}};
    };
  };
  kb.register_builtin("lt", 2, compare(std::less<>{}));
  kb.register_builtin("lte", 2, compare(std::less_equal<>{}));
  kb.register_builtin(
      "eq", 2, [](std::span<const Term> args) -> BuiltinAnswers {
        if (!args[0].is_ground() || !args[1].is_ground()) return {};
        if (!(args[0] == args[1])) return {};
        return {{args[0], args[1]}};
      });
}

}  // namespace lucon::logic
