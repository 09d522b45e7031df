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

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "lucon/logic/term.hpp"
#include "lucon/route/message.hpp"

namespace lucon::runtime {

using logic::Term;
using route::Message;
using route::Props;

/// What a service handler sees and returns.
struct Exchange {
  std::string payload;
  Props props;
};

using Handler = std::function<Exchange(const Exchange&)>;

/// Service and bean handlers by name.
class ServiceRegistry {
 public:
  /// `serialized` handlers are never invoked concurrently.
  void add(std::string name, Handler handler, bool serialized = false) {
    auto entry = std::make_shared<Entry>();
    entry->handler = std::move(handler);
    if (serialized) entry->lock = std::make_unique<std::mutex>();
    entries_[std::move(name)] = std::move(entry);
  }

  bool contains(std::string_view name) const {
    return entries_.count(std::string(name)) != 0;
  }

  Exchange invoke(std::string_view name, const Exchange& in) const {
    const Entry& e = *entries_.at(std::string(name));
    if (e.lock) {
      std::lock_guard guard(*e.lock);
      return e.handler(in);
    }
    return e.handler(in);
  }

  static Handler identity() {
    return [](const Exchange& in) { return in; };
  }

 private:
  struct Entry {
    Handler handler;
    std::unique_ptr<std::mutex> lock;
  };
  std::unordered_map<std::string, std::shared_ptr<const Entry>> entries_;
};

/// Host actions behind obligations, keyed by functor/arity. An action
/// without a registered implementation fails.
class ObligationRegistry {
 public:
  using Action = std::function<bool(const Term& action, const Message& m)>;

  void add(std::string functor, std::size_t arity, Action fn) {
    actions_[key(functor, arity)] = std::move(fn);
  }

  bool run(const Term& action, const Message& m) const {
    if (!action.is_callable()) return false;
    auto it = actions_.find(key(action.name(), action.arity()));
    if (it == actions_.end()) return false;
    try {
      return it->second(action, m);
    } catch (...) {
      return false;
    }
  }

  static Action succeed() {
    return [](const Term&, const Message&) { return true; };
  }
  static Action fail() {
    return [](const Term&, const Message&) { return false; };
  }

 private:
  static std::string key(const std::string& f, std::size_t arity) {
    return f + "/" + std::to_string(arity);
  }
  std::unordered_map<std::string, Action> actions_;
};

/// Global route variables (the environment shared by every execution that
/// is handed the same instance). Thread-safe.
class Env {
 public:
  Props snapshot() const {
    std::lock_guard guard(mutex_);
    return vars_;
  }
  void set(const std::string& k, Term v) {
    std::lock_guard guard(mutex_);
    vars_.insert_or_assign(k, std::move(v));
  }
  void replace(Props vars) {
    std::lock_guard guard(mutex_);
    vars_ = std::move(vars);
  }
  void clear() { replace({}); }

 private:
  mutable std::mutex mutex_;
  Props vars_;
};

}  // namespace lucon::runtime
