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

#include <algorithm>
#include <initializer_list>
#include <string>
#include <vector>

#include "lucon/error.hpp"
#include "lucon/logic/term.hpp"
#include "lucon/logic/unify.hpp"

namespace lucon::taint {

using logic::Term;

/// Set of ground label terms, kept sorted in the standard order of terms.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<Term> labels) {
    for (const auto& l : labels) insert(l);
  }
  explicit LabelSet(const std::vector<Term>& labels) {
    labels_.reserve(labels.size());
    for (const auto& l : labels) check(l);
    labels_ = labels;
    std::sort(labels_.begin(), labels_.end());
    labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  }

  /// Returns false if the label was already present.
  bool insert(const Term& label) {
    check(label);
    auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
    if (it != labels_.end() && *it == label) return false;
    labels_.insert(it, label);
    return true;
  }

  bool erase(const Term& label) {
    auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
    if (it == labels_.end() || !(*it == label)) return false;
    labels_.erase(it);
    return true;
  }

  bool contains(const Term& label) const {
    return std::binary_search(labels_.begin(), labels_.end(), label);
  }

  /// True if some member unifies with `pattern`. Ground patterns use the
  /// sorted order; patterns with variables scan the set.
  bool matches(const Term& pattern) const {
    if (pattern.is_ground()) return contains(pattern);
    return std::any_of(labels_.begin(), labels_.end(), [&](const Term& l) {
      return logic::unifiable(pattern, l);
    });
  }

  /// Members that unify with `pattern`.
  std::vector<Term> matching(const Term& pattern) const {
    std::vector<Term> out;
    for (const auto& l : labels_) {
      if (logic::unifiable(pattern, l)) out.push_back(l);
    }
    return out;
  }

  LabelSet& operator|=(const LabelSet& other) {
    std::vector<Term> merged;
    merged.reserve(labels_.size() + other.labels_.size());
    std::set_union(labels_.begin(), labels_.end(), other.labels_.begin(),
                   other.labels_.end(), std::back_inserter(merged));
    labels_ = std::move(merged);
    return *this;
  }

  friend LabelSet operator|(LabelSet a, const LabelSet& b) {
    a |= b;
    return a;
  }

  bool includes(const LabelSet& other) const {
    return std::includes(labels_.begin(), labels_.end(), other.labels_.begin(),
                         other.labels_.end());
  }

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  auto begin() const noexcept { return labels_.begin(); }
  auto end() const noexcept { return labels_.end(); }
  const std::vector<Term>& terms() const noexcept { return labels_; }

  std::size_t hash() const noexcept {
    std::size_t h = 0x51ed27;
    for (const auto& l : labels_) h = logic::detail::hash_mix(h, l.hash());
    return h;
  }

  /// "[a, b]"
  std::string to_string() const {
    std::string out = "[";
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (i != 0) out += ", ";
      labels_[i].write(out);
    }
    out += "]";
    return out;
  }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;
  friend auto operator<=>(const LabelSet& a, const LabelSet& b) {
    return std::lexicographical_compare_three_way(
        a.labels_.begin(), a.labels_.end(), b.labels_.begin(), b.labels_.end());
  }

 private:
  static void check(const Term& label) {
    if (!label.is_ground()) {
      throw Error("label " + label.to_string() + " is not ground");
    }
  }

  std::vector<Term> labels_;
};

struct LabelSetHash {
  std::size_t operator()(const LabelSet& s) const noexcept { return s.hash(); }
};

/// Per-service taint propagation: labels in `removes` are dropped (up to
/// unification), then `creates` is added.
struct LabelTransfer {
  std::vector<Term> removes;
  LabelSet creates;

  bool empty() const { return removes.empty() && creates.empty(); }

  LabelSet apply(const LabelSet& in) const {
    LabelSet out;
    if (removes.empty()) {
      out = in;
    } else {
      std::vector<Term> kept;
      kept.reserve(in.size());
      for (const auto& l : in) {
        bool removed = std::any_of(
            removes.begin(), removes.end(),
            [&](const Term& r) { return logic::unifiable(r, l); });
        if (!removed) kept.push_back(l);
      }
      out = LabelSet(kept);
    }
    out |= creates;
    return out;
  }

  /// Combines two transfers for a statement that matches several services.
  LabelTransfer& merge(const LabelTransfer& other) {
    for (const auto& r : other.removes) {
      if (std::find(removes.begin(), removes.end(), r) == removes.end()) {
        removes.push_back(r);
      }
    }
    creates |= other.creates;
    return *this;
  }

  friend bool operator==(const LabelTransfer&, const LabelTransfer&) = default;
};

}  // namespace lucon::taint
