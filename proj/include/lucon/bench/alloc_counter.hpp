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

#include <atomic>
#include <cstddef>

namespace lucon::bench {

/// Process-wide heap accounting. Counts stay zero unless the executable
/// includes "lucon/bench/alloc_hooks.hpp" in exactly one translation unit.
struct AllocCounters {
  std::atomic<std::size_t> current{0};
  std::atomic<std::size_t> peak{0};
  std::atomic<std::size_t> allocations{0};
  std::atomic<bool> installed{false};
};

inline AllocCounters& alloc_counters() {
  static AllocCounters counters;
  return counters;
}

inline void note_alloc(std::size_t n) {
  auto& c = alloc_counters();
  std::size_t now = c.current.fetch_add(n, std::memory_order_relaxed) + n;
  c.allocations.fetch_add(1, std::memory_order_relaxed);
  std::size_t peak = c.peak.load(std::memory_order_relaxed);
  while (now > peak &&
         !c.peak.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

inline void note_free(std::size_t n) {
  alloc_counters().current.fetch_sub(n, std::memory_order_relaxed);
}

/// Measures the peak heap growth over a scope.
class PeakScope {
 public:
  PeakScope() {
    auto& c = alloc_counters();
    baseline_ = c.current.load(std::memory_order_relaxed);
    c.peak.store(baseline_, std::memory_order_relaxed);
  }
  std::size_t peak_increment() const {
    std::size_t p = alloc_counters().peak.load(std::memory_order_relaxed);
    return p > baseline_ ? p - baseline_ : 0;
  }

 private:
  std::size_t baseline_ = 0;
};

inline bool alloc_hooks_installed() {
  return alloc_counters().installed.load(std::memory_order_relaxed);
}

}  // namespace lucon::bench
