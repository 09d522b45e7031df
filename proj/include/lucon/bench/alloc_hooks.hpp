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

// Replaces the global allocation functions with counting versions. Include
// in exactly one translation unit of an executable.

#pragma once

#include <cstdlib>
#include <new>

#include "lucon/bench/alloc_counter.hpp"

namespace lucon::bench::detail {

// Each block carries its size in a header so sized and unsized deletes agree.
inline constexpr std::size_t kHeader = alignof(std::max_align_t);

inline void* counted_alloc(std::size_t n) {
  static const bool installed = [] {
    alloc_counters().installed.store(true);
    return true;
  }();
  (void)installed;
  void* raw = std::malloc(n + kHeader);
  if (raw == nullptr) throw std::bad_alloc();
  *static_cast<std::size_t*>(raw) = n;
  note_alloc(n);
  return static_cast<char*>(raw) + kHeader;
}

inline void counted_free(void* p) noexcept {
  if (p == nullptr) return;
  void* raw = static_cast<char*>(p) - kHeader;
  note_free(*static_cast<std::size_t*>(raw));
  std::free(raw);
}

}  // namespace lucon::bench::detail

void* operator new(std::size_t n) {
  return lucon::bench::detail::counted_alloc(n);
}
void* operator new[](std::size_t n) {
  return lucon::bench::detail::counted_alloc(n);
}
void* operator new(std::size_t n, const std::nothrow_t&) noexcept {
  try {
    return lucon::bench::detail::counted_alloc(n);
  } catch (...) {
    return nullptr;
  }
}
void* operator new[](std::size_t n, const std::nothrow_t&) noexcept {
  try {
    return lucon::bench::detail::counted_alloc(n);
  } catch (...) {
    return nullptr;
  }
}
void operator delete(void* p) noexcept { lucon::bench::detail::counted_free(p); }
void operator delete[](void* p) noexcept {
  lucon::bench::detail::counted_free(p);
}
void operator delete(void* p, std::size_t) noexcept {
  lucon::bench::detail::counted_free(p);
}
void operator delete[](void* p, std::size_t) noexcept {
  lucon::bench::detail::counted_free(p);
}
void operator delete(void* p, const std::nothrow_t&) noexcept {
  lucon::bench::detail::counted_free(p);
}
void operator delete[](void* p, const std::nothrow_t&) noexcept {
  lucon::bench::detail::counted_free(p);
}
