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

#include <map>
#include <string>

#include "lucon/logic/term.hpp"
#include "lucon/taint/labels.hpp"

namespace lucon::route {

using Props = std::map<std::string, logic::Term>;

/// A message in flight: payload, message-scoped variables and taint labels.
struct Message {
  std::string id;
  std::string payload;
  Props props;
  taint::LabelSet labels;

  friend bool operator==(const Message&, const Message&) = default;
};

}  // namespace lucon::route
