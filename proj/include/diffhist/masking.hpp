// Copyright 2026 The diffhist Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "diffhist/formatting.hpp"
#include "diffhist/tokenizer.hpp"

namespace diffhist {

// Masks are aligned with the token positions they supervise (labels), not
// shifted. A trainer predicting token i from tokens [0, i) applies its usual
// one-position shift between inputs and labels.
using LossMask = std::vector<std::uint8_t>;

enum class Supervision : unsigned char {
  // Action tokens plus the observation marker that closes each action.
  action_only,
  // Additionally every observation or delta token after the first step.
  action_and_world_model,
};

struct Objective {
  Supervision supervision = Supervision::action_only;
  HistoryFormat format = HistoryFormat::full_text;
};

std::string_view to_string(Supervision s);
// Accepts "action-only", "action_only", "world-model", "action-and-world-model".
Supervision parse_supervision(std::string_view name);

struct TokenizedSample {
  TokenSequence tokens;
  std::vector<Role> roles;
  std::vector<std::size_t> steps;  // step_index of the owning segment
  HistoryFormat format = HistoryFormat::full_text;
};

class AlignmentGap : public std::runtime_error {
 public:
  AlignmentGap(std::size_t offset, const std::string& detail)
      : std::runtime_error("token offsets do not cover the text at byte " +
                           std::to_string(offset) + ": " + detail),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Each token takes the role of the segment holding its first byte.
TokenizedSample align_segments(const RenderedSample& sample, const Tokenizer& tok);

// Throws std::invalid_argument when the objective's format differs from the
// sample's.
LossMask build_mask(const TokenizedSample& sample, const Objective& objective);

}  // namespace diffhist
