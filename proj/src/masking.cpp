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

#include "diffhist/masking.hpp"

namespace diffhist {

std::string_view to_string(Supervision s) {
  return s == Supervision::action_only ? "action_only" : "action_and_world_model";
}

Supervision parse_supervision(std::string_view name) {
  if (name == "action-only" || name == "action_only" || name == "action") {
    return Supervision::action_only;
  }
  if (name == "world-model" || name == "world_model" || name == "action-and-world-model" ||
      name == "action_and_world_model") {
    return Supervision::action_and_world_model;
  }
  throw std::invalid_argument("unknown objective '" + std::string(name) + "'");
}

TokenizedSample align_segments(const RenderedSample& sample, const Tokenizer& tok) {
  const auto spans = tok.encode_with_offsets(sample.text);
  const auto& segs = sample.segment_map.segments;

  TokenizedSample out;
  out.format = sample.format;
  out.tokens.reserve(spans.size());
  out.roles.reserve(spans.size());
  out.steps.reserve(spans.size());

  std::size_t expected = 0;
  std::size_t seg = 0;
  for (const auto& span : spans) {
    if (span.char_start != expected || span.char_end <= span.char_start) {
      throw AlignmentGap(expected, "token spans are not contiguous");
    }
    expected = span.char_end;
    // Zero-width segments own no bytes; skip them along with finished ones.
    while (seg < segs.size() && segs[seg].char_end <= span.char_start) ++seg;
    if (seg == segs.size()) throw AlignmentGap(span.char_start, "token beyond the last segment");
    out.tokens.push_back(span.id);
    out.roles.push_back(segs[seg].role);
    out.steps.push_back(segs[seg].step_index);
  }
  if (expected != sample.text.size()) {
    throw AlignmentGap(expected, "text not fully covered by tokens");
  }
  return out;
}

LossMask build_mask(const TokenizedSample& sample, const Objective& objective) {
  if (objective.format != sample.format) {
    throw std::invalid_argument("objective format " + std::string(to_string(objective.format)) +
                                " does not match sample format " +
                                std::string(to_string(sample.format)));
  }
  const bool world_model = objective.supervision == Supervision::action_and_world_model;
  LossMask mask(sample.tokens.size(), 0);
  for (std::size_t i = 0; i < sample.tokens.size(); ++i) {
    switch (sample.roles[i]) {
      case Role::action:
      case Role::marker_observation:
        mask[i] = 1;
        break;
      case Role::observation_full:
      case Role::observation_delta:
        mask[i] = world_model && sample.steps[i] != kNoStep && sample.steps[i] >= 1 ? 1 : 0;
        break;
      case Role::instruction:
      case Role::marker_action:
        break;
    }
  }
  return mask;
}

}  // namespace diffhist
