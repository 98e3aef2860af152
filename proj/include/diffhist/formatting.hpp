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
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "diffhist/diff.hpp"
#include "diffhist/history.hpp"

namespace diffhist {

struct MarkerConfig {
  std::string action_begin = "<|action|>";
  std::string observation_begin = "<|observation|>";
  DeltaStyle delta_style;
  std::string instruction_suffix = "\n";

  // Throws std::invalid_argument for empty or identical markers.
  void validate() const;
  std::vector<std::string> markers() const { return {action_begin, observation_begin}; }
};

enum class Role : unsigned char {
  instruction,
  observation_full,
  observation_delta,
  action,
  marker_action,
  marker_observation,
};

enum class HistoryFormat : unsigned char { full_text, diff_history };

std::string_view to_string(Role role);
std::string_view to_string(HistoryFormat format);
// Accepts "full", "full_text", "diff", "diff_history".
HistoryFormat parse_history_format(std::string_view name);

inline constexpr std::size_t kNoStep = std::numeric_limits<std::size_t>::max();

// [char_start, char_end) of the rendered text. step_index is 0-based within
// the window; a marker_observation segment carries the index of the action it
// terminates, and the instruction carries kNoStep.
struct Segment {
  Role role;
  std::size_t char_start;
  std::size_t char_end;
  std::size_t step_index;

  bool operator==(const Segment&) const = default;
};

struct SegmentMap {
  std::vector<Segment> segments;
};

struct RenderedSample {
  std::string text;
  SegmentMap segment_map;
  HistoryFormat format = HistoryFormat::full_text;

  std::string_view segment_text(const Segment& s) const {
    return std::string_view(text).substr(s.char_start, s.char_end - s.char_start);
  }
};

// What follows the last step's observation.
enum class Ending : unsigned char {
  // ... action_begin, action. The layout of the reference listings.
  none,
  // ... action_begin, action, observation_begin. Every action is terminated;
  // used for training samples.
  observation_marker,
  // ... action_begin. The last step's action is not rendered; used to prime
  // generation at inference time.
  action_marker,
};

class MarkerCollision : public std::invalid_argument {
 public:
  MarkerCollision(Role role, std::size_t step, const std::string& marker);
  Role role() const { return role_; }
  std::size_t step() const { return step_; }

 private:
  Role role_;
  std::size_t step_;
};

// Layout: instruction + suffix, then the first observation in full; each step
// continues with action_begin + action + "\n" and, when another observation
// follows, observation_begin + "\n" + observation-or-delta + "\n". Empty
// actions and empty blocks drop their trailing newline.
RenderedSample render_sample(const Window& window, const MarkerConfig& cfg,
                             Ending ending = Ending::none);
RenderedSample render_sample(const DiffWindow& window, const MarkerConfig& cfg,
                             Ending ending = Ending::none);

struct ExtractedAction {
  std::string action;
  bool terminated = false;
};

// Text up to the first observation_begin, trimmed. `terminated` is false when
// the marker never appears.
ExtractedAction extract_action(std::string_view generated, const MarkerConfig& cfg);

// Trim and collapse internal whitespace runs to a single space.
std::string normalize_action(std::string_view action);

bool validate_action(std::string_view action, const std::set<std::string>& vocabulary);

}  // namespace diffhist
