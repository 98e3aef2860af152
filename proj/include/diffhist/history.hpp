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
#include <stdexcept>
#include <string>
#include <vector>

#include "diffhist/diff.hpp"

namespace diffhist {

class InvalidTrajectory : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// An instruction followed by T interleaved (observation, action) steps.
struct Trajectory {
  std::string id;
  std::string instruction;
  std::vector<std::string> observations;
  std::vector<std::string> actions;

  std::size_t length() const { return observations.size(); }
  // Throws InvalidTrajectory unless T >= 1, |obs| == |actions| and the
  // instruction is non-empty.
  void validate() const;
  bool operator==(const Trajectory&) const = default;
};

struct Step {
  std::string observation;
  std::string action;
  bool operator==(const Step&) const = default;
};

// A horizon-h slice of a trajectory, all observations in full text.
struct Window {
  std::string instruction;
  std::size_t start = 0;
  std::vector<Step> steps;

  std::size_t horizon() const { return steps.size(); }
  bool operator==(const Window&) const = default;
};

struct DiffStep {
  Delta delta;
  std::string action;
  bool operator==(const DiffStep&) const = default;
};

// Same slice with every observation after the anchor replaced by the delta
// against its predecessor. Empty deltas are kept so h == tail.size() + 1.
struct DiffWindow {
  std::string instruction;
  std::size_t start = 0;
  std::string anchor_observation;
  std::string first_action;
  std::vector<DiffStep> tail;

  std::size_t horizon() const { return tail.size() + 1; }
  bool operator==(const DiffWindow&) const = default;
};

DiffWindow to_diff_history(const Window& window);

// Replays the tail deltas from the anchor; PatchConflict propagates.
Window to_full_history(const DiffWindow& diff_window);

// Slice [new_start, new_start + h) of t. Throws OutOfRange when it does not fit.
Window rebase(const Trajectory& t, std::size_t new_start, std::size_t h);

}  // namespace diffhist
