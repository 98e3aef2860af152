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

#include "diffhist/history.hpp"

namespace diffhist {

void Trajectory::validate() const {
  if (instruction.empty()) {
    throw InvalidTrajectory("trajectory '" + id + "': empty instruction");
  }
  if (observations.empty()) {
    throw InvalidTrajectory("trajectory '" + id + "': no steps");
  }
  if (observations.size() != actions.size()) {
    throw InvalidTrajectory("trajectory '" + id + "': " +
                            std::to_string(observations.size()) +
                            " observations but " +
                            std::to_string(actions.size()) + " actions");
  }
}

DiffWindow to_diff_history(const Window& window) {
  if (window.steps.empty()) {
    throw InvalidTrajectory("window has no steps");
  }
  DiffWindow out;
  out.instruction = window.instruction;
  out.start = window.start;
  out.anchor_observation = window.steps.front().observation;
  out.first_action = window.steps.front().action;
  out.tail.reserve(window.steps.size() - 1);
  for (std::size_t i = 1; i < window.steps.size(); ++i) {
    out.tail.push_back(DiffStep{
        compute_delta(window.steps[i - 1].observation, window.steps[i].observation),
        window.steps[i].action});
  }
  return out;
}

Window to_full_history(const DiffWindow& diff_window) {
  Window out;
  out.instruction = diff_window.instruction;
  out.start = diff_window.start;
  out.steps.reserve(diff_window.horizon());
  out.steps.push_back(Step{diff_window.anchor_observation, diff_window.first_action});
  for (const auto& ds : diff_window.tail) {
    out.steps.push_back(
        Step{apply_delta(out.steps.back().observation, ds.delta), ds.action});
  }
  return out;
}

Window rebase(const Trajectory& t, std::size_t new_start, std::size_t h) {
  if (h == 0 || new_start >= t.length() || h > t.length() - new_start) {
    throw OutOfRange("slice [" + std::to_string(new_start) + ", " +
                     std::to_string(new_start + h) + ") exceeds trajectory of " +
                     std::to_string(t.length()) + " steps");
  }
  if (t.actions.size() < new_start + h) {
    throw InvalidTrajectory("trajectory '" + t.id + "': missing actions");
  }
  Window w;
  w.instruction = t.instruction;
  w.start = new_start;
  w.steps.reserve(h);
  for (std::size_t i = new_start; i < new_start + h; ++i) {
    w.steps.push_back(Step{t.observations[i], t.actions[i]});
  }
  return w;
}

}  // namespace diffhist
