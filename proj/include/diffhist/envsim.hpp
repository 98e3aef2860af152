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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "diffhist/assembler.hpp"
#include "diffhist/formatting.hpp"
#include "diffhist/history.hpp"
#include "diffhist/tokenizer.hpp"

namespace diffhist {

class InvalidAction : public std::invalid_argument {
 public:
  explicit InvalidAction(std::string_view action)
      : std::invalid_argument("invalid action '" + std::string(action) + "'") {}
};

class Unsolvable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind : unsigned char { key, ball, box, door };
enum class Color : unsigned char { red, green, blue, yellow, purple, grey };
// Screen convention: x grows to the east, y grows to the south.
enum class Dir : unsigned char { N, E, S, W };

std::string_view to_string(Kind k);
std::string_view to_string(Color c);

inline constexpr std::array<std::string_view, 6> kActions = {
    "turn left", "turn right", "go forward", "pick up", "drop", "toggle"};

struct Object {
  Kind kind;
  Color color;
  int x = 0;
  int y = 0;
  bool operator==(const Object&) const = default;
};

enum class TaskClass : unsigned char { go_to, pick_up };

struct TaskSpec {
  TaskClass task = TaskClass::go_to;
  Kind kind = Kind::key;
  Color color = Color::red;
  bool operator==(const TaskSpec&) const = default;
};

// "Your task is to go to the yellow key." plus the action list line.
std::string instruction_text(const TaskSpec& task);

// The outer ring of cells is wall.
struct GridState {
  int width = 8;
  int height = 8;
  int x = 1;
  int y = 1;
  Dir dir = Dir::N;
  std::vector<Object> objects;
  std::optional<Object> carried;
  TaskSpec task;
  std::size_t step_count = 0;
  std::size_t t_max = 200;

  bool is_wall(int cx, int cy) const;
  const Object* object_at(int cx, int cy) const;
  std::pair<int, int> front() const;
  bool success() const;
  // Throws std::invalid_argument on broken invariants.
  void validate() const;
  bool operator==(const GridState&) const = default;
};

// Egocentric view: up to 6 cells ahead, 3 to either side, nothing behind.
// Walls come first (forward, right, left; each scan stops at the first
// object), then objects by distance, clockwise angle from forward, kind,
// color. One line per entity, joined with "\n".
std::string observe(const GridState& s);

// Throws InvalidAction for text outside the action vocabulary.
GridState step(const GridState& s, std::string_view action);

// 1 - 0.9 * t / t_max on success, else 0.
double reward(const GridState& s);

// Next action on a shortest path; ties prefer go forward, turn right, turn
// left. Throws Unsolvable when the task cannot be completed.
std::string expert_bot(const GridState& s);

struct GeneratorConfig {
  int min_size = 6;
  int max_size = 9;
  int max_objects = 4;
  std::size_t t_max = 200;
};

// Deterministic in (seed, cfg); always solvable and never already solved.
GridState generate(std::uint64_t seed, const GeneratorConfig& cfg = {});

enum class Termination : unsigned char { success, timeout, invalid_actions };
std::string_view to_string(Termination t);

struct EpisodeRecord {
  // Paired (observation, action) steps that were actually executed.
  Trajectory trajectory;
  // Observation after the last executed action.
  std::string final_observation;
  double reward = 0.0;
  Termination termination = Termination::timeout;
  std::size_t queries = 0;
  bool operator==(const EpisodeRecord&) const = default;
};

class Policy {
 public:
  virtual ~Policy() = default;
  // Called with the true state before each query. Most policies ignore it.
  virtual void observe_state(const GridState&) {}
  virtual std::string next_continuation(const AssembledPrompt& prompt) = 0;
};

// Ignores the prompt and answers with the expert's action.
class ExpertWrapper final : public Policy {
 public:
  explicit ExpertWrapper(MarkerConfig markers = {}) : markers_(std::move(markers)) {}
  void observe_state(const GridState& s) override { state_ = s; }
  std::string next_continuation(const AssembledPrompt& prompt) override;

 private:
  MarkerConfig markers_;
  std::optional<GridState> state_;
};

// Answers with recorded continuations in order; an empty string once they
// run out.
class ReplayPolicy final : public Policy {
 public:
  explicit ReplayPolicy(std::vector<std::string> continuations)
      : continuations_(std::move(continuations)) {}
  static ReplayPolicy from_actions(const std::vector<std::string>& actions,
                                   const MarkerConfig& markers = {});
  std::string next_continuation(const AssembledPrompt& prompt) override;

 private:
  std::vector<std::string> continuations_;
  std::size_t next_ = 0;
};

// Runs `command` under /bin/sh. Each query writes the prompt text followed by
// a blank line to its stdin and reads stdout up to the next blank line. The
// child lives as long as the policy object. A reply that takes longer than
// timeout_ms (0: wait forever) is cut short and whatever arrived is returned.
// SIGPIPE is ignored process-wide once one is created.
class ExternalPolicy final : public Policy {
 public:
  explicit ExternalPolicy(const std::string& command, int timeout_ms = 60000);
  ~ExternalPolicy() override;
  ExternalPolicy(const ExternalPolicy&) = delete;
  ExternalPolicy& operator=(const ExternalPolicy&) = delete;

  std::string next_continuation(const AssembledPrompt& prompt) override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  int timeout_ms_ = 0;
  std::string buffer_;
};

struct RolloutConfig {
  HistoryFormat format = HistoryFormat::diff_history;
  std::size_t h_max = 4;
  std::size_t budget = kShortContextBudget;
  MarkerConfig markers;
  std::size_t max_invalid = 3;
  // Terminate (as timeout) after this many valid actions in a row that leave
  // the state unchanged; 0 disables.
  std::size_t max_idle_steps = 0;
  bool allow_degraded = false;
  // Re-derive the current observation from each diff prompt and compare.
  bool check_anchor = false;
};

// Interaction loop: observe, assemble, query, extract, validate, step.
// Invalid or unterminated continuations do not advance the environment.
EpisodeRecord rollout(const GridState& initial, Policy& policy, const RolloutConfig& cfg,
                      const Tokenizer& tok);

// The expert driving the environment directly, with no prompt machinery.
EpisodeRecord run_expert(const GridState& initial);

// Fails with std::logic_error unless the prompt's anchor and deltas
// reproduce `current`.
void check_prompt_anchor(const AssembledPrompt& prompt, const MarkerConfig& markers,
                         std::string_view current);

}  // namespace diffhist
