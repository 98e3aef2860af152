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

#include "diffhist/formatting.hpp"

#include <cctype>

namespace diffhist {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::instruction: return "instruction";
    case Role::observation_full: return "observation_full";
    case Role::observation_delta: return "observation_delta";
    case Role::action: return "action";
    case Role::marker_action: return "marker_action";
    case Role::marker_observation: return "marker_observation";
  }
  return "unknown";
}

std::string_view to_string(HistoryFormat format) {
  return format == HistoryFormat::full_text ? "full_text" : "diff_history";
}

HistoryFormat parse_history_format(std::string_view name) {
  if (name == "full" || name == "full_text" || name == "full-text") {
    return HistoryFormat::full_text;
  }
  if (name == "diff" || name == "diff_history" || name == "diff-history") {
    return HistoryFormat::diff_history;
  }
  throw std::invalid_argument("unknown history format '" + std::string(name) + "'");
}

void MarkerConfig::validate() const {
  if (action_begin.empty() || observation_begin.empty()) {
    throw std::invalid_argument("markers must be non-empty");
  }
  if (action_begin == observation_begin) {
    throw std::invalid_argument("action and observation markers must differ");
  }
  delta_style.validate();
}

MarkerCollision::MarkerCollision(Role role, std::size_t step, const std::string& marker)
    : std::invalid_argument("marker '" + marker + "' occurs inside " +
                            std::string(to_string(role)) +
                            (step == kNoStep ? std::string()
                                             : " at step " + std::to_string(step))),
      role_(role),
      step_(step) {}

namespace {

struct StepView {
  std::string_view observation_block;  // full text or rendered delta
  Role observation_role;
  std::string_view action;
};

void check_markers(std::string_view content, Role role, std::size_t step,
                   const MarkerConfig& cfg) {
  for (const std::string& m : {cfg.action_begin, cfg.observation_begin}) {
    if (content.find(m) != std::string_view::npos) throw MarkerCollision(role, step, m);
  }
}

class SampleBuilder {
 public:
  explicit SampleBuilder(HistoryFormat format) { sample_.format = format; }

  void add(Role role, std::size_t step, std::string_view a, std::string_view b = {}) {
    const std::size_t begin = sample_.text.size();
    sample_.text += a;
    sample_.text += b;
    sample_.segment_map.segments.push_back(Segment{role, begin, sample_.text.size(), step});
  }

  RenderedSample finish() { return std::move(sample_); }

 private:
  RenderedSample sample_;
};

RenderedSample render_steps(std::string_view instruction, const std::vector<StepView>& steps,
                            const MarkerConfig& cfg, Ending ending, HistoryFormat format) {
  cfg.validate();
  check_markers(instruction, Role::instruction, kNoStep, cfg);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    check_markers(steps[i].observation_block, steps[i].observation_role, i, cfg);
    check_markers(steps[i].action, Role::action, i, cfg);
  }

  SampleBuilder b(format);
  b.add(Role::instruction, kNoStep, instruction, cfg.instruction_suffix);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const StepView& s = steps[i];
    const std::string_view eol = s.observation_block.empty() ? "" : "\n";
    if (i == 0) {
      b.add(s.observation_role, i, s.observation_block, eol);
    } else {
      b.add(Role::marker_observation, i - 1, cfg.observation_begin);
      b.add(s.observation_role, i, "\n", std::string(s.observation_block) + std::string(eol));
    }
    b.add(Role::marker_action, i, cfg.action_begin);
    const bool last = i + 1 == steps.size();
    if (last && ending == Ending::action_marker) break;
    b.add(Role::action, i, s.action, s.action.empty() ? "" : "\n");
    if (last && ending == Ending::observation_marker) {
      b.add(Role::marker_observation, i, cfg.observation_begin);
    }
  }
  return b.finish();
}

}  // namespace

RenderedSample render_sample(const Window& window, const MarkerConfig& cfg, Ending ending) {
  if (window.steps.empty()) throw InvalidTrajectory("window has no steps");
  std::vector<StepView> steps;
  steps.reserve(window.steps.size());
  for (const auto& s : window.steps) {
    steps.push_back(StepView{s.observation, Role::observation_full, s.action});
  }
  return render_steps(window.instruction, steps, cfg, ending, HistoryFormat::full_text);
}

RenderedSample render_sample(const DiffWindow& window, const MarkerConfig& cfg, Ending ending) {
  cfg.validate();
  // Rendered delta text is built from observation lines, so a collision in a
  // hunk line is reported against the delta block of that step.
  std::vector<std::string> blocks;
  blocks.reserve(window.tail.size());
  for (const auto& ds : window.tail) blocks.push_back(render_delta(ds.delta, cfg.delta_style));

  std::vector<StepView> steps;
  steps.reserve(window.horizon());
  steps.push_back(StepView{window.anchor_observation, Role::observation_full, window.first_action});
  for (std::size_t i = 0; i < window.tail.size(); ++i) {
    steps.push_back(StepView{blocks[i], Role::observation_delta, window.tail[i].action});
  }
  return render_steps(window.instruction, steps, cfg, ending, HistoryFormat::diff_history);
}

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

ExtractedAction extract_action(std::string_view generated, const MarkerConfig& cfg) {
  const std::size_t pos = generated.find(cfg.observation_begin);
  if (pos == std::string_view::npos) {
    return ExtractedAction{std::string(trim(generated)), false};
  }
  return ExtractedAction{std::string(trim(generated.substr(0, pos))), true};
}

std::string normalize_action(std::string_view action) {
  std::string out;
  out.reserve(action.size());
  bool pending_space = false;
  for (const char c : trim(action)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

bool validate_action(std::string_view action, const std::set<std::string>& vocabulary) {
  const std::string norm = normalize_action(action);
  if (norm.empty()) return false;
  if (vocabulary.contains(norm)) return true;
  for (const auto& v : vocabulary) {
    if (normalize_action(v) == norm) return true;
  }
  return false;
}

}  // namespace diffhist
