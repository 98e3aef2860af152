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

#include "diffhist/assembler.hpp"

#include <algorithm>

namespace diffhist {

void PromptRequest::validate() const {
  if (observations.empty()) throw std::invalid_argument("prompt request has no observations");
  if (actions.size() + 1 != observations.size()) {
    throw std::invalid_argument("prompt request needs one more observation than actions, got " +
                                std::to_string(observations.size()) + " and " +
                                std::to_string(actions.size()));
  }
  if (h_max == 0) throw std::invalid_argument("h_max must be >= 1");
  if (budget == 0) throw std::invalid_argument("budget must be >= 1");
  markers.validate();
}

std::size_t fit_check(const std::vector<std::size_t>& counts, std::size_t instruction_tokens,
                      std::size_t budget) {
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] + instruction_tokens <= budget) return counts.size() - i;
  }
  return 0;
}

RenderedSample render_prompt(const PromptRequest& req, std::size_t h) {
  const std::size_t t = req.observations.size();
  if (h == 0 || h > t) throw OutOfRange("prompt horizon " + std::to_string(h) + " out of range");
  Window w;
  w.instruction = req.instruction;
  w.start = t - h;
  for (std::size_t i = t - h; i < t; ++i) {
    w.steps.push_back(Step{req.observations[i], i + 1 < t ? req.actions[i] : std::string()});
  }
  if (req.format == HistoryFormat::diff_history) {
    return render_sample(to_diff_history(w), req.markers, Ending::action_marker);
  }
  return render_sample(w, req.markers, Ending::action_marker);
}

AssembledPrompt build_prompt(const PromptRequest& req, const Tokenizer& tok) {
  req.validate();
  const auto marker = tok.special_id(req.markers.action_begin);
  if (!marker || !tok.special_id(req.markers.observation_begin)) {
    throw std::invalid_argument("markers are not registered with the tokenizer");
  }
  const std::size_t top = std::min(req.h_max, req.observations.size());
  TokenSequence last;
  RenderedSample last_rendered;
  for (std::size_t h = top; h >= 1; --h) {
    RenderedSample r = render_prompt(req, h);
    TokenSequence tokens = tok.encode(r.text);
    if (tokens.size() <= req.budget) {
      return AssembledPrompt{std::move(tokens), h, r.text, false, std::move(r)};
    }
    if (h == 1) {
      last = std::move(tokens);
      last_rendered = std::move(r);
    }
  }
  if (!req.allow_degraded) throw BudgetExhausted(last.size(), req.budget);

  // Keep the head of the single-step prompt; the marker stays last.
  last.resize(req.budget - 1);
  last.push_back(*marker);
  std::string text = tok.decode(last);
  return AssembledPrompt{std::move(last), 1, std::move(text), true, std::move(last_rendered)};
}

}  // namespace diffhist
