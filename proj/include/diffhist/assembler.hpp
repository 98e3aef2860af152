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

#include "diffhist/formatting.hpp"
#include "diffhist/history.hpp"
#include "diffhist/tokenizer.hpp"

namespace diffhist {

inline constexpr std::size_t kLongContextBudget = 4096;
inline constexpr std::size_t kShortContextBudget = 1024;

class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted(std::size_t needed, std::size_t budget)
      : std::runtime_error("single-step prompt needs " + std::to_string(needed) +
                           " tokens, budget is " + std::to_string(budget)),
        needed_(needed),
        budget_(budget) {}
  std::size_t needed() const { return needed_; }
  std::size_t budget() const { return budget_; }

 private:
  std::size_t needed_;
  std::size_t budget_;
};

// The interaction so far: observations o_1..o_t and actions a_1..a_{t-1}.
struct PromptRequest {
  std::string instruction;
  std::vector<std::string> observations;
  std::vector<std::string> actions;
  std::size_t h_max = 4;
  std::size_t budget = kShortContextBudget;
  HistoryFormat format = HistoryFormat::diff_history;
  MarkerConfig markers;
  // When even one step does not fit, return its tokens cut to budget - 1
  // plus the action marker instead of throwing.
  bool allow_degraded = false;

  // Throws std::invalid_argument.
  void validate() const;
};

struct AssembledPrompt {
  TokenSequence tokens;
  std::size_t chosen_h = 0;
  std::string text;
  bool degraded = false;
  // Rendering behind `tokens`; in degraded mode it covers more than the
  // truncated tokens do.
  RenderedSample rendered;
};

// First h' scanning down from the top whose count plus the instruction fits
// in budget. counts[i] is the rendered cost at h' = counts.size() - i, i.e.
// the list runs from h_max down to 1. Returns 0 when nothing fits.
std::size_t fit_check(const std::vector<std::size_t>& counts, std::size_t instruction_tokens,
                      std::size_t budget);

// The last h steps of the request, with the current observation's action
// left open. The anchor is re-derived from raw observations.
RenderedSample render_prompt(const PromptRequest& req, std::size_t h);

// Largest h' <= min(h_max, t) whose prompt fits, each candidate rendered and
// encoded in full. Throws BudgetExhausted when h' = 1 does not fit (unless
// allow_degraded).
AssembledPrompt build_prompt(const PromptRequest& req, const Tokenizer& tok);

}  // namespace diffhist
