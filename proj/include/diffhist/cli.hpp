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

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "diffhist/formatting.hpp"
#include "diffhist/tokenizer.hpp"

namespace diffhist::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// "whitespace", "bpe" (paths from DIFFHIST_BPE_VOCAB / DIFFHIST_BPE_MERGES)
// or "bpe:<vocab.json>:<merges.txt>". The markers are registered.
std::unique_ptr<Tokenizer> make_tokenizer(const std::string& spec, const MarkerConfig& markers);

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace diffhist::cli
