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
#include <string_view>
#include <vector>

namespace diffhist {

// One block of removed/added lines. Coordinates follow the unified-diff
// header convention: when a side's count is zero, its start names the line
// *after which* the change sits (so an insertion at the top is "-0,0").
struct Hunk {
  std::size_t old_start = 0;
  std::size_t old_count = 0;
  std::size_t new_start = 0;
  std::size_t new_count = 0;
  std::vector<std::string> removed;
  std::vector<std::string> added;

  bool operator==(const Hunk&) const = default;
};

// Ordered, non-overlapping hunks. Empty means the texts are identical.
struct Delta {
  std::vector<Hunk> hunks;

  bool empty() const { return hunks.empty(); }
  std::size_t changed_lines() const;
  bool operator==(const Delta&) const = default;
};

struct DeltaStyle {
  std::string hunk_delimiter = "@@";
  bool emit_file_headers = false;
  std::string old_label = "a";
  std::string new_label = "b";
  // Drop ",1" from a side of the header whose count is exactly one.
  bool omit_unit_count = true;

  void validate() const;
};

class MalformedDelta : public std::runtime_error {
 public:
  MalformedDelta(std::size_t line_no, const std::string& reason);
  std::size_t line_no() const { return line_no_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_no_;
  std::string reason_;
};

class PatchConflict : public std::runtime_error {
 public:
  PatchConflict(std::size_t hunk_index, const std::string& detail);
  std::size_t hunk_index() const { return hunk_index_; }

 private:
  std::size_t hunk_index_;
};

// Splits on '\n' only. The empty string has zero lines; a trailing newline
// yields a final empty line, so split/join is an exact bijection.
std::vector<std::string_view> split_lines(std::string_view text);
std::string join_lines(const std::vector<std::string>& lines);

// Minimal line-level delta (Myers O(ND); ties resolved toward deletion).
Delta compute_delta(std::string_view old_text, std::string_view new_text);

// Zero-context rendering: "<delim> -A[,n] +B[,m] <delim>" then "-" lines then
// "+" lines. An empty delta renders as "".
std::string render_delta(const Delta& delta, const DeltaStyle& style = {});

// Inverse of render_delta. Accepts explicit ",1" counts.
Delta parse_delta(std::string_view text, const DeltaStyle& style = {});

std::string apply_delta(std::string_view old_text, const Delta& delta);

Delta invert_delta(const Delta& delta);

}  // namespace diffhist
