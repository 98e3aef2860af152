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

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "diffhist/diff.hpp"
#include "diffhist/history.hpp"

namespace diffhist::testing {

// Small deterministic generators shared by the property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::size_t below(std::size_t n) {
    return n == 0 ? 0 : std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  // A line from a small pool (so documents share lines), occasionally a
  // fresh or empty one.
  std::string line() {
    static const std::vector<std::string> pool = {
        "alpha", "beta", "gamma", "delta", "a wall 3 steps left", "+plus", "-minus", "@@ x @@",
        " indented", "tab\there", "", "caf\xc3\xa9"};
    if (coin(0.1)) return "fresh " + std::to_string(below(1000));
    return pool[below(pool.size())];
  }

  std::vector<std::string> lines(std::size_t max_len) {
    std::vector<std::string> out(below(max_len + 1));
    for (auto& l : out) l = line();
    return out;
  }

  std::string document(std::size_t max_len) { return join_lines(lines(max_len)); }

  // b from a by a few random edits, or unrelated with some probability.
  std::string edited(const std::string& a, std::size_t max_len) {
    if (coin(0.2)) return document(max_len);
    std::vector<std::string> ls;
    for (auto v : split_lines(a)) ls.emplace_back(v);
    const std::size_t edits = below(5);
    for (std::size_t e = 0; e < edits; ++e) {
      const std::size_t kind = below(3);
      if (kind == 0 || ls.empty()) {
        ls.insert(ls.begin() + static_cast<std::ptrdiff_t>(below(ls.size() + 1)), line());
      } else if (kind == 1) {
        ls.erase(ls.begin() + static_cast<std::ptrdiff_t>(below(ls.size())));
      } else {
        ls[below(ls.size())] = line();
      }
    }
    return join_lines(ls);
  }

  // A well-formed delta built directly, not through compute_delta.
  Delta delta() {
    Delta d;
    std::size_t cursor = 0;  // old lines consumed so far
    long shift = 0;          // new index minus old index
    const std::size_t n = below(5);
    for (std::size_t i = 0; i < n; ++i) {
      Hunk h;
      const std::size_t gap = below(4) + (i == 0 ? 0 : 1);
      const std::size_t old_pos = cursor + gap + 1;
      h.old_count = below(4);
      h.new_count = below(4);
      if (h.old_count == 0 && h.new_count == 0) h.new_count = 1;
      for (std::size_t k = 0; k < h.old_count; ++k) h.removed.push_back(line());
      for (std::size_t k = 0; k < h.new_count; ++k) h.added.push_back(line());
      const std::size_t new_pos = static_cast<std::size_t>(static_cast<long>(old_pos) + shift);
      h.old_start = h.old_count == 0 ? old_pos - 1 : old_pos;
      h.new_start = h.new_count == 0 ? new_pos - 1 : new_pos;
      cursor = old_pos - 1 + h.old_count;
      shift += static_cast<long>(h.new_count) - static_cast<long>(h.old_count);
      d.hunks.push_back(std::move(h));
    }
    return d;
  }

  Trajectory trajectory(std::size_t max_steps, std::size_t max_lines) {
    Trajectory t;
    t.id = "t" + std::to_string(below(1u << 30));
    t.instruction = "Do task " + std::to_string(below(100)) + ".";
    const std::size_t T = 1 + below(max_steps);
    std::string obs = document(max_lines);
    for (std::size_t i = 0; i < T; ++i) {
      t.observations.push_back(obs);
      t.actions.push_back(coin(0.1) ? "" : "act " + std::to_string(below(6)));
      obs = edited(obs, max_lines);
    }
    return t;
  }

  // Random valid UTF-8 mixing ASCII, whitespace, accents, CJK and emoji.
  std::string utf8(std::size_t max_chars) {
    static const std::vector<std::pair<char32_t, char32_t>> ranges = {
        {0x20, 0x7e}, {0x09, 0x0d}, {0xa0, 0xff}, {0x100, 0x17f}, {0x391, 0x3c9},
        {0x410, 0x44f}, {0x600, 0x6ff}, {0x2000, 0x206f}, {0x3040, 0x30ff}, {0x4e00, 0x4fff},
        {0xac00, 0xacff}, {0x1f300, 0x1f64f}, {0x1d400, 0x1d4ff}};
    std::string out;
    const std::size_t n = below(max_chars + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [lo, hi] = ranges[below(ranges.size())];
      const char32_t c = lo + static_cast<char32_t>(below(hi - lo + 1));
      if (c < 0x80) {
        out.push_back(static_cast<char>(c));
      } else if (c < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (c >> 6)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
      } else if (c < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (c >> 12)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
      } else {
        out.push_back(static_cast<char>(0xf0 | (c >> 18)));
        out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
      }
    }
    return out;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Longest common subsequence length by dynamic programming.
inline std::size_t lcs_length(const std::vector<std::string_view>& a,
                              const std::vector<std::string_view>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace diffhist::testing
