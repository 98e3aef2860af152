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

#include "diffhist/diff.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <unordered_map>

namespace diffhist {

MalformedDelta::MalformedDelta(std::size_t line_no, const std::string& reason)
    : std::runtime_error("malformed delta at line " + std::to_string(line_no) +
                         ": " + reason),
      line_no_(line_no),
      reason_(reason) {}

PatchConflict::PatchConflict(std::size_t hunk_index, const std::string& detail)
    : std::runtime_error("patch conflict in hunk " + std::to_string(hunk_index) +
                         ": " + detail),
      hunk_index_(hunk_index) {}

std::size_t Delta::changed_lines() const {
  std::size_t n = 0;
  for (const auto& h : hunks) n += h.removed.size() + h.added.size();
  return n;
}

void DeltaStyle::validate() const {
  if (hunk_delimiter.empty()) {
    throw std::invalid_argument("hunk delimiter must be non-empty");
  }
  if (hunk_delimiter.find('\n') != std::string::npos) {
    throw std::invalid_argument("hunk delimiter must not contain a newline");
  }
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  if (text.empty()) return lines;
  std::size_t begin = 0;
  while (true) {
    const std::size_t nl = text.find('\n', begin);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(begin));
      break;
    }
    lines.push_back(text.substr(begin, nl - begin));
    begin = nl + 1;
  }
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  std::size_t total = lines.empty() ? 0 : lines.size() - 1;
  for (const auto& l : lines) total += l.size();
  out.reserve(total);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i != 0) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

namespace {

enum class EditOp : unsigned char { equal, remove, insert };

// Shortest edit script between two id sequences. The trace keeps one
// frontier per edit distance d, restricted to diagonals [-d, d].
std::vector<EditOp> myers_script(const std::vector<int>& a,
                                 const std::vector<int>& b) {
  const long n = static_cast<long>(a.size());
  const long m = static_cast<long>(b.size());
  const long max_d = n + m;
  std::vector<EditOp> ops;
  if (max_d == 0) return ops;

  const long offset = max_d + 1;
  std::vector<long> v(static_cast<std::size_t>(2 * max_d + 3), 0);
  std::vector<std::vector<long>> trace;

  long final_d = -1;
  for (long d = 0; d <= max_d && final_d < 0; ++d) {
    for (long k = -d; k <= d; k += 2) {
      long x;
      if (k == -d || (k != d && v[k - 1 + offset] < v[k + 1 + offset])) {
        x = v[k + 1 + offset];
      } else {
        x = v[k - 1 + offset] + 1;
      }
      long y = x - k;
      while (x < n && y < m && a[x] == b[y]) {
        ++x;
        ++y;
      }
      v[k + offset] = x;
      if (x >= n && y >= m) {
        final_d = d;
        break;
      }
    }
    trace.emplace_back(v.begin() + (offset - d), v.begin() + (offset + d + 1));
  }

  // Walk the trace backwards; frontier for round d covers diagonals [-d, d].
  auto frontier = [&](long d, long k) { return trace[d][k + d]; };
  long x = n;
  long y = m;
  for (long d = final_d; d > 0; --d) {
    const long k = x - y;
    long prev_k;
    if (k == -d || (k != d && frontier(d - 1, k - 1) < frontier(d - 1, k + 1))) {
      prev_k = k + 1;
    } else {
      prev_k = k - 1;
    }
    const long prev_x = frontier(d - 1, prev_k);
    const long prev_y = prev_x - prev_k;
    while (x > prev_x && y > prev_y) {
      ops.push_back(EditOp::equal);
      --x;
      --y;
    }
    ops.push_back(x == prev_x ? EditOp::insert : EditOp::remove);
    x = prev_x;
    y = prev_y;
  }
  while (x > 0 && y > 0) {
    ops.push_back(EditOp::equal);
    --x;
    --y;
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

}  // namespace

Delta compute_delta(std::string_view old_text, std::string_view new_text) {
  const auto old_lines = split_lines(old_text);
  const auto new_lines = split_lines(new_text);

  std::size_t prefix = 0;
  while (prefix < old_lines.size() && prefix < new_lines.size() &&
         old_lines[prefix] == new_lines[prefix]) {
    ++prefix;
  }
  std::size_t suffix = 0;
  while (suffix < old_lines.size() - prefix &&
         suffix < new_lines.size() - prefix &&
         old_lines[old_lines.size() - 1 - suffix] ==
             new_lines[new_lines.size() - 1 - suffix]) {
    ++suffix;
  }

  // Intern the middle sections so the edit-graph walk compares ints; the
  // map keys are the exact line contents.
  std::unordered_map<std::string_view, int> ids;
  auto intern = [&](std::string_view line) {
    auto [it, inserted] = ids.try_emplace(line, static_cast<int>(ids.size()));
    return it->second;
  };
  std::vector<int> a;
  std::vector<int> b;
  a.reserve(old_lines.size() - prefix - suffix);
  b.reserve(new_lines.size() - prefix - suffix);
  for (std::size_t i = prefix; i < old_lines.size() - suffix; ++i) {
    a.push_back(intern(old_lines[i]));
  }
  for (std::size_t i = prefix; i < new_lines.size() - suffix; ++i) {
    b.push_back(intern(new_lines[i]));
  }

  const auto ops = myers_script(a, b);

  Delta delta;
  std::size_t x = prefix;
  std::size_t y = prefix;
  std::optional<Hunk> open;
  auto close = [&] {
    if (!open) return;
    open->old_count = open->removed.size();
    open->new_count = open->added.size();
    if (open->old_count > 0) ++open->old_start;
    if (open->new_count > 0) ++open->new_start;
    delta.hunks.push_back(std::move(*open));
    open.reset();
  };
  for (const EditOp op : ops) {
    if (op == EditOp::equal) {
      close();
      ++x;
      ++y;
      continue;
    }
    if (!open) {
      open.emplace();
      open->old_start = x;
      open->new_start = y;
    }
    if (op == EditOp::remove) {
      open->removed.emplace_back(old_lines[x++]);
    } else {
      open->added.emplace_back(new_lines[y++]);
    }
  }
  close();
  return delta;
}

namespace {

void append_range(std::string& out, char sign, std::size_t start,
                  std::size_t count, bool omit_unit) {
  out.push_back(sign);
  out += std::to_string(start);
  if (!(omit_unit && count == 1)) {
    out.push_back(',');
    out += std::to_string(count);
  }
}

}  // namespace

std::string render_delta(const Delta& delta, const DeltaStyle& style) {
  style.validate();
  std::string out;
  if (delta.empty()) return out;
  if (style.emit_file_headers) {
    out += "--- " + style.old_label + "\n+++ " + style.new_label + "\n";
  }
  bool first = true;
  for (const auto& h : delta.hunks) {
    if (!first) out.push_back('\n');
    first = false;
    out += style.hunk_delimiter;
    out.push_back(' ');
    append_range(out, '-', h.old_start, h.old_count, style.omit_unit_count);
    out.push_back(' ');
    append_range(out, '+', h.new_start, h.new_count, style.omit_unit_count);
    out.push_back(' ');
    out += style.hunk_delimiter;
    for (const auto& l : h.removed) {
      out += "\n-";
      out += l;
    }
    for (const auto& l : h.added) {
      out += "\n+";
      out += l;
    }
  }
  return out;
}

namespace {

std::optional<std::size_t> take_number(std::string_view& s) {
  std::size_t value = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr == first) return std::nullopt;
  s.remove_prefix(static_cast<std::size_t>(ptr - first));
  return value;
}

bool take_literal(std::string_view& s, std::string_view lit) {
  if (s.substr(0, lit.size()) != lit) return false;
  s.remove_prefix(lit.size());
  return true;
}

// "-A[,n]" or "+B[,m]"; a missing count means one line.
bool take_range(std::string_view& s, char sign, std::size_t& start,
                std::size_t& count) {
  if (s.empty() || s.front() != sign) return false;
  s.remove_prefix(1);
  const auto st = take_number(s);
  if (!st) return false;
  start = *st;
  count = 1;
  if (take_literal(s, ",")) {
    const auto c = take_number(s);
    if (!c) return false;
    count = *c;
  }
  return true;
}

std::optional<Hunk> parse_header(std::string_view line, std::string_view delim) {
  Hunk h;
  if (!take_literal(line, delim) || !take_literal(line, " ")) return std::nullopt;
  if (!take_range(line, '-', h.old_start, h.old_count)) return std::nullopt;
  if (!take_literal(line, " ")) return std::nullopt;
  if (!take_range(line, '+', h.new_start, h.new_count)) return std::nullopt;
  if (!take_literal(line, " ") || line != delim) return std::nullopt;
  return h;
}

// 0-based index of the first old line a hunk touches.
std::size_t old_anchor(const Hunk& h) {
  return h.old_count > 0 ? h.old_start - 1 : h.old_start;
}

}  // namespace

Delta parse_delta(std::string_view text, const DeltaStyle& style) {
  style.validate();
  Delta delta;
  auto lines = split_lines(text);
  if (!lines.empty() && lines.back().empty()) lines.pop_back();

  std::size_t i = 0;
  if (lines.size() >= 2 && lines[0].starts_with("--- ") &&
      lines[1].starts_with("+++ ")) {
    i = 2;
  }
  std::size_t prev_end = 0;
  while (i < lines.size()) {
    const std::size_t header_line_no = i + 1;
    auto header = parse_header(lines[i], style.hunk_delimiter);
    if (!header) {
      const std::string_view l = lines[i];
      if (!delta.empty() && (l.starts_with("-") || l.starts_with("+"))) {
        throw MalformedDelta(header_line_no,
                             "more lines than the hunk header counts");
      }
      if (l.starts_with(style.hunk_delimiter)) {
        throw MalformedDelta(header_line_no, "unrecognized hunk header syntax");
      }
      throw MalformedDelta(header_line_no, "expected a hunk header");
    }
    Hunk h = std::move(*header);
    if (h.old_count + h.new_count == 0) {
      throw MalformedDelta(header_line_no, "empty hunk");
    }
    if ((h.old_count > 0 && h.old_start == 0) ||
        (h.new_count > 0 && h.new_start == 0)) {
      throw MalformedDelta(header_line_no, "line index 0 with nonzero count");
    }
    if (!delta.empty() && old_anchor(h) < prev_end) {
      throw MalformedDelta(header_line_no, "hunks overlap or are out of order");
    }
    ++i;
    for (std::size_t r = 0; r < h.old_count; ++r, ++i) {
      if (i >= lines.size()) {
        throw MalformedDelta(i + 1, "fewer removed lines than the header counts");
      }
      if (!lines[i].starts_with("-")) {
        throw MalformedDelta(i + 1, lines[i].starts_with("+")
                                        ? "fewer removed lines than the header counts"
                                        : "expected a '-' line");
      }
      h.removed.emplace_back(lines[i].substr(1));
    }
    for (std::size_t a = 0; a < h.new_count; ++a, ++i) {
      if (i >= lines.size()) {
        throw MalformedDelta(i + 1, "fewer added lines than the header counts");
      }
      if (!lines[i].starts_with("+")) {
        throw MalformedDelta(i + 1, lines[i].starts_with("-")
                                        ? "more removed lines than the header counts"
                                        : "expected a '+' line");
      }
      h.added.emplace_back(lines[i].substr(1));
    }
    prev_end = old_anchor(h) + h.old_count;
    delta.hunks.push_back(std::move(h));
  }
  return delta;
}

std::string apply_delta(std::string_view old_text, const Delta& delta) {
  const auto old_lines = split_lines(old_text);
  std::vector<std::string> out;
  out.reserve(old_lines.size() + delta.changed_lines());
  std::size_t cursor = 0;
  for (std::size_t hi = 0; hi < delta.hunks.size(); ++hi) {
    const Hunk& h = delta.hunks[hi];
    if (h.removed.size() != h.old_count || h.added.size() != h.new_count) {
      throw PatchConflict(hi, "line lists disagree with counts");
    }
    if (h.old_count > 0 && h.old_start == 0) {
      throw PatchConflict(hi, "line index 0 with nonzero count");
    }
    const std::size_t begin = old_anchor(h);
    if (begin < cursor) throw PatchConflict(hi, "hunks overlap or are out of order");
    if (begin + h.old_count > old_lines.size()) {
      throw PatchConflict(hi, "hunk extends past the end of the text");
    }
    for (std::size_t r = 0; r < h.old_count; ++r) {
      if (old_lines[begin + r] != h.removed[r]) {
        throw PatchConflict(hi, "removed line " + std::to_string(begin + r + 1) +
                                    " does not match");
      }
    }
    for (std::size_t i = cursor; i < begin; ++i) out.emplace_back(old_lines[i]);
    for (const auto& l : h.added) out.push_back(l);
    cursor = begin + h.old_count;
  }
  for (std::size_t i = cursor; i < old_lines.size(); ++i) {
    out.emplace_back(old_lines[i]);
  }
  return join_lines(out);
}

Delta invert_delta(const Delta& delta) {
  Delta inv;
  inv.hunks.reserve(delta.hunks.size());
  for (const auto& h : delta.hunks) {
    inv.hunks.push_back(Hunk{h.new_start, h.new_count, h.old_start, h.old_count,
                             h.added, h.removed});
  }
  return inv;
}

}  // namespace diffhist
