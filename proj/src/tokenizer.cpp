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

#include "diffhist/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include <json.hpp>

namespace diffhist {

// ---------------------------------------------------------------------------
// Tokenizer

std::optional<TokenId> Tokenizer::special_id(std::string_view token) const {
  const auto it = specials_.find(token);
  if (it == specials_.end()) return std::nullopt;
  return it->second;
}

void Tokenizer::adopt_special(const std::string& token, TokenId id) {
  specials_.emplace(token, id);
  special_text_.emplace(id, token);
}

void Tokenizer::register_special_tokens(const std::vector<std::string>& markers) {
  for (const auto& m : markers) {
    if (m.empty()) throw std::invalid_argument("special token must be non-empty");
    if (specials_.contains(m) || is_base_token(m)) throw DuplicateSpecial(m);
  }
  for (std::size_t i = 0; i < markers.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (markers[i] == markers[j]) throw DuplicateSpecial(markers[i]);
    }
  }
  for (const auto& m : markers) adopt_special(m, allocate_special(m));
}

std::vector<TokenSpan> Tokenizer::encode_with_offsets(std::string_view text) const {
  std::vector<TokenSpan> out;
  if (specials_.empty()) {
    encode_ordinary(text, 0, out);
    return out;
  }
  std::vector<std::pair<std::string_view, TokenId>> specials;
  specials.reserve(specials_.size());
  for (const auto& [s, id] : specials_) specials.emplace_back(s, id);
  std::vector<std::size_t> next(specials.size());
  for (std::size_t i = 0; i < specials.size(); ++i) next[i] = text.find(specials[i].first);

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t best = std::string_view::npos;
    std::size_t best_start = std::string_view::npos;
    for (std::size_t i = 0; i < specials.size(); ++i) {
      if (next[i] < pos) next[i] = text.find(specials[i].first, pos);
      if (next[i] == std::string_view::npos) continue;
      if (next[i] < best_start ||
          (next[i] == best_start && specials[i].first.size() > specials[best].first.size())) {
        best = i;
        best_start = next[i];
      }
    }
    if (best == std::string_view::npos) {
      encode_ordinary(text.substr(pos), pos, out);
      break;
    }
    if (best_start > pos) encode_ordinary(text.substr(pos, best_start - pos), pos, out);
    const std::size_t end = best_start + specials[best].first.size();
    out.push_back(TokenSpan{specials[best].second, best_start, end});
    pos = end;
  }
  return out;
}

TokenSequence Tokenizer::encode(std::string_view text) const {
  const auto spans = encode_with_offsets(text);
  TokenSequence ids;
  ids.reserve(spans.size());
  for (const auto& s : spans) ids.push_back(s.id);
  return ids;
}

std::string Tokenizer::decode(std::span<const TokenId> tokens) const {
  std::string out;
  for (const TokenId id : tokens) {
    if (const auto it = special_text_.find(id); it != special_text_.end()) {
      out += it->second;
    } else {
      append_decoded(id, out);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unicode classes for the pre-tokenizer

namespace {

struct CodepointRange {
  char32_t first;
  char32_t last;
};

#include "unicode_tables.inc"

constexpr CodepointRange kWhiteSpaceRanges[] = {
    {0x09, 0x0D}, {0x20, 0x20},     {0x85, 0x85},     {0xA0, 0xA0},
    {0x1680, 0x1680}, {0x2000, 0x200A}, {0x2028, 0x2029}, {0x202F, 0x202F},
    {0x205F, 0x205F}, {0x3000, 0x3000},
};

template <std::size_t N>
bool in_ranges(const CodepointRange (&ranges)[N], char32_t cp) {
  const auto* it = std::upper_bound(std::begin(ranges), std::end(ranges), cp,
                                    [](char32_t v, const CodepointRange& r) { return v < r.first; });
  if (it == std::begin(ranges)) return false;
  --it;
  return cp <= it->last;
}

enum class CharClass : unsigned char { letter, number, space, other };

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one UTF-8 sequence; malformed bytes come back as kInvalid, length 1.
std::pair<char32_t, std::size_t> next_codepoint(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  std::size_t len;
  char32_t cp;
  char32_t min;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    return {kInvalid, 1};
  }
  if (i + len > s.size()) return {kInvalid, 1};
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return {kInvalid, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return {kInvalid, 1};
  return {cp, len};
}

CharClass classify(char32_t cp) {
  if (cp == kInvalid) return CharClass::other;
  if (in_ranges(kWhiteSpaceRanges, cp)) return CharClass::space;
  if (in_ranges(kLetterRanges, cp)) return CharClass::letter;
  if (in_ranges(kNumberRanges, cp)) return CharClass::number;
  return CharClass::other;
}

struct CharInfo {
  std::size_t offset;
  std::size_t len;
  char32_t cp;
  CharClass cls;
};

// GPT-2 byte-level mapping: printable Latin-1 bytes map to themselves, the
// rest to U+0100 upwards in byte order.
std::array<char32_t, 256> byte_to_codepoint_table() {
  std::array<char32_t, 256> table{};
  std::array<bool, 256> direct{};
  for (int b = '!'; b <= '~'; ++b) direct[b] = true;
  for (int b = 0xA1; b <= 0xAC; ++b) direct[b] = true;
  for (int b = 0xAE; b <= 0xFF; ++b) direct[b] = true;
  char32_t n = 0;
  for (int b = 0; b < 256; ++b) table[b] = direct[b] ? static_cast<char32_t>(b) : 256 + n++;
  return table;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

std::uint64_t pair_key(TokenId a, TokenId b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// BpeTokenizer

std::vector<std::pair<std::size_t, std::size_t>> BpeTokenizer::pre_split(std::string_view text) {
  std::vector<CharInfo> chars;
  chars.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const auto [cp, len] = next_codepoint(text, i);
    chars.push_back(CharInfo{i, len, cp, classify(cp)});
    i += len;
  }
  const std::size_t n = chars.size();
  auto byte_at = [&](std::size_t ci) { return ci < n ? chars[ci].offset : text.size(); };
  auto run_end = [&](std::size_t ci, CharClass cls) {
    while (ci < n && chars[ci].cls == cls) ++ci;
    return ci;
  };

  std::vector<std::pair<std::size_t, std::size_t>> pieces;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    const CharInfo& c = chars[i];
    if (c.cp == U'\'' && i + 1 < n) {
      const std::string_view rest = text.substr(c.offset + 1);
      for (const std::string_view suffix : {"s", "t", "re", "ve", "m", "ll", "d"}) {
        if (rest.starts_with(suffix)) {
          j = i + 1 + suffix.size();  // suffixes are ASCII
          break;
        }
      }
    }
    if (j == i) {
      // " ?" prefix, then a run of letters, numbers or other symbols.
      std::size_t k = i;
      if (c.cp == U' ' && i + 1 < n && chars[i + 1].cls != CharClass::space) k = i + 1;
      if (chars[k].cls != CharClass::space) j = run_end(k, chars[k].cls);
    }
    if (j == i) {
      // Whitespace run: leave its last character to prefix a following word.
      const std::size_t end = run_end(i, CharClass::space);
      if (end == n || end - i == 1) {
        j = end;
      } else {
        j = end - 1;
      }
    }
    pieces.emplace_back(byte_at(i), byte_at(j));
    i = j;
  }
  return pieces;
}

std::unique_ptr<BpeTokenizer> BpeTokenizer::load(const std::filesystem::path& vocab_file,
                                                 const std::filesystem::path& merges_file) {
  return from_strings(read_file(vocab_file), read_file(merges_file));
}

std::unique_ptr<BpeTokenizer> BpeTokenizer::from_strings(std::string_view vocab_json,
                                                         std::string_view merges_text) {
  std::unique_ptr<BpeTokenizer> tok(new BpeTokenizer());

  nlohmann::json vocab;
  try {
    vocab = nlohmann::json::parse(vocab_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw BadVocab(line_of_offset(vocab_json, e.byte), e.what());
  }
  if (!vocab.is_object()) throw BadVocab(1, "vocabulary must be a JSON object");

  const auto byte_cp = byte_to_codepoint_table();
  std::unordered_map<char32_t, unsigned char> cp_byte;
  for (int b = 0; b < 256; ++b) cp_byte.emplace(byte_cp[b], static_cast<unsigned char>(b));

  auto locate = [&](const std::string& key) {
    const std::size_t pos = vocab_json.find(nlohmann::json(key).dump());
    return pos == std::string_view::npos ? std::size_t{0} : line_of_offset(vocab_json, pos);
  };

  TokenId max_id = -1;
  for (const auto& [key, value] : vocab.items()) {
    if (!value.is_number_integer() || value.get<std::int64_t>() < 0 ||
        value.get<std::int64_t>() > std::numeric_limits<TokenId>::max() / 2) {
      throw BadVocab(locate(key), "id for '" + key + "' is not a non-negative integer");
    }
    const auto id = static_cast<TokenId>(value.get<std::int64_t>());
    std::string bytes;
    for (std::size_t i = 0; i < key.size();) {
      const auto [cp, len] = next_codepoint(key, i);
      const auto it = cp_byte.find(cp);
      if (it == cp_byte.end()) {
        throw BadVocab(locate(key), "token '" + key + "' is not in the byte-level alphabet");
      }
      bytes.push_back(static_cast<char>(it->second));
      i += len;
    }
    if (static_cast<std::size_t>(id) >= tok->id_to_bytes_.size()) {
      tok->id_to_bytes_.resize(static_cast<std::size_t>(id) + 1);
    }
    if (!tok->token_to_id_.emplace(key, id).second) {
      throw BadVocab(locate(key), "duplicate token '" + key + "'");
    }
    tok->id_to_bytes_[static_cast<std::size_t>(id)] = std::move(bytes);
    max_id = std::max(max_id, id);
  }
  for (int b = 0; b < 256; ++b) {
    std::string key;
    append_utf8(key, byte_cp[b]);
    const auto it = tok->token_to_id_.find(key);
    if (it == tok->token_to_id_.end()) {
      throw BadVocab(0, "vocabulary lacks the single-byte token for byte " + std::to_string(b));
    }
    tok->byte_token_[b] = it->second;
  }
  tok->next_id_ = max_id + 1;

  std::uint32_t rank = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= merges_text.size()) {
    std::size_t nl = merges_text.find('\n', pos);
    if (nl == std::string_view::npos) nl = merges_text.size();
    std::string_view line = merges_text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1 && line.starts_with("#version")) continue;
    const std::size_t sp = line.find(' ');
    if (sp == std::string_view::npos || sp == 0 || sp + 1 >= line.size() ||
        line.find(' ', sp + 1) != std::string_view::npos) {
      throw BadMerges(line_no, "expected two space-separated symbols");
    }
    const std::string left(line.substr(0, sp));
    const std::string right(line.substr(sp + 1));
    const auto l = tok->token_to_id_.find(left);
    const auto r = tok->token_to_id_.find(right);
    if (l == tok->token_to_id_.end() || r == tok->token_to_id_.end()) {
      throw BadMerges(line_no, "symbol not in vocabulary");
    }
    const auto merged = tok->token_to_id_.find(left + right);
    if (merged == tok->token_to_id_.end()) {
      throw BadMerges(line_no, "merged symbol '" + left + right + "' not in vocabulary");
    }
    tok->merges_.try_emplace(pair_key(l->second, r->second), rank++, merged->second);
  }

  if (const auto eot = tok->token_to_id_.find("<|endoftext|>"); eot != tok->token_to_id_.end()) {
    tok->adopt_special("<|endoftext|>", eot->second);
  }
  return tok;
}

std::size_t BpeTokenizer::vocab_size() const { return static_cast<std::size_t>(next_id_); }

bool BpeTokenizer::is_base_token(std::string_view piece) const {
  // Compare against the byte-mapped form.
  const auto table = byte_to_codepoint_table();
  std::string key;
  for (const char c : piece) append_utf8(key, table[static_cast<unsigned char>(c)]);
  return token_to_id_.contains(key);
}

TokenId BpeTokenizer::allocate_special(const std::string& token) {
  const TokenId id = next_id_++;
  id_to_bytes_.resize(static_cast<std::size_t>(next_id_));
  id_to_bytes_[static_cast<std::size_t>(id)] = token;
  return id;
}

std::vector<TokenId> BpeTokenizer::bpe(std::string_view piece) const {
  {
    std::shared_lock lock(cache_mutex_);
    if (const auto it = cache_.find(std::string(piece)); it != cache_.end()) return it->second;
  }
  std::vector<TokenId> word;
  word.reserve(piece.size());
  for (const char c : piece) word.push_back(byte_token_[static_cast<unsigned char>(c)]);

  std::vector<TokenId> next;
  while (word.size() > 1) {
    std::uint32_t best_rank = std::numeric_limits<std::uint32_t>::max();
    TokenId left = 0;
    TokenId right = 0;
    TokenId merged = 0;
    for (std::size_t i = 0; i + 1 < word.size(); ++i) {
      const auto it = merges_.find(pair_key(word[i], word[i + 1]));
      if (it != merges_.end() && it->second.first < best_rank) {
        best_rank = it->second.first;
        left = word[i];
        right = word[i + 1];
        merged = it->second.second;
      }
    }
    if (best_rank == std::numeric_limits<std::uint32_t>::max()) break;
    next.clear();
    for (std::size_t i = 0; i < word.size();) {
      if (i + 1 < word.size() && word[i] == left && word[i + 1] == right) {
        next.push_back(merged);
        i += 2;
      } else {
        next.push_back(word[i]);
        ++i;
      }
    }
    word.swap(next);
  }

  constexpr std::size_t kMaxCache = 1 << 17;
  std::unique_lock lock(cache_mutex_);
  if (cache_.size() < kMaxCache) cache_.emplace(std::string(piece), word);
  return word;
}

void BpeTokenizer::encode_ordinary(std::string_view text, std::size_t base,
                                   std::vector<TokenSpan>& out) const {
  for (const auto& [begin, end] : pre_split(text)) {
    std::size_t cursor = base + begin;
    for (const TokenId id : bpe(text.substr(begin, end - begin))) {
      const std::size_t len = id_to_bytes_[static_cast<std::size_t>(id)].size();
      out.push_back(TokenSpan{id, cursor, cursor + len});
      cursor += len;
    }
  }
}

void BpeTokenizer::append_decoded(TokenId id, std::string& out) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_bytes_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside the vocabulary");
  }
  out += id_to_bytes_[static_cast<std::size_t>(id)];
}

// ---------------------------------------------------------------------------
// WhitespaceTokenizer

namespace {
bool ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
}  // namespace

TokenId WhitespaceTokenizer::intern(std::string_view piece) const {
  {
    std::shared_lock lock(mutex_);
    if (const auto it = ids_.find(std::string(piece)); it != ids_.end()) return it->second;
  }
  std::unique_lock lock(mutex_);
  const auto [it, inserted] = ids_.try_emplace(std::string(piece), static_cast<TokenId>(pieces_.size()));
  if (inserted) pieces_.emplace_back(piece);
  return it->second;
}

void WhitespaceTokenizer::encode_ordinary(std::string_view text, std::size_t base,
                                          std::vector<TokenSpan>& out) const {
  if (text.empty()) return;
  // Token boundaries sit at the start of every word but the first.
  std::vector<std::size_t> cuts{0};
  bool seen_word = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const bool word_start = !ascii_space(text[i]) && (i == 0 || ascii_space(text[i - 1]));
    if (!word_start) continue;
    if (seen_word) cuts.push_back(i);
    seen_word = true;
  }
  cuts.push_back(text.size());
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const std::string_view piece = text.substr(cuts[k], cuts[k + 1] - cuts[k]);
    out.push_back(TokenSpan{intern(piece), base + cuts[k], base + cuts[k + 1]});
  }
}

void WhitespaceTokenizer::append_decoded(TokenId id, std::string& out) const {
  std::shared_lock lock(mutex_);
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " outside the vocabulary");
  }
  out += pieces_[static_cast<std::size_t>(id)];
}

bool WhitespaceTokenizer::is_base_token(std::string_view piece) const {
  std::shared_lock lock(mutex_);
  return ids_.contains(std::string(piece));
}

TokenId WhitespaceTokenizer::allocate_special(const std::string& token) { return intern(token); }

std::size_t WhitespaceTokenizer::vocab_size() const {
  std::shared_lock lock(mutex_);
  return pieces_.size();
}

}  // namespace diffhist
