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
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ranges>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "diffhist/stats.hpp"

namespace diffhist {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

// A token and the byte range [char_start, char_end) of the input it covers.
struct TokenSpan {
  TokenId id;
  std::size_t char_start;
  std::size_t char_end;

  bool operator==(const TokenSpan&) const = default;
};

class BadVocab : public std::runtime_error {
 public:
  BadVocab(std::size_t line, const std::string& reason)
      : std::runtime_error("vocab line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class BadMerges : public std::runtime_error {
 public:
  BadMerges(std::size_t line, const std::string& reason)
      : std::runtime_error("merges line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DuplicateSpecial : public std::invalid_argument {
 public:
  explicit DuplicateSpecial(const std::string& token)
      : std::invalid_argument("special token '" + token + "' is already in the vocabulary") {}
};

// Common surface of every tokenizer. Registered special tokens are matched
// first (leftmost, then longest) and always encode to one id; the text
// between them goes through the subclass's ordinary encoder.
//
// Registration is a setup step. After it, encode/decode are safe to call from
// many threads.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  std::vector<TokenSpan> encode_with_offsets(std::string_view text) const;
  TokenSequence encode(std::string_view text) const;
  std::string decode(std::span<const TokenId> tokens) const;
  std::size_t count(std::string_view text) const { return encode_with_offsets(text).size(); }

  virtual std::size_t vocab_size() const = 0;

  const std::map<std::string, TokenId, std::less<>>& special_tokens() const { return specials_; }
  std::optional<TokenId> special_id(std::string_view token) const;

  // Each marker becomes one atomic token with a fresh id. Throws
  // DuplicateSpecial if a marker is already registered or already a single
  // token of the base vocabulary.
  void register_special_tokens(const std::vector<std::string>& markers);

  // False when ids depend on the order in which text was first seen, so
  // callers that need reproducible ids must encode sequentially.
  virtual bool stable_ids() const { return true; }

 protected:
  virtual void encode_ordinary(std::string_view text, std::size_t base,
                               std::vector<TokenSpan>& out) const = 0;
  virtual void append_decoded(TokenId id, std::string& out) const = 0;
  virtual bool is_base_token(std::string_view piece) const = 0;
  // Id for a newly registered special token.
  virtual TokenId allocate_special(const std::string& token) = 0;
  // Records a special that already has an id (for example a vocabulary's
  // end-of-text entry).
  void adopt_special(const std::string& token, TokenId id);

 private:
  std::map<std::string, TokenId, std::less<>> specials_;
  std::unordered_map<TokenId, std::string> special_text_;
};

// Byte-level BPE: bytes map to printable code points, text is pre-split with
// the contraction / letters / numbers / other / whitespace pattern, and each
// piece is merged greedily by merge rank.
class BpeTokenizer final : public Tokenizer {
 public:
  // vocab: JSON object token -> id. merges: one "left right" pair per line,
  // optional "#version" header.
  static std::unique_ptr<BpeTokenizer> load(const std::filesystem::path& vocab_file,
                                            const std::filesystem::path& merges_file);
  static std::unique_ptr<BpeTokenizer> from_strings(std::string_view vocab_json,
                                                    std::string_view merges_text);

  std::size_t vocab_size() const override;
  std::size_t merge_count() const { return merges_.size(); }

  // Pre-tokenizer pieces as byte ranges; exposed for tests.
  static std::vector<std::pair<std::size_t, std::size_t>> pre_split(std::string_view text);

 protected:
  void encode_ordinary(std::string_view text, std::size_t base,
                       std::vector<TokenSpan>& out) const override;
  void append_decoded(TokenId id, std::string& out) const override;
  bool is_base_token(std::string_view piece) const override;
  TokenId allocate_special(const std::string& token) override;

 private:
  BpeTokenizer() = default;
  std::vector<TokenId> bpe(std::string_view piece) const;

  std::unordered_map<std::string, TokenId> token_to_id_;  // byte-mapped form
  std::vector<std::string> id_to_bytes_;                  // raw bytes per id
  std::array<TokenId, 256> byte_token_{};
  // (left id << 32 | right id) -> (rank, merged id)
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, TokenId>> merges_;
  TokenId next_id_ = 0;

  mutable std::shared_mutex cache_mutex_;
  mutable std::unordered_map<std::string, std::vector<TokenId>> cache_;
};

// Whitespace tokenizer for fast deterministic tests. A token is a run of
// non-whitespace plus the whitespace after it; whitespace at the start of a
// span joins the first word, and a whitespace-only span is one token. Ids are
// interned on first sight.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  WhitespaceTokenizer() = default;

  std::size_t vocab_size() const override;
  bool stable_ids() const override { return false; }

 protected:
  void encode_ordinary(std::string_view text, std::size_t base,
                       std::vector<TokenSpan>& out) const override;
  void append_decoded(TokenId id, std::string& out) const override;
  bool is_base_token(std::string_view piece) const override;
  TokenId allocate_special(const std::string& token) override;

 private:
  TokenId intern(std::string_view piece) const;

  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, TokenId> ids_;
  mutable std::vector<std::string> pieces_;
};

// Token count per text, summarized. Throws EmptyStream for an empty range.
template <std::ranges::input_range R>
StatsReport token_stats(R&& texts, const Tokenizer& tok) {
  StatsAccumulator acc;
  for (const auto& t : texts) acc.add(tok.count(std::string_view(t)));
  return acc.report();
}

}  // namespace diffhist
