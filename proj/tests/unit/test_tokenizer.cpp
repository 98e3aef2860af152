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

#include <doctest.h>

#include <fstream>
#include <thread>

#include <json.hpp>

#include "diffhist/tokenizer.hpp"
#include "key_example.hpp"
#include "random_docs.hpp"

using namespace diffhist;

namespace {

const BpeTokenizer& gpt2() {
  static const auto tok = [] {
    auto t = BpeTokenizer::load(testing::test_data("gpt2/encoder.json"),
                                testing::test_data("gpt2/vocab.bpe"));
    t->register_special_tokens({"<|action|>", "<|observation|>"});
    return t;
  }();
  return *tok;
}

void check_tiling(const std::vector<TokenSpan>& spans, std::size_t size) {
  std::size_t pos = 0;
  for (const auto& s : spans) {
    REQUIRE(s.char_start == pos);
    REQUIRE(s.char_end > s.char_start);
    pos = s.char_end;
  }
  CHECK(pos == size);
}

}  // namespace

TEST_SUITE("tokenizer") {

TEST_CASE("gpt-2 vocabulary loads") {
  const auto& tok = gpt2();
  CHECK(tok.vocab_size() == 50257 + 2);
  CHECK(tok.merge_count() == 50000);
  CHECK(tok.special_id("<|endoftext|>") == 50256);
  CHECK(tok.special_id("<|action|>") == 50257);
  CHECK(tok.special_id("<|observation|>") == 50258);
  CHECK(tok.encode("hello world") == TokenSequence{31373, 995});
}

TEST_CASE("matches the reference encoder") {
  std::ifstream in(testing::test_data("bpe_reference.json"));
  const auto ref = nlohmann::json::parse(in);
  REQUIRE(ref.size() == 50);
  // The reference encoder treats the marker text as ordinary text.
  auto plain = BpeTokenizer::load(testing::test_data("gpt2/encoder.json"),
                                  testing::test_data("gpt2/vocab.bpe"));
  for (const auto& r : ref) {
    const std::string text = r["text"];
    CAPTURE(text);
    CHECK(plain->encode(text) == r["ids"].get<TokenSequence>());
    CHECK(plain->count(text) == r["count"].get<std::size_t>());
  }
}

TEST_CASE("pre-split pieces") {
  std::vector<std::string> pieces;
  const std::string text = "I'm  here 123abc!!\n\n x";
  for (auto [b, e] : BpeTokenizer::pre_split(text)) pieces.push_back(text.substr(b, e - b));
  CHECK(pieces == std::vector<std::string>{"I", "'m", " ", " here", " 123", "abc", "!!", "\n\n",
                                           " x"});
}

TEST_CASE("specials are atomic and leftmost-longest") {
  const auto& tok = gpt2();
  const auto ids = tok.encode("a<|action|>b<|observation|>");
  REQUIRE(ids.size() == 4);
  CHECK(ids[1] == 50257);
  CHECK(ids[3] == 50258);
  CHECK(tok.decode(ids) == "a<|action|>b<|observation|>");

  WhitespaceTokenizer ws;
  ws.register_special_tokens({"<A>", "<A>>"});
  const auto sp = ws.encode_with_offsets("x<A>>y");
  REQUIRE(sp.size() == 3);
  CHECK(sp[1].char_end - sp[1].char_start == 4);
}

TEST_CASE("duplicate specials are rejected") {
  auto tok = BpeTokenizer::load(testing::test_data("gpt2/encoder.json"),
                                testing::test_data("gpt2/vocab.bpe"));
  CHECK_THROWS_AS(tok->register_special_tokens({"hello"}), DuplicateSpecial);
  CHECK_THROWS_AS(tok->register_special_tokens({"<|endoftext|>"}), DuplicateSpecial);
  tok->register_special_tokens({"<|x|>"});
  CHECK_THROWS_AS(tok->register_special_tokens({"<|x|>"}), DuplicateSpecial);
  CHECK_THROWS_AS(tok->register_special_tokens({"<|y|>", "<|y|>"}), DuplicateSpecial);
}

TEST_CASE("offsets tile the text and roundtrip") {
  testing::Gen g(8);
  const auto& tok = gpt2();
  for (int i = 0; i < 300; ++i) {
    std::string s = g.utf8(40);
    if (g.coin(0.3)) s += "<|action|>" + g.utf8(5) + "<|observation|>";
    const auto spans = tok.encode_with_offsets(s);
    check_tiling(spans, s.size());
    CHECK(tok.decode(tok.encode(s)) == s);
  }
}

TEST_CASE("invalid utf-8 bytes still roundtrip") {
  const std::string s = "ok\xff\xfe\x80 tail";
  CHECK(gpt2().decode(gpt2().encode(s)) == s);
}

TEST_CASE("malformed vocabulary and merges") {
  CHECK_THROWS_AS(BpeTokenizer::from_strings("[1,2]", ""), BadVocab);
  CHECK_THROWS_AS(BpeTokenizer::from_strings("{\"a\": \"x\"}", ""), BadVocab);
  std::ifstream in(testing::test_data("gpt2/encoder.json"));
  const std::string vocab((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(BpeTokenizer::from_strings(vocab, "#version: 0.2\nh e\n")->merge_count() == 1);
  try {
    BpeTokenizer::from_strings(vocab, "#version: 0.2\nh e\na b c\n");
    FAIL("expected BadMerges");
  } catch (const BadMerges& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(BpeTokenizer::from_strings(vocab, "h \xe2\x8a\xa5\n"), BadMerges);
  CHECK_THROWS_AS(BpeTokenizer::from_strings(vocab, "zzzzzzzzzz zzzzzzzzzz\n"), BadMerges);
  CHECK_THROWS_AS(BpeTokenizer::load("/nonexistent/v.json", "/nonexistent/m.txt"),
                  std::runtime_error);
}

TEST_CASE("whitespace tokenizer") {
  WhitespaceTokenizer tok;
  tok.register_special_tokens({"<|action|>", "<|observation|>"});
  const std::string s = "  lead word\n\nnext <|action|>go forward\n";
  const auto spans = tok.encode_with_offsets(s);
  check_tiling(spans, s.size());
  std::vector<std::string> pieces;
  for (const auto& sp : spans) pieces.push_back(s.substr(sp.char_start, sp.char_end - sp.char_start));
  CHECK(pieces == std::vector<std::string>{"  lead ", "word\n\n", "next ", "<|action|>", "go ",
                                           "forward\n"});
  CHECK(tok.count("   ") == 1);
  CHECK(tok.count("") == 0);
  CHECK(tok.decode(tok.encode(s)) == s);
  CHECK(tok.encode("word\n\n") == tok.encode("word\n\n"));
  CHECK_FALSE(tok.stable_ids());
}

TEST_CASE("concurrent encoding agrees with sequential") {
  const auto& tok = gpt2();
  testing::Gen g(2);
  std::vector<std::string> texts(64);
  for (auto& t : texts) t = g.utf8(60);
  std::vector<TokenSequence> want;
  for (const auto& t : texts) want.push_back(tok.encode(t));
  std::vector<TokenSequence> got(texts.size());
  std::vector<std::thread> ts;
  for (int w = 0; w < 4; ++w) {
    ts.emplace_back([&, w] {
      for (std::size_t i = w; i < texts.size(); i += 4) got[i] = tok.encode(texts[i]);
    });
  }
  for (auto& t : ts) t.join();
  CHECK(got == want);
}

}  // TEST_SUITE
