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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "diffhist/stats.hpp"
#include "diffhist/tokenizer.hpp"

using namespace diffhist;

TEST_SUITE("stats") {

TEST_CASE("empty stream") {
  StatsAccumulator acc;
  CHECK(acc.empty());
  CHECK_THROWS_AS(acc.report(), EmptyStream);
}

TEST_CASE("hand examples") {
  StatsAccumulator acc;
  for (const std::uint64_t v : {1, 2, 3, 4}) acc.add(v);
  const StatsReport r = acc.report();
  CHECK(r.count == 4);
  CHECK(r.min == 1);
  CHECK(r.max == 4);
  CHECK(r.median == 2.5);
  CHECK(r.mean == 2.5);
  CHECK(r.stddev == doctest::Approx(std::sqrt(1.25)));
  CHECK(r.total == 10);
  StatsAccumulator odd;
  for (const std::uint64_t v : {9, 1, 5}) odd.add(v);
  CHECK(odd.report().median == 5.0);
}

TEST_CASE("identical texts give zero spread") {
  WhitespaceTokenizer tok;
  const std::vector<std::string> texts = {"a", "a"};
  const StatsReport r = token_stats(texts, tok);
  CHECK(r.mean == 1.0);
  CHECK(r.stddev == 0.0);
  CHECK_THROWS_AS(token_stats(std::vector<std::string>{}, tok), EmptyStream);
}

TEST_CASE("merge order does not matter") {
  std::mt19937_64 rng(4);
  std::vector<std::uint64_t> values(1000);
  for (auto& v : values) v = rng() % 5000;

  StatsAccumulator whole;
  for (auto v : values) whole.add(v);
  std::vector<StatsAccumulator> shards(7);
  for (std::size_t i = 0; i < values.size(); ++i) shards[i % 7].add(values[i]);
  StatsAccumulator fwd, rev;
  for (const auto& s : shards) fwd.merge(s);
  for (auto it = shards.rbegin(); it != shards.rend(); ++it) rev.merge(*it);

  const StatsReport a = whole.report(), b = fwd.report(), c = rev.report();
  for (const auto* r : {&b, &c}) {
    CHECK(r->mean == a.mean);
    CHECK(r->stddev == a.stddev);
    CHECK(r->median == a.median);
    CHECK(r->total == a.total);
  }
  // Independent two-pass oracle.
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double ss = 0;
  for (auto v : values) ss += (v - mean) * (v - mean);
  CHECK(a.mean == doctest::Approx(mean));
  CHECK(a.stddev == doctest::Approx(std::sqrt(ss / values.size())));
  std::sort(values.begin(), values.end());
  CHECK(a.median == (values[499] + values[500]) / 2.0);
}

}  // TEST_SUITE
