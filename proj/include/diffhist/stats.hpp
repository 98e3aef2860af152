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
#include <stdexcept>
#include <vector>

namespace diffhist {

class EmptyStream : public std::invalid_argument {
 public:
  EmptyStream() : std::invalid_argument("statistics requested over an empty stream") {}
};

struct StatsReport {
  std::uint64_t count = 0;
  std::uint64_t min = 0;
  std::uint64_t max = 0;
  double median = 0.0;
  double mean = 0.0;
  // Population standard deviation.
  double stddev = 0.0;
  std::uint64_t total = 0;
};

// Exact order statistics over non-negative integer samples. Sums are kept in
// integers, so merging shards in any order gives bit-identical reports.
class StatsAccumulator {
 public:
  void add(std::uint64_t value);
  void merge(const StatsAccumulator& other);

  bool empty() const { return values_.empty(); }
  std::uint64_t count() const { return values_.size(); }
  std::uint64_t total() const { return sum_; }

  // Throws EmptyStream when nothing was added.
  StatsReport report() const;

 private:
  std::vector<std::uint64_t> values_;
  std::uint64_t sum_ = 0;
  unsigned __int128 sum_sq_ = 0;
};

}  // namespace diffhist
