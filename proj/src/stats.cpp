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

#include "diffhist/stats.hpp"

#include <algorithm>
#include <cmath>

namespace diffhist {

void StatsAccumulator::add(std::uint64_t value) {
  values_.push_back(value);
  sum_ += value;
  sum_sq_ += static_cast<unsigned __int128>(value) * value;
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  sum_ += other.sum_;
  sum_sq_ += other.sum_sq_;
}

StatsReport StatsAccumulator::report() const {
  if (values_.empty()) throw EmptyStream();
  std::vector<std::uint64_t> sorted = values_;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  StatsReport r;
  r.count = n;
  r.min = sorted.front();
  r.max = sorted.back();
  r.total = sum_;
  r.median = n % 2 == 1 ? static_cast<double>(sorted[n / 2])
                        : (static_cast<double>(sorted[n / 2 - 1]) +
                           static_cast<double>(sorted[n / 2])) / 2.0;
  r.mean = static_cast<double>(sum_) / static_cast<double>(n);
  // n * sum(x^2) - (sum x)^2 is exact and non-negative in 128-bit integers.
  const unsigned __int128 nn = n;
  const unsigned __int128 s = sum_;
  const unsigned __int128 scaled_var = nn * sum_sq_ - s * s;
  r.stddev = std::sqrt(static_cast<long double>(scaled_var)) / static_cast<long double>(n);
  return r;
}

}  // namespace diffhist
