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
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffhist/formatting.hpp"
#include "diffhist/history.hpp"
#include "diffhist/masking.hpp"
#include "diffhist/stats.hpp"
#include "diffhist/tokenizer.hpp"

namespace diffhist {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(reason) {}
  std::size_t line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

// Trajectory wire format: one JSON object per line,
//   {"id": str, "instruction": str, "observations": [str], "actions": [str]}
nlohmann::ordered_json trajectory_to_json(const Trajectory& t);
// Throws ParseError (line 0) on schema violations.
Trajectory trajectory_from_json(const nlohmann::json& j);

// Streams trajectories one line at a time. In strict mode the first bad
// record throws ParseError; otherwise it is recorded in errors() and skipped.
class TrajectoryReader {
 public:
  TrajectoryReader(std::istream& in, bool strict);

  std::optional<Trajectory> next();
  const std::vector<ParseError>& errors() const { return errors_; }

 private:
  std::istream& in_;
  bool strict_;
  std::size_t line_no_ = 0;
  std::vector<ParseError> errors_;
};

std::vector<Trajectory> read_trajectories(const std::filesystem::path& path, bool strict = true);
void write_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& ts);

enum class Sampling : unsigned char { contiguous_partition, uniform_random };

struct ChunkConfig {
  std::size_t horizon = 4;
  Sampling sampling = Sampling::contiguous_partition;
  // uniform_random: windows drawn per trajectory, with replacement.
  std::size_t samples_per_trajectory = 1;
  std::uint64_t seed = 0;
  HistoryFormat format = HistoryFormat::diff_history;
  Supervision supervision = Supervision::action_only;
  std::size_t context_length = 1024;
  TokenId pad_token_id = 0;
  MarkerConfig markers;
  unsigned jobs = 1;

  void validate() const;
};

// contiguous_partition: ceil(T/H) windows, the last possibly shorter.
// uniform_random: starts uniform on [0, max(0, T-H)], length min(H, T-start),
// from a generator seeded by (seed, trajectory id). Returned sorted by start.
std::vector<Window> make_windows(const Trajectory& t, const ChunkConfig& cfg);

struct SampleMeta {
  std::string trajectory_id;
  std::size_t window_start = 0;
  std::size_t h = 0;
  HistoryFormat format = HistoryFormat::full_text;
  bool truncated = false;

  bool operator==(const SampleMeta&) const = default;
};

// tokens and mask have exactly context_length entries.
struct DatasetSample {
  TokenSequence tokens;
  LossMask mask;
  SampleMeta meta;
  std::size_t unpadded_length = 0;
};

// Token statistics with the row names of the reference dataset tables.
struct DatasetStats {
  StatsAccumulator per_demo;
  StatsAccumulator per_observation;
  StatsAccumulator per_action;
  std::uint64_t supervised_tokens = 0;
  std::uint64_t truncated_samples = 0;

  void merge(const DatasetStats& other);
};

struct DatasetManifest {
  std::size_t sample_count = 0;
  std::size_t horizon = 0;
  std::size_t context_length = 0;
  HistoryFormat format = HistoryFormat::full_text;
  Supervision supervision = Supervision::action_only;
  DatasetStats stats;

  nlohmann::ordered_json to_json() const;
};

// Render (every action terminated), tokenize, mask, then pad or truncate on
// the right to context_length. Adds to *stats when given.
DatasetSample make_sample(const Window& window, const ChunkConfig& cfg, const Tokenizer& tok,
                          DatasetStats* stats = nullptr);

nlohmann::ordered_json sample_to_json(const DatasetSample& s);
DatasetSample sample_from_json(const nlohmann::json& j);
std::vector<DatasetSample> read_samples(const std::filesystem::path& path);

// Writes one sample per line in trajectory order, windows by start.
DatasetManifest emit_dataset(TrajectoryReader& reader, const ChunkConfig& cfg,
                             const Tokenizer& tok, std::ostream& out);
// File variant; also writes the manifest next to the samples as
// "<out>.manifest.json". Throws std::runtime_error on I/O failure.
DatasetManifest emit_dataset(const std::filesystem::path& in, const ChunkConfig& cfg,
                             const Tokenizer& tok, const std::filesystem::path& out,
                             bool strict = true);

// Per-observation token counts across trajectories: every raw observation
// for full text, every rendered delta (steps after the first) for diff.
struct CompressionReport {
  StatsReport full_text;
  StatsReport diff;
};
CompressionReport observation_compression(const std::vector<Trajectory>& ts, const Tokenizer& tok,
                                          const DeltaStyle& style = {});

}  // namespace diffhist
