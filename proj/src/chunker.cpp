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

#include "diffhist/chunker.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

namespace diffhist {

nlohmann::ordered_json trajectory_to_json(const Trajectory& t) {
  nlohmann::ordered_json j;
  j["id"] = t.id;
  j["instruction"] = t.instruction;
  j["observations"] = t.observations;
  j["actions"] = t.actions;
  return j;
}

namespace {

std::vector<std::string> string_array(const nlohmann::json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end()) throw ParseError(0, std::string("missing field '") + field + "'");
  if (!it->is_array()) throw ParseError(0, std::string("field '") + field + "' must be an array");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw ParseError(0, std::string("field '") + field + "' must contain only strings");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string string_field(const nlohmann::json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end()) throw ParseError(0, std::string("missing field '") + field + "'");
  if (!it->is_string()) throw ParseError(0, std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

Trajectory trajectory_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError(0, "record is not a JSON object");
  Trajectory t;
  t.id = string_field(j, "id");
  t.instruction = string_field(j, "instruction");
  t.observations = string_array(j, "observations");
  t.actions = string_array(j, "actions");
  try {
    t.validate();
  } catch (const InvalidTrajectory& e) {
    throw ParseError(0, e.what());
  }
  return t;
}

TrajectoryReader::TrajectoryReader(std::istream& in, bool strict) : in_(in), strict_(strict) {}

std::optional<Trajectory> TrajectoryReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(line_no_, e.what());
      }
      try {
        return trajectory_from_json(j);
      } catch (const ParseError& e) {
        throw ParseError(line_no_, e.reason());
      }
    } catch (const ParseError& e) {
      if (strict_) throw;
      errors_.push_back(e);
    }
  }
  return std::nullopt;
}

std::vector<Trajectory> read_trajectories(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  TrajectoryReader reader(in, strict);
  std::vector<Trajectory> out;
  while (auto t = reader.next()) out.push_back(std::move(*t));
  return out;
}

void write_trajectories(const std::filesystem::path& path, const std::vector<Trajectory>& ts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& t : ts) out << trajectory_to_json(t).dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void ChunkConfig::validate() const {
  if (horizon == 0) throw std::invalid_argument("horizon must be >= 1");
  if (context_length == 0) throw std::invalid_argument("context length must be >= 1");
  if (sampling == Sampling::uniform_random && samples_per_trajectory == 0) {
    throw std::invalid_argument("uniform sampling needs a count >= 1");
  }
  markers.validate();
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform on [0, bound] by rejection; std::uniform_int_distribution is not
// specified bit-for-bit across standard libraries.
std::uint64_t uniform_upto(std::mt19937_64& gen, std::uint64_t bound) {
  if (bound == 0) return 0;
  if (bound == std::numeric_limits<std::uint64_t>::max()) return gen();
  const std::uint64_t range = bound + 1;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t v;
  do {
    v = gen();
  } while (v >= limit);
  return v % range;
}

}  // namespace

std::vector<Window> make_windows(const Trajectory& t, const ChunkConfig& cfg) {
  const std::size_t T = t.length();
  const std::size_t H = cfg.horizon;
  std::vector<Window> out;
  if (T == 0 || H == 0) return out;
  if (cfg.sampling == Sampling::contiguous_partition) {
    for (std::size_t s = 0; s < T; s += H) out.push_back(rebase(t, s, std::min(H, T - s)));
    return out;
  }
  std::mt19937_64 gen(splitmix64(cfg.seed ^ fnv1a(t.id)));
  const std::size_t max_start = T > H ? T - H : 0;
  std::vector<std::size_t> starts;
  starts.reserve(cfg.samples_per_trajectory);
  for (std::size_t i = 0; i < cfg.samples_per_trajectory; ++i) {
    starts.push_back(static_cast<std::size_t>(uniform_upto(gen, max_start)));
  }
  std::stable_sort(starts.begin(), starts.end());
  for (const std::size_t s : starts) out.push_back(rebase(t, s, std::min(H, T - s)));
  return out;
}

void DatasetStats::merge(const DatasetStats& other) {
  per_demo.merge(other.per_demo);
  per_observation.merge(other.per_observation);
  per_action.merge(other.per_action);
  supervised_tokens += other.supervised_tokens;
  truncated_samples += other.truncated_samples;
}

namespace {

void put_stats(nlohmann::ordered_json& j, const StatsAccumulator& acc, const std::string& unit,
               bool with_central) {
  if (acc.empty()) {
    j["Min Tokens Per " + unit] = nullptr;
    j["Max Tokens Per " + unit] = nullptr;
    if (with_central) {
      j["Median Tokens Per " + unit] = nullptr;
      j["Mean Tokens Per " + unit] = nullptr;
      j["Std Tokens Per " + unit] = nullptr;
    }
    return;
  }
  const StatsReport r = acc.report();
  j["Min Tokens Per " + unit] = r.min;
  j["Max Tokens Per " + unit] = r.max;
  if (with_central) {
    j["Median Tokens Per " + unit] = r.median;
    j["Mean Tokens Per " + unit] = r.mean;
    j["Std Tokens Per " + unit] = r.stddev;
  }
}

}  // namespace

nlohmann::ordered_json DatasetManifest::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = to_string(format);
  j["objective"] = to_string(supervision);
  j["context_length"] = context_length;
  j["sample_count"] = sample_count;
  j["History Horizon Per Demo"] = horizon;
  put_stats(j, stats.per_demo, "Demo", true);
  put_stats(j, stats.per_observation, "Obs", true);
  put_stats(j, stats.per_action, "Action", true);
  j["Total Tokens"] = stats.per_demo.total();
  j["Supervised Tokens"] = stats.supervised_tokens;
  j["Truncated Samples"] = stats.truncated_samples;
  return j;
}

DatasetSample make_sample(const Window& window, const ChunkConfig& cfg, const Tokenizer& tok,
                          DatasetStats* stats) {
  RenderedSample rendered = cfg.format == HistoryFormat::diff_history
                                ? render_sample(to_diff_history(window), cfg.markers,
                                                Ending::observation_marker)
                                : render_sample(window, cfg.markers, Ending::observation_marker);
  TokenizedSample ts = align_segments(rendered, tok);
  LossMask mask = build_mask(ts, Objective{cfg.supervision, cfg.format});

  DatasetSample s;
  s.meta = SampleMeta{"", window.start, window.horizon(), cfg.format, false};
  const std::size_t C = cfg.context_length;
  s.meta.truncated = ts.tokens.size() > C;
  s.unpadded_length = std::min(ts.tokens.size(), C);
  s.tokens = std::move(ts.tokens);
  s.mask = std::move(mask);
  s.tokens.resize(C, cfg.pad_token_id);
  s.mask.resize(C, 0);

  if (stats != nullptr) {
    stats->per_demo.add(s.unpadded_length);
    std::uint64_t supervised = 0;
    for (const auto bit : s.mask) supervised += bit;
    stats->supervised_tokens += supervised;
    if (s.meta.truncated) ++stats->truncated_samples;
    for (const auto& seg : rendered.segment_map.segments) {
      if (seg.role == Role::observation_full || seg.role == Role::observation_delta) {
        // Count the block alone, without the framing newlines.
        std::string_view body = rendered.segment_text(seg);
        if (seg.step_index > 0 && body.starts_with('\n')) body.remove_prefix(1);
        if (body.ends_with('\n')) body.remove_suffix(1);
        stats->per_observation.add(tok.count(body));
      }
    }
    for (const auto& st : window.steps) stats->per_action.add(tok.count(st.action));
  }
  return s;
}

nlohmann::ordered_json sample_to_json(const DatasetSample& s) {
  nlohmann::ordered_json j;
  j["tokens"] = s.tokens;
  j["mask"] = s.mask;
  nlohmann::ordered_json meta;
  meta["trajectory_id"] = s.meta.trajectory_id;
  meta["window_start"] = s.meta.window_start;
  meta["h"] = s.meta.h;
  meta["format"] = to_string(s.meta.format);
  meta["truncated"] = s.meta.truncated;
  j["meta"] = std::move(meta);
  return j;
}

DatasetSample sample_from_json(const nlohmann::json& j) {
  DatasetSample s;
  s.tokens = j.at("tokens").get<TokenSequence>();
  s.mask = j.at("mask").get<LossMask>();
  const auto& meta = j.at("meta");
  s.meta.trajectory_id = meta.at("trajectory_id").get<std::string>();
  s.meta.window_start = meta.at("window_start").get<std::size_t>();
  s.meta.h = meta.at("h").get<std::size_t>();
  s.meta.format = parse_history_format(meta.at("format").get<std::string>());
  s.meta.truncated = meta.at("truncated").get<bool>();
  if (s.mask.size() != s.tokens.size()) throw ParseError(0, "mask and tokens differ in length");
  return s;
}

std::vector<DatasetSample> read_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<DatasetSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

namespace {

struct TrajectoryOutput {
  std::vector<DatasetSample> samples;
  DatasetStats stats;
};

TrajectoryOutput process(const Trajectory& t, const ChunkConfig& cfg, const Tokenizer& tok) {
  TrajectoryOutput out;
  for (const auto& w : make_windows(t, cfg)) {
    DatasetSample s = make_sample(w, cfg, tok, &out.stats);
    s.meta.trajectory_id = t.id;
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace

DatasetManifest emit_dataset(TrajectoryReader& reader, const ChunkConfig& cfg,
                             const Tokenizer& tok, std::ostream& out) {
  cfg.validate();
  for (const auto& m : cfg.markers.markers()) {
    if (!tok.special_id(m)) {
      throw std::invalid_argument("marker '" + m + "' is not registered with the tokenizer");
    }
  }
  DatasetManifest manifest;
  manifest.horizon = cfg.horizon;
  manifest.context_length = cfg.context_length;
  manifest.format = cfg.format;
  manifest.supervision = cfg.supervision;

  // Id interning in some tokenizers depends on encounter order; keep those
  // on one thread so output stays reproducible.
  const unsigned jobs = tok.stable_ids() ? std::max(1u, cfg.jobs) : 1u;
  const std::size_t batch_size = jobs == 1 ? 1 : 64 * static_cast<std::size_t>(jobs);

  std::vector<Trajectory> batch;
  std::vector<TrajectoryOutput> results;
  bool done = false;
  while (!done) {
    batch.clear();
    while (batch.size() < batch_size) {
      auto t = reader.next();
      if (!t) {
        done = true;
        break;
      }
      batch.push_back(std::move(*t));
    }
    results.assign(batch.size(), TrajectoryOutput{});
    if (jobs == 1 || batch.size() <= 1) {
      for (std::size_t i = 0; i < batch.size(); ++i) results[i] = process(batch[i], cfg, tok);
    } else {
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      std::vector<std::thread> workers;
      for (unsigned w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
          for (std::size_t i = next++; i < batch.size(); i = next++) {
            try {
              results[i] = process(batch[i], cfg, tok);
            } catch (...) {
              std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
      for (auto& w : workers) w.join();
      if (failure) std::rethrow_exception(failure);
    }
    for (auto& r : results) {
      for (const auto& s : r.samples) out << sample_to_json(s).dump() << '\n';
      manifest.sample_count += r.samples.size();
      manifest.stats.merge(r.stats);
    }
    if (!out) throw std::runtime_error("failed writing samples");
  }
  return manifest;
}

DatasetManifest emit_dataset(const std::filesystem::path& in, const ChunkConfig& cfg,
                             const Tokenizer& tok, const std::filesystem::path& out,
                             bool strict) {
  std::ifstream input(in);
  if (!input) throw std::runtime_error("cannot open " + in.string());
  std::ofstream output(out, std::ios::binary);
  if (!output) throw std::runtime_error("cannot write " + out.string());
  TrajectoryReader reader(input, strict);
  DatasetManifest manifest = emit_dataset(reader, cfg, tok, output);
  output.close();
  if (!output) throw std::runtime_error("failed writing " + out.string());

  std::filesystem::path manifest_path = out;
  manifest_path += ".manifest.json";
  std::ofstream mf(manifest_path, std::ios::binary);
  mf << manifest.to_json().dump(2) << '\n';
  if (!mf) throw std::runtime_error("cannot write " + manifest_path.string());
  return manifest;
}

CompressionReport observation_compression(const std::vector<Trajectory>& ts, const Tokenizer& tok,
                                          const DeltaStyle& style) {
  StatsAccumulator full;
  StatsAccumulator diff;
  for (const auto& t : ts) {
    for (std::size_t i = 0; i < t.observations.size(); ++i) {
      full.add(tok.count(t.observations[i]));
      if (i > 0) {
        diff.add(tok.count(render_delta(compute_delta(t.observations[i - 1], t.observations[i]), style)));
      }
    }
  }
  return CompressionReport{full.report(), diff.report()};
}

}  // namespace diffhist
