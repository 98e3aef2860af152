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

#include "diffhist/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "diffhist/assembler.hpp"
#include "diffhist/chunker.hpp"
#include "diffhist/diff.hpp"
#include "diffhist/envsim.hpp"
#include "diffhist/history.hpp"

namespace diffhist::cli {

namespace {

// Bad input data, as opposed to bad flags.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct Globals {
  std::string delimiter = "@@";
  std::string markers = "<|action|>,<|observation|>";
  std::string tokenizer = "whitespace";
  std::uint64_t seed = 0;
  bool strict = false;
  unsigned jobs = 1;

  MarkerConfig marker_config() const {
    MarkerConfig cfg;
    const auto comma = markers.find(',');
    if (comma == std::string::npos) {
      throw CLI::ValidationError("--markers", "expected ACTION,OBSERVATION");
    }
    cfg.action_begin = markers.substr(0, comma);
    cfg.observation_begin = markers.substr(comma + 1);
    cfg.delta_style.hunk_delimiter = delimiter;
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError("--markers/--delimiter", e.what());
    }
    return cfg;
  }
};

void write_text(const std::string& path, std::ostream& out, const std::string& text) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path);
  f << text;
}

nlohmann::ordered_json report_json(const StatsReport& r) {
  nlohmann::ordered_json j;
  j["count"] = r.count;
  j["min"] = r.min;
  j["max"] = r.max;
  j["median"] = r.median;
  j["mean"] = r.mean;
  j["std"] = r.stddev;
  j["total"] = r.total;
  return j;
}

std::vector<Trajectory> load_trajectories(const std::string& path, bool strict, std::ostream& err) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  TrajectoryReader reader(in, strict);
  std::vector<Trajectory> out;
  while (auto t = reader.next()) out.push_back(std::move(*t));
  for (const auto& e : reader.errors()) err << "warning: skipped " << e.what() << '\n';
  return out;
}

}  // namespace

std::unique_ptr<Tokenizer> make_tokenizer(const std::string& spec, const MarkerConfig& markers) {
  std::unique_ptr<Tokenizer> tok;
  if (spec == "whitespace") {
    tok = std::make_unique<WhitespaceTokenizer>();
  } else if (spec == "bpe" || spec.starts_with("bpe:")) {
    std::string vocab;
    std::string merges;
    if (spec == "bpe") {
      const char* v = std::getenv("DIFFHIST_BPE_VOCAB");
      const char* m = std::getenv("DIFFHIST_BPE_MERGES");
      if (v == nullptr || m == nullptr) {
        throw std::invalid_argument(
            "--tokenizer bpe needs DIFFHIST_BPE_VOCAB and DIFFHIST_BPE_MERGES");
      }
      vocab = v;
      merges = m;
    } else {
      const std::string rest = spec.substr(4);
      const auto colon = rest.find(':');
      if (colon == std::string::npos) {
        throw std::invalid_argument("expected bpe:<vocab>:<merges>");
      }
      vocab = rest.substr(0, colon);
      merges = rest.substr(colon + 1);
    }
    tok = BpeTokenizer::load(vocab, merges);
  } else {
    throw std::invalid_argument("unknown tokenizer '" + spec + "'");
  }
  tok->register_special_tokens(markers.markers());
  return tok;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Line-delta interaction histories: diff, render, chunk, assemble, simulate."};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--delimiter", g.delimiter, "Hunk delimiter")->capture_default_str();
  app.add_option("--markers", g.markers, "ACTION,OBSERVATION marker strings")
      ->capture_default_str();
  app.add_option("--tokenizer", g.tokenizer, "whitespace | bpe | bpe:VOCAB:MERGES")
      ->capture_default_str();
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_flag("--strict", g.strict, "Fail on the first malformed record");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));

  // diff
  std::string diff_a, diff_b;
  auto* diff = app.add_subcommand("diff", "Print the line delta from A to B");
  diff->add_option("a", diff_a)->required()->check(CLI::ExistingFile);
  diff->add_option("b", diff_b)->required()->check(CLI::ExistingFile);

  // apply
  std::string apply_a, apply_d;
  auto* apply = app.add_subcommand("apply", "Apply delta D to file A");
  apply->add_option("a", apply_a)->required()->check(CLI::ExistingFile);
  apply->add_option("delta", apply_d)->required()->check(CLI::ExistingFile);

  // convert
  std::string conv_in, conv_out, conv_format = "diff";
  bool conv_text = false;
  auto* convert = app.add_subcommand("convert", "Render trajectories as full-text or diff history");
  convert->add_option("input", conv_in)->required()->check(CLI::ExistingFile);
  convert->add_option("-o,--output", conv_out, "Output file (default stdout)");
  convert->add_option("--format", conv_format)->check(CLI::IsMember({"full", "diff"}))
      ->capture_default_str();
  convert->add_flag("--text", conv_text, "Raw rendered text instead of JSON lines");

  // chunk
  std::string chunk_in, chunk_out, chunk_format = "diff", chunk_objective = "action-only";
  std::string chunk_sampling = "contiguous";
  std::size_t chunk_h = 4, chunk_ctx = kShortContextBudget, chunk_samples = 1;
  TokenId chunk_pad = 0;
  auto* chunk = app.add_subcommand("chunk", "Emit fixed-length training samples and a manifest");
  chunk->add_option("input", chunk_in)->required()->check(CLI::ExistingFile);
  chunk->add_option("output", chunk_out)->required();
  chunk->add_option("--horizon", chunk_h)->check(CLI::PositiveNumber)->capture_default_str();
  chunk->add_option("--format", chunk_format)->check(CLI::IsMember({"full", "diff"}))
      ->capture_default_str();
  chunk->add_option("--objective", chunk_objective)
      ->check(CLI::IsMember({"action-only", "world-model"}))
      ->capture_default_str();
  chunk->add_option("--context", chunk_ctx)->check(CLI::PositiveNumber)->capture_default_str();
  chunk->add_option("--sampling", chunk_sampling)
      ->check(CLI::IsMember({"contiguous", "uniform"}))
      ->capture_default_str();
  chunk->add_option("--samples", chunk_samples, "Windows per trajectory for uniform sampling")
      ->check(CLI::PositiveNumber);
  chunk->add_option("--pad-id", chunk_pad)->capture_default_str();

  // stats
  std::string stats_in;
  auto* stats = app.add_subcommand("stats", "Token statistics of a trajectory file");
  stats->add_option("input", stats_in)->required()->check(CLI::ExistingFile);

  // assemble
  std::string asm_in, asm_format = "diff";
  std::size_t asm_h = 4, asm_budget = kShortContextBudget;
  bool asm_text = false, asm_degraded = false;
  auto* assemble = app.add_subcommand("assemble", "Build a budgeted prompt from a trajectory prefix");
  assemble->add_option("input", asm_in,
                       "JSON with instruction, observations and one fewer actions")
      ->required()
      ->check(CLI::ExistingFile);
  assemble->add_option("--h-max", asm_h)->check(CLI::PositiveNumber)->capture_default_str();
  assemble->add_option("--budget", asm_budget)->check(CLI::PositiveNumber)->capture_default_str();
  assemble->add_option("--format", asm_format)->check(CLI::IsMember({"full", "diff"}))
      ->capture_default_str();
  assemble->add_flag("--text", asm_text, "Print the prompt text only");
  assemble->add_flag("--degraded", asm_degraded, "Truncate instead of failing when nothing fits");

  // gen-data
  std::string gen_out;
  std::size_t gen_count = 16, gen_tmax = 200;
  auto* gen = app.add_subcommand("gen-data", "Expert demonstrations on generated grids");
  gen->add_option("-o,--output", gen_out)->required();
  gen->add_option("--count", gen_count)->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--t-max", gen_tmax)->check(CLI::PositiveNumber)->capture_default_str();

  // rollout
  std::string ro_out, ro_policy = "expert", ro_format = "diff";
  std::size_t ro_count = 16, ro_tmax = 200, ro_h = 4, ro_budget = kShortContextBudget;
  bool ro_check = false;
  auto* ro = app.add_subcommand("rollout", "Run a policy through the prompt loop");
  ro->add_option("-o,--output", ro_out, "Episode records (JSON lines)");
  ro->add_option("--count", ro_count)->check(CLI::PositiveNumber)->capture_default_str();
  ro->add_option("--t-max", ro_tmax)->check(CLI::PositiveNumber)->capture_default_str();
  ro->add_option("--policy", ro_policy, "expert, or a shell command speaking the prompt protocol")
      ->capture_default_str();
  ro->add_option("--h-max", ro_h)->check(CLI::PositiveNumber)->capture_default_str();
  ro->add_option("--budget", ro_budget)->check(CLI::PositiveNumber)->capture_default_str();
  ro->add_option("--format", ro_format)->check(CLI::IsMember({"full", "diff"}))
      ->capture_default_str();
  ro->add_flag("--check-anchor", ro_check, "Verify every diff prompt against the observation");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  MarkerConfig markers;
  std::unique_ptr<Tokenizer> tok;
  try {
    markers = g.marker_config();
    const bool needs_tokenizer = chunk->parsed() || stats->parsed() || assemble->parsed() ||
                                 ro->parsed();
    if (needs_tokenizer) tok = make_tokenizer(g.tokenizer, markers);
  } catch (const CLI::Error& e) {
    err << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }

  try {
    if (diff->parsed()) {
      const std::string rendered =
          render_delta(compute_delta(read_file(diff_a), read_file(diff_b)), markers.delta_style);
      out << rendered;
      if (!rendered.empty()) out << '\n';
    } else if (apply->parsed()) {
      const Delta d = parse_delta(read_file(apply_d), markers.delta_style);
      out << apply_delta(read_file(apply_a), d);
    } else if (convert->parsed()) {
      const HistoryFormat format = parse_history_format(conv_format);
      std::ostringstream buf;
      for (const auto& t : load_trajectories(conv_in, g.strict, err)) {
        const Window w = rebase(t, 0, t.length());
        const RenderedSample r = format == HistoryFormat::diff_history
                                     ? render_sample(to_diff_history(w), markers)
                                     : render_sample(w, markers);
        if (conv_text) {
          buf << r.text;
        } else {
          nlohmann::ordered_json j;
          j["id"] = t.id;
          j["format"] = to_string(format);
          j["text"] = r.text;
          buf << j.dump() << '\n';
        }
      }
      write_text(conv_out, out, buf.str());
    } else if (chunk->parsed()) {
      ChunkConfig cfg;
      cfg.horizon = chunk_h;
      cfg.sampling = chunk_sampling == "uniform" ? Sampling::uniform_random
                                                 : Sampling::contiguous_partition;
      cfg.samples_per_trajectory = chunk_samples;
      cfg.seed = g.seed;
      cfg.format = parse_history_format(chunk_format);
      cfg.supervision = parse_supervision(chunk_objective);
      cfg.context_length = chunk_ctx;
      cfg.pad_token_id = chunk_pad;
      cfg.markers = markers;
      cfg.jobs = g.jobs;
      const DatasetManifest m = emit_dataset(chunk_in, cfg, *tok, chunk_out, g.strict);
      out << m.to_json().dump(2) << '\n';
    } else if (stats->parsed()) {
      const auto ts = load_trajectories(stats_in, g.strict, err);
      if (ts.empty()) throw DataError("no trajectories in " + stats_in);
      std::vector<std::string_view> actions;
      for (const auto& t : ts) actions.insert(actions.end(), t.actions.begin(), t.actions.end());
      const CompressionReport c = observation_compression(ts, *tok, markers.delta_style);
      nlohmann::ordered_json j;
      j["trajectories"] = ts.size();
      j["observations_full_text"] = report_json(c.full_text);
      j["observations_diff"] = c.diff.count == 0 ? nlohmann::ordered_json(nullptr)
                                                 : report_json(c.diff);
      j["actions"] = report_json(token_stats(actions, *tok));
      out << j.dump(2) << '\n';
    } else if (assemble->parsed()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_file(asm_in));
      } catch (const nlohmann::json::exception& e) {
        throw DataError(asm_in + ": " + e.what());
      }
      PromptRequest req;
      try {
        req.instruction = j.at("instruction").get<std::string>();
        req.observations = j.at("observations").get<std::vector<std::string>>();
        req.actions = j.value("actions", std::vector<std::string>{});
      } catch (const nlohmann::json::exception& e) {
        throw DataError(asm_in + ": " + e.what());
      }
      req.h_max = asm_h;
      req.budget = asm_budget;
      req.format = parse_history_format(asm_format);
      req.markers = markers;
      req.allow_degraded = asm_degraded;
      try {
        req.validate();
      } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
      }
      const AssembledPrompt p = build_prompt(req, *tok);
      if (asm_text) {
        out << p.text;
      } else {
        nlohmann::ordered_json o;
        o["chosen_h"] = p.chosen_h;
        o["token_count"] = p.tokens.size();
        o["degraded"] = p.degraded;
        o["text"] = p.text;
        out << o.dump() << '\n';
      }
    } else if (gen->parsed()) {
      GeneratorConfig gc;
      gc.t_max = gen_tmax;
      std::vector<Trajectory> ts;
      for (std::size_t i = 0; i < gen_count; ++i) {
        const std::uint64_t seed = g.seed + i;
        EpisodeRecord rec = run_expert(generate(seed, gc));
        rec.trajectory.id = "seed-" + std::to_string(seed);
        ts.push_back(std::move(rec.trajectory));
      }
      write_trajectories(gen_out, ts);
      nlohmann::ordered_json j;
      j["trajectories"] = ts.size();
      j["output"] = gen_out;
      out << j.dump() << '\n';
    } else if (ro->parsed()) {
      RolloutConfig rc;
      rc.format = parse_history_format(ro_format);
      rc.h_max = ro_h;
      rc.budget = ro_budget;
      rc.markers = markers;
      rc.check_anchor = ro_check;
      GeneratorConfig gc;
      gc.t_max = ro_tmax;
      std::vector<EpisodeRecord> records(ro_count);
      std::vector<std::string> failures(ro_count);
      const auto episode = [&](std::size_t i) {
        try {
          const GridState s = generate(g.seed + i, gc);
          std::unique_ptr<Policy> policy;
          if (ro_policy == "expert") {
            policy = std::make_unique<ExpertWrapper>(markers);
          } else {
            policy = std::make_unique<ExternalPolicy>(ro_policy);
          }
          records[i] = rollout(s, *policy, rc, *tok);
          records[i].trajectory.id = "seed-" + std::to_string(g.seed + i);
        } catch (const std::exception& e) {
          failures[i] = e.what();
        }
      };
      const unsigned jobs = std::max(1u, g.jobs);
      std::vector<std::thread> workers;
      for (unsigned w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
          for (std::size_t i = w; i < ro_count; i += jobs) episode(i);
        });
      }
      for (auto& w : workers) w.join();
      for (std::size_t i = 0; i < ro_count; ++i) {
        if (!failures[i].empty()) {
          throw DataError("episode seed-" + std::to_string(g.seed + i) + ": " + failures[i]);
        }
      }

      std::ostringstream lines;
      double total = 0.0;
      std::map<std::string, std::size_t> terminations;
      for (std::size_t i = 0; i < ro_count; ++i) {
        const auto& r = records[i];
        total += r.reward;
        ++terminations[std::string(to_string(r.termination))];
        nlohmann::ordered_json j;
        j["seed"] = g.seed + i;
        j["termination"] = to_string(r.termination);
        j["reward"] = r.reward;
        j["queries"] = r.queries;
        j["trajectory"] = trajectory_to_json(r.trajectory);
        j["final_observation"] = r.final_observation;
        lines << j.dump() << '\n';
      }
      if (!ro_out.empty()) write_text(ro_out, out, lines.str());
      nlohmann::ordered_json summary;
      summary["episodes"] = ro_count;
      summary["mean_reward"] = total / static_cast<double>(ro_count);
      summary["terminations"] = terminations;
      out << summary.dump() << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace diffhist::cli
