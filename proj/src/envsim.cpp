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

#include "diffhist/envsim.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <deque>
#include <limits>
#include <random>
#include <set>
#include <tuple>

#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

namespace diffhist {

std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::key: return "key";
    case Kind::ball: return "ball";
    case Kind::box: return "box";
    case Kind::door: return "door";
  }
  return "unknown";
}

std::string_view to_string(Color c) {
  switch (c) {
    case Color::red: return "red";
    case Color::green: return "green";
    case Color::blue: return "blue";
    case Color::yellow: return "yellow";
    case Color::purple: return "purple";
    case Color::grey: return "grey";
  }
  return "unknown";
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::success: return "success";
    case Termination::timeout: return "timeout";
    case Termination::invalid_actions: return "invalid_actions";
  }
  return "unknown";
}

std::string instruction_text(const TaskSpec& task) {
  std::string out = task.task == TaskClass::go_to ? "Your task is to go to the "
                                                  : "Your task is to pick up the ";
  out += to_string(task.color);
  out += ' ';
  out += to_string(task.kind);
  out += ".\nYou can take 6 different actions: turn left, turn right, go forward, pick up, drop, "
         "and toggle.";
  return out;
}

namespace {

constexpr int kForwardView = 6;
constexpr int kSideView = 3;

struct Vec {
  int x;
  int y;
};

Vec dir_vec(Dir d) {
  switch (d) {
    case Dir::N: return {0, -1};
    case Dir::E: return {1, 0};
    case Dir::S: return {0, 1};
    case Dir::W: return {-1, 0};
  }
  return {0, 0};
}

Dir turn(Dir d, int quarter_turns) {
  return static_cast<Dir>((static_cast<int>(d) + quarter_turns + 4) % 4);
}

std::string steps(int n, std::string_view direction) {
  return std::to_string(n) + (n == 1 ? " step " : " steps ") + std::string(direction);
}

}  // namespace

bool GridState::is_wall(int cx, int cy) const {
  return cx <= 0 || cy <= 0 || cx >= width - 1 || cy >= height - 1;
}

const Object* GridState::object_at(int cx, int cy) const {
  for (const auto& o : objects) {
    if (o.x == cx && o.y == cy) return &o;
  }
  return nullptr;
}

std::pair<int, int> GridState::front() const {
  const Vec v = dir_vec(dir);
  return {x + v.x, y + v.y};
}

bool GridState::success() const {
  if (task.task == TaskClass::pick_up) {
    return carried && carried->kind == task.kind && carried->color == task.color;
  }
  const auto [fx, fy] = front();
  const Object* o = object_at(fx, fy);
  return o != nullptr && o->kind == task.kind && o->color == task.color;
}

void GridState::validate() const {
  if (width < 3 || height < 3) throw std::invalid_argument("grid must be at least 3x3");
  if (is_wall(x, y)) throw std::invalid_argument("agent inside a wall");
  if (object_at(x, y) != nullptr) throw std::invalid_argument("agent on an object");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (is_wall(objects[i].x, objects[i].y)) throw std::invalid_argument("object inside a wall");
    for (std::size_t j = 0; j < i; ++j) {
      if (objects[i].x == objects[j].x && objects[i].y == objects[j].y) {
        throw std::invalid_argument("two objects share a cell");
      }
    }
  }
  if (step_count > t_max) throw std::invalid_argument("step count beyond t_max");
  const bool present =
      std::any_of(objects.begin(), objects.end(),
                  [&](const Object& o) { return o.kind == task.kind && o.color == task.color; }) ||
      (carried && carried->kind == task.kind && carried->color == task.color);
  if (!present) throw std::invalid_argument("task target is not in the grid");
}

std::string observe(const GridState& s) {
  const Vec fwd = dir_vec(s.dir);
  const Vec right = dir_vec(turn(s.dir, 1));
  std::vector<std::string> lines;

  // Wall scans stop at the first object in the way.
  const auto scan = [&](Vec v, int limit, std::string_view name) {
    for (int k = 1; k <= limit; ++k) {
      const int cx = s.x + v.x * k;
      const int cy = s.y + v.y * k;
      if (s.object_at(cx, cy) != nullptr) return;
      if (s.is_wall(cx, cy)) {
        lines.push_back("a wall " + steps(k, name));
        return;
      }
    }
  };
  scan(fwd, kForwardView, "forward");
  scan(right, kSideView, "right");
  scan(Vec{-right.x, -right.y}, kSideView, "left");

  struct Seen {
    int f;  // cells ahead
    int r;  // cells to the right (negative: left)
    const Object* o;
  };
  std::vector<Seen> seen;
  for (const auto& o : s.objects) {
    const int dx = o.x - s.x;
    const int dy = o.y - s.y;
    const int f = dx * fwd.x + dy * fwd.y;
    const int r = dx * right.x + dy * right.y;
    if (f < 0 || f > kForwardView || std::abs(r) > kSideView) continue;
    seen.push_back(Seen{f, r, &o});
  }
  // Clockwise from straight ahead: the right half first, then the left,
  // and within a half by cross product.
  std::sort(seen.begin(), seen.end(), [](const Seen& a, const Seen& b) {
    const int da = a.f + std::abs(a.r);
    const int db = b.f + std::abs(b.r);
    if (da != db) return da < db;
    const int ha = a.r < 0 ? 1 : 0;
    const int hb = b.r < 0 ? 1 : 0;
    if (ha != hb) return ha < hb;
    const int cross = a.f * b.r - a.r * b.f;
    if (cross != 0) return cross > 0;
    return std::tie(a.o->kind, a.o->color) < std::tie(b.o->kind, b.o->color);
  });
  for (const auto& v : seen) {
    std::string line = "a " + std::string(to_string(v.o->color)) + " " +
                       std::string(to_string(v.o->kind)) + " ";
    if (v.f == 0 && v.r == 0) {
      line += "here";
    } else {
      std::string lateral = v.r == 0 ? "" : steps(std::abs(v.r), v.r > 0 ? "right" : "left");
      std::string ahead = v.f == 0 ? "" : steps(v.f, "forward");
      line += lateral.empty() ? ahead : ahead.empty() ? lateral : lateral + " and " + ahead;
    }
    lines.push_back(std::move(line));
  }

  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

GridState step(const GridState& s, std::string_view action) {
  const std::string a = normalize_action(action);
  GridState n = s;
  const auto [fx, fy] = s.front();
  if (a == "turn left") {
    n.dir = turn(s.dir, -1);
  } else if (a == "turn right") {
    n.dir = turn(s.dir, 1);
  } else if (a == "go forward") {
    if (!s.is_wall(fx, fy) && s.object_at(fx, fy) == nullptr) {
      n.x = fx;
      n.y = fy;
    }
  } else if (a == "pick up") {
    const Object* o = s.object_at(fx, fy);
    if (!s.carried && o != nullptr && o->kind != Kind::door) {
      n.carried = *o;
      std::erase_if(n.objects, [&](const Object& q) { return q.x == fx && q.y == fy; });
    }
  } else if (a == "drop") {
    if (s.carried && !s.is_wall(fx, fy) && s.object_at(fx, fy) == nullptr) {
      Object o = *s.carried;
      o.x = fx;
      o.y = fy;
      n.objects.push_back(o);
      n.carried.reset();
    }
  } else if (a == "toggle") {
    // No doors are generated; nothing to toggle.
  } else {
    throw InvalidAction(action);
  }
  ++n.step_count;
  return n;
}

double reward(const GridState& s) {
  if (!s.success()) return 0.0;
  return 1.0 - 0.9 * static_cast<double>(s.step_count) / static_cast<double>(s.t_max);
}

namespace {

constexpr int kUnreached = std::numeric_limits<int>::max();

// Distance (in actions) from every (x, y, dir) to a state facing the target,
// by breadth-first search over reversed moves.
std::vector<int> distances_to_target(const GridState& s, const Object& target) {
  const auto index = [&](int x, int y, Dir d) {
    return (y * s.width + x) * 4 + static_cast<int>(d);
  };
  const auto free = [&](int x, int y) { return !s.is_wall(x, y) && s.object_at(x, y) == nullptr; };
  std::vector<int> dist(static_cast<std::size_t>(s.width * s.height * 4), kUnreached);
  std::deque<std::tuple<int, int, Dir>> queue;
  for (int d = 0; d < 4; ++d) {
    const Vec v = dir_vec(static_cast<Dir>(d));
    const int x = target.x - v.x;
    const int y = target.y - v.y;
    if (!free(x, y)) continue;
    dist[index(x, y, static_cast<Dir>(d))] = 0;
    queue.emplace_back(x, y, static_cast<Dir>(d));
  }
  while (!queue.empty()) {
    const auto [x, y, d] = queue.front();
    queue.pop_front();
    const int next = dist[index(x, y, d)] + 1;
    const Vec v = dir_vec(d);
    std::vector<std::tuple<int, int, Dir>> preds = {{x, y, turn(d, 1)}, {x, y, turn(d, -1)}};
    if (free(x - v.x, y - v.y)) preds.emplace_back(x - v.x, y - v.y, d);
    for (const auto& [px, py, pd] : preds) {
      int& slot = dist[index(px, py, pd)];
      if (slot != kUnreached) continue;
      slot = next;
      queue.emplace_back(px, py, pd);
    }
  }
  return dist;
}

const Object* find_target(const GridState& s) {
  for (const auto& o : s.objects) {
    if (o.kind == s.task.kind && o.color == s.task.color) return &o;
  }
  return nullptr;
}

}  // namespace

std::string expert_bot(const GridState& s) {
  if (s.success()) throw std::logic_error("task already complete");
  const Object* target = find_target(s);
  if (target == nullptr) throw Unsolvable("target is not on the grid");
  const auto [fx, fy] = s.front();
  if (s.carried && s.task.task == TaskClass::pick_up) {
    if (!s.is_wall(fx, fy) && s.object_at(fx, fy) == nullptr) return "drop";
  }
  const auto dist = distances_to_target(s, *target);
  const auto at = [&](int x, int y, Dir d) {
    return dist[static_cast<std::size_t>((y * s.width + x) * 4 + static_cast<int>(d))];
  };
  if (at(s.x, s.y, s.dir) == 0) {
    if (s.task.task == TaskClass::pick_up && !s.carried) return "pick up";
    throw Unsolvable("facing the target but the task cannot complete");
  }
  struct Option {
    const char* action;
    int d;
  };
  std::vector<Option> options;
  if (!s.is_wall(fx, fy) && s.object_at(fx, fy) == nullptr) {
    options.push_back({"go forward", at(fx, fy, s.dir)});
  }
  options.push_back({"turn right", at(s.x, s.y, turn(s.dir, 1))});
  options.push_back({"turn left", at(s.x, s.y, turn(s.dir, -1))});
  const Option* best = nullptr;
  for (const auto& o : options) {
    if (o.d == kUnreached) continue;
    if (best == nullptr || o.d < best->d) best = &o;
  }
  if (best == nullptr) throw Unsolvable("no path to the target");
  return best->action;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform on [lo, hi]; rejection keeps results identical across standard
// libraries.
int draw(std::mt19937_64& gen, int lo, int hi) {
  const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t v;
  do {
    v = gen();
  } while (v >= limit);
  return lo + static_cast<int>(v % range);
}

}  // namespace

GridState generate(std::uint64_t seed, const GeneratorConfig& cfg) {
  if (cfg.min_size < 4 || cfg.max_size < cfg.min_size || cfg.max_objects < 1) {
    throw std::invalid_argument("bad generator configuration");
  }
  std::mt19937_64 gen(splitmix64(seed));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    GridState s;
    s.width = draw(gen, cfg.min_size, cfg.max_size);
    s.height = draw(gen, cfg.min_size, cfg.max_size);
    s.t_max = cfg.t_max;
    std::vector<std::pair<int, int>> cells;
    for (int y = 1; y < s.height - 1; ++y) {
      for (int x = 1; x < s.width - 1; ++x) cells.emplace_back(x, y);
    }
    // Distinct cells: a partial Fisher-Yates shuffle.
    const int n_objects = draw(gen, 1, cfg.max_objects);
    const int needed = n_objects + 1;
    if (static_cast<int>(cells.size()) < needed) continue;
    for (int i = 0; i < needed; ++i) {
      const int j = draw(gen, i, static_cast<int>(cells.size()) - 1);
      std::swap(cells[i], cells[j]);
    }
    // Distinct (kind, color) pairs keep the target unambiguous.
    for (int i = 0; i < n_objects; ++i) {
      Object o{};
      do {
        o.kind = static_cast<Kind>(draw(gen, 0, 2));
        o.color = static_cast<Color>(draw(gen, 0, 5));
      } while (std::any_of(s.objects.begin(), s.objects.end(), [&](const Object& q) {
        return q.kind == o.kind && q.color == o.color;
      }));
      o.x = cells[i].first;
      o.y = cells[i].second;
      s.objects.push_back(o);
    }
    s.x = cells[n_objects].first;
    s.y = cells[n_objects].second;
    s.dir = static_cast<Dir>(draw(gen, 0, 3));
    s.task.task = draw(gen, 0, 1) == 0 ? TaskClass::go_to : TaskClass::pick_up;
    const Object& target = s.objects[static_cast<std::size_t>(draw(gen, 0, n_objects - 1))];
    s.task.kind = target.kind;
    s.task.color = target.color;
    if (s.success()) continue;
    const auto dist = distances_to_target(s, target);
    const int d = dist[static_cast<std::size_t>((s.y * s.width + s.x) * 4 + static_cast<int>(s.dir))];
    if (d == kUnreached) continue;
    const std::size_t needed_steps = static_cast<std::size_t>(d) +
                                     (s.task.task == TaskClass::pick_up ? 1 : 0);
    if (needed_steps > s.t_max) continue;
    return s;
  }
  throw std::runtime_error("could not generate a solvable grid for seed " + std::to_string(seed));
}

std::string ExpertWrapper::next_continuation(const AssembledPrompt&) {
  if (!state_) throw std::logic_error("expert queried before seeing a state");
  return expert_bot(*state_) + markers_.observation_begin;
}

ReplayPolicy ReplayPolicy::from_actions(const std::vector<std::string>& actions,
                                        const MarkerConfig& markers) {
  std::vector<std::string> out;
  out.reserve(actions.size());
  for (const auto& a : actions) out.push_back(a + markers.observation_begin);
  return ReplayPolicy(std::move(out));
}

std::string ReplayPolicy::next_continuation(const AssembledPrompt&) {
  if (next_ >= continuations_.size()) return {};
  return continuations_[next_++];
}

ExternalPolicy::ExternalPolicy(const std::string& command, int timeout_ms)
    : timeout_ms_(timeout_ms) {
  std::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw std::runtime_error("pipe failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw std::runtime_error("pipe failed");
  }
  pid_ = fork();
  if (pid_ < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    throw std::runtime_error("fork failed");
  }
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

ExternalPolicy::~ExternalPolicy() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == 0) {
      kill(pid_, SIGTERM);
      waitpid(pid_, &status, 0);
    }
  }
}

std::string ExternalPolicy::next_continuation(const AssembledPrompt& prompt) {
  if (to_child_ >= 0) {
    const std::string message = prompt.text + "\n\n";
    std::size_t off = 0;
    while (off < message.size()) {
      const ssize_t n = write(to_child_, message.data() + off, message.size() - off);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        close(to_child_);
        to_child_ = -1;
        break;
      }
      off += static_cast<std::size_t>(n);
    }
  }
  // Reply: lines up to the first empty one.
  std::string reply;
  bool first = true;
  while (true) {
    const std::size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (line.empty()) return reply;
      if (!first) reply.push_back('\n');
      first = false;
      reply += line;
      continue;
    }
    if (from_child_ < 0) break;
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = poll(&pfd, 1, timeout_ms_ > 0 ? timeout_ms_ : -1);
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) break;  // timed out; leave the pipe open for the next query
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      close(from_child_);
      from_child_ = -1;
      break;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
  // The peer went away; hand back whatever arrived.
  if (!buffer_.empty()) {
    if (!first) reply.push_back('\n');
    reply += buffer_;
    buffer_.clear();
  }
  return reply;
}

void check_prompt_anchor(const AssembledPrompt& prompt, const MarkerConfig& markers,
                         std::string_view current) {
  const auto& r = prompt.rendered;
  std::string state;
  bool anchored = false;
  for (const auto& seg : r.segment_map.segments) {
    std::string_view body = r.segment_text(seg);
    if (seg.role == Role::observation_full) {
      if (body.ends_with('\n')) body.remove_suffix(1);
      state = std::string(body);
      anchored = true;
    } else if (seg.role == Role::observation_delta) {
      if (!anchored) throw std::logic_error("delta before any anchor observation");
      if (body.starts_with('\n')) body.remove_prefix(1);
      if (body.ends_with('\n')) body.remove_suffix(1);
      state = apply_delta(state, parse_delta(body, markers.delta_style));
    }
  }
  if (!anchored) throw std::logic_error("prompt has no observation");
  if (state != current) throw std::logic_error("prompt does not reproduce the current observation");
}

namespace {

EpisodeRecord drive(const GridState& initial, Policy* policy, const RolloutConfig* cfg,
                    const Tokenizer* tok) {
  initial.validate();
  EpisodeRecord rec;
  rec.trajectory.instruction = instruction_text(initial.task);
  GridState s = initial;
  std::string current = observe(s);
  std::size_t invalid = 0;
  std::size_t idle = 0;
  const std::size_t max_invalid = cfg != nullptr ? cfg->max_invalid : 1;
  const std::set<std::string> vocabulary(kActions.begin(), kActions.end());
  while (true) {
    if (s.success()) {
      rec.termination = Termination::success;
      break;
    }
    if (s.step_count >= s.t_max) {
      rec.termination = Termination::timeout;
      break;
    }
    std::string action;
    if (policy == nullptr) {
      ++rec.queries;
      action = expert_bot(s);
    } else {
      PromptRequest req;
      req.instruction = rec.trajectory.instruction;
      req.observations = rec.trajectory.observations;
      req.observations.push_back(current);
      req.actions = rec.trajectory.actions;
      req.h_max = cfg->h_max;
      req.budget = cfg->budget;
      req.format = cfg->format;
      req.markers = cfg->markers;
      req.allow_degraded = cfg->allow_degraded;
      AssembledPrompt prompt = build_prompt(req, *tok);
      if (cfg->check_anchor && !prompt.degraded) check_prompt_anchor(prompt, cfg->markers, current);
      policy->observe_state(s);
      ++rec.queries;
      const ExtractedAction ex = extract_action(policy->next_continuation(prompt), cfg->markers);
      if (!ex.terminated || !validate_action(ex.action, vocabulary)) {
        if (++invalid >= max_invalid) {
          rec.termination = Termination::invalid_actions;
          break;
        }
        continue;
      }
      invalid = 0;
      action = normalize_action(ex.action);
    }
    GridState next = step(s, action);
    rec.trajectory.observations.push_back(current);
    rec.trajectory.actions.push_back(action);
    GridState before = s;
    before.step_count = next.step_count;
    idle = before == next ? idle + 1 : 0;
    s = std::move(next);
    current = observe(s);
    if (cfg != nullptr && cfg->max_idle_steps > 0 && idle >= cfg->max_idle_steps && !s.success()) {
      rec.termination = Termination::timeout;
      break;
    }
  }
  rec.final_observation = current;
  rec.reward = reward(s);
  return rec;
}

}  // namespace

EpisodeRecord rollout(const GridState& initial, Policy& policy, const RolloutConfig& cfg,
                      const Tokenizer& tok) {
  if (cfg.max_invalid == 0) throw std::invalid_argument("max_invalid must be >= 1");
  return drive(initial, &policy, &cfg, &tok);
}

EpisodeRecord run_expert(const GridState& initial) {
  return drive(initial, nullptr, nullptr, nullptr);
}

}  // namespace diffhist
