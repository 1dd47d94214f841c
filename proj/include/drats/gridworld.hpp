#pragma once

// Deterministic multi-task gridworlds: the per-task spec, the step rule, BFS
// path lengths, suite generation for a difficulty profile, episode rollouts,
// and a plain-text suite file format.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "drats/error.hpp"
#include "drats/rng.hpp"

namespace drats {

enum class Action : int { Up = 0, Down = 1, Left = 2, Right = 3 };
inline constexpr int kNumActions = 4;

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct GridworldSpec {
  int width = 7;
  int height = 7;
  std::vector<bool> walls;  // row-major, size width * height
  Cell start;
  Cell goal;
  double step_reward = -0.001;
  double goal_reward = 1.0;
  int max_steps = 15;

  int n_cells() const { return width * height; }
  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  int index(Cell c) const { return c.y * width + c.x; }
  Cell cell(int index) const { return {index % width, index / width}; }
  bool is_wall(Cell c) const { return walls[static_cast<std::size_t>(index(c))]; }

  friend bool operator==(const GridworldSpec&, const GridworldSpec&) = default;
};

inline Cell move(Cell c, Action a) {
  switch (a) {
    case Action::Up: return {c.x, c.y - 1};
    case Action::Down: return {c.x, c.y + 1};
    case Action::Left: return {c.x - 1, c.y};
    case Action::Right: return {c.x + 1, c.y};
  }
  return c;
}

struct StepResult {
  Cell next;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
};

// Moving into a wall or off the board leaves the agent in place. Reaching the
// goal terminates; using the last step without reaching it truncates.
inline StepResult step(const GridworldSpec& spec, Cell state, Action action, int step_index) {
  Cell next = move(state, action);
  if (!spec.in_bounds(next) || spec.is_wall(next)) next = state;
  StepResult r;
  r.next = next;
  if (next == spec.goal) {
    r.reward = spec.goal_reward;
    r.terminated = true;
  } else {
    r.reward = spec.step_reward;
    r.truncated = step_index + 1 >= spec.max_steps;
  }
  return r;
}

// Breadth-first distances (in steps) from `from` to every cell; -1 if unreachable.
inline std::vector<int> bfs_distances(const GridworldSpec& spec, Cell from) {
  std::vector<int> dist(static_cast<std::size_t>(spec.n_cells()), -1);
  if (!spec.in_bounds(from) || spec.is_wall(from)) return dist;
  std::deque<Cell> frontier{from};
  dist[static_cast<std::size_t>(spec.index(from))] = 0;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    for (int a = 0; a < kNumActions; ++a) {
      const Cell n = move(c, static_cast<Action>(a));
      if (!spec.in_bounds(n) || spec.is_wall(n)) continue;
      auto& d = dist[static_cast<std::size_t>(spec.index(n))];
      if (d >= 0) continue;
      d = dist[static_cast<std::size_t>(spec.index(c))] + 1;
      frontier.push_back(n);
    }
  }
  return dist;
}

inline int shortest_path_length(const GridworldSpec& spec) {
  return bfs_distances(spec, spec.start)[static_cast<std::size_t>(spec.index(spec.goal))];
}

inline void validate(const GridworldSpec& spec) {
  require(spec.width >= 1 && spec.height >= 1, "gridworld: empty board");
  require(spec.walls.size() == static_cast<std::size_t>(spec.n_cells()), "gridworld: wall mask has the wrong size");
  require(spec.in_bounds(spec.start) && spec.in_bounds(spec.goal), "gridworld: start or goal out of bounds");
  require(!spec.is_wall(spec.start) && !spec.is_wall(spec.goal), "gridworld: start or goal on a wall");
  require(!(spec.start == spec.goal), "gridworld: start equals goal");
  require(spec.max_steps >= 1, "gridworld: max_steps must be positive");
  require(shortest_path_length(spec) > 0, "gridworld: goal unreachable from start");
}

struct GridSuite {
  std::vector<GridworldSpec> tasks;
  double gamma = 0.99;

  std::size_t size() const { return tasks.size(); }
  int n_cells() const { return tasks.empty() ? 0 : tasks.front().n_cells(); }
};

inline void validate(const GridSuite& suite) {
  require(!suite.tasks.empty(), "suite: no tasks");
  require(suite.gamma >= 0.0 && suite.gamma <= 1.0, "suite: gamma outside [0,1]");
  for (const auto& t : suite.tasks) {
    validate(t);
    require(t.width == suite.tasks.front().width && t.height == suite.tasks.front().height,
            "suite: all tasks must share the board size");
  }
}

struct SuiteOptions {
  int width = 7;
  int height = 7;
  int max_steps = 15;
  double step_reward = -0.001;
  double goal_reward = 1.0;
  double gamma = 0.99;
};

// One task per profile entry on a shared open board with the goal in the
// bottom-right corner. The start of each task is the cell at the requested BFS
// distance lying closest to the board diagonal (ties: lowest cell index).
inline GridSuite build_gridworld_suite(const std::vector<int>& profile, const SuiteOptions& opt = {}) {
  require(!profile.empty(), "build_gridworld_suite: empty profile");
  GridSuite suite;
  suite.gamma = opt.gamma;
  for (int d : profile) {
    require(d >= 1, "build_gridworld_suite: path lengths must be positive");
    require(d <= opt.max_steps, "build_gridworld_suite: path length " + std::to_string(d) +
                                   " exceeds max_steps " + std::to_string(opt.max_steps));
    GridworldSpec spec;
    spec.width = opt.width;
    spec.height = opt.height;
    spec.walls.assign(static_cast<std::size_t>(opt.width * opt.height), false);
    spec.goal = {opt.width - 1, opt.height - 1};
    spec.step_reward = opt.step_reward;
    spec.goal_reward = opt.goal_reward;
    spec.max_steps = opt.max_steps;
    const auto dist = bfs_distances(spec, spec.goal);
    std::optional<int> best;
    int best_off = std::numeric_limits<int>::max();
    for (int i = 0; i < spec.n_cells(); ++i) {
      if (dist[static_cast<std::size_t>(i)] != d) continue;
      const Cell c = spec.cell(i);
      const int off = std::abs((opt.width - 1 - c.x) - (opt.height - 1 - c.y));
      if (off < best_off) {
        best_off = off;
        best = i;
      }
    }
    require(best.has_value(), "build_gridworld_suite: no cell at distance " + std::to_string(d) + " on a " +
                                  std::to_string(opt.width) + "x" + std::to_string(opt.height) + " board");
    spec.start = spec.cell(*best);
    validate(spec);
    suite.tasks.push_back(std::move(spec));
  }
  return suite;
}

struct Transition {
  int state = 0;  // cell index
  int action = 0;
  double reward = 0.0;
};

struct Trajectory {
  int task = 0;
  std::vector<Transition> steps;
  int final_state = 0;  // cell index after the last step
  bool terminated = false;
  bool truncated = false;
  bool success = false;

  std::size_t length() const { return steps.size(); }
  double total_return() const {
    double r = 0.0;
    for (const auto& s : steps) r += s.reward;
    return r;
  }
};

// Samples an action index from a probability row with one uniform draw.
inline int sample_index(const double* probs, int n, Engine& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  int last_positive = 0;
  for (int a = 0; a < n; ++a) {
    if (probs[a] <= 0.0) continue;
    acc += probs[a];
    last_positive = a;
    if (u < acc) return a;
  }
  return last_positive;
}

// Rolls out one episode. `action_probs(cell_index)` must return a pointer to
// kNumActions probabilities.
template <class ProbFn>
Trajectory rollout(const GridworldSpec& spec, int task, ProbFn&& action_probs, Engine& rng) {
  Trajectory traj;
  traj.task = task;
  traj.steps.reserve(static_cast<std::size_t>(spec.max_steps));
  Cell s = spec.start;
  for (int t = 0; t < spec.max_steps; ++t) {
    const double* p = action_probs(spec.index(s));
    const int a = sample_index(p, kNumActions, rng);
    const StepResult r = step(spec, s, static_cast<Action>(a), t);
    traj.steps.push_back({spec.index(s), a, r.reward});
    s = r.next;
    if (r.terminated) {
      traj.terminated = true;
      traj.success = true;
      break;
    }
    if (r.truncated) {
      traj.truncated = true;
      break;
    }
  }
  traj.final_state = spec.index(s);
  return traj;
}

// ---------------------------------------------------------------------------
// Suite file format
//
//   gridworld-suite 1
//   gamma 0.99
//   task
//   max_steps 15
//   step_reward -0.001
//   goal_reward 1
//   grid
//   .......
//   ..#....
//   S.....G
//   end
//
// Grid legend: '.' free, '#' wall, 'S' start, 'G' goal. Lines starting with
// '#' outside a grid block are comments.

inline std::string format_suite(const GridSuite& suite) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "gridworld-suite 1\n";
  os << "gamma " << suite.gamma << "\n";
  for (const auto& t : suite.tasks) {
    os << "task\n";
    os << "max_steps " << t.max_steps << "\n";
    os << "step_reward " << t.step_reward << "\n";
    os << "goal_reward " << t.goal_reward << "\n";
    os << "grid\n";
    for (int y = 0; y < t.height; ++y) {
      for (int x = 0; x < t.width; ++x) {
        const Cell c{x, y};
        char ch = t.is_wall(c) ? '#' : '.';
        if (c == t.start) ch = 'S';
        if (c == t.goal) ch = 'G';
        os << ch;
      }
      os << "\n";
    }
    os << "end\n";
  }
  return os.str();
}

inline GridSuite parse_suite(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw InvalidInput("suite line " + std::to_string(line_no) + ": " + msg);
  };
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      if (line[first] == '#') continue;
      line = line.substr(first);
      return true;
    }
    return false;
  };

  GridSuite suite;
  if (!next_line() || line.rfind("gridworld-suite", 0) != 0) fail("expected 'gridworld-suite <version>' header");
  {
    std::istringstream hs(line);
    std::string tag;
    int version = 0;
    hs >> tag >> version;
    if (version != 1) fail("unsupported suite version");
  }
  while (next_line()) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "gamma") {
      if (!(ls >> suite.gamma)) fail("bad gamma");
    } else if (key == "task") {
      GridworldSpec spec;
      std::vector<std::string> rows;
      bool have_grid = false;
      while (true) {
        if (!next_line()) fail("unterminated task block");
        std::istringstream ts(line);
        std::string k;
        ts >> k;
        if (k == "max_steps") {
          if (!(ts >> spec.max_steps)) fail("bad max_steps");
        } else if (k == "step_reward") {
          if (!(ts >> spec.step_reward)) fail("bad step_reward");
        } else if (k == "goal_reward") {
          if (!(ts >> spec.goal_reward)) fail("bad goal_reward");
        } else if (k == "grid") {
          // Grid rows are read raw: '#' is a wall here, not a comment.
          std::string row;
          bool closed = false;
          while (std::getline(is, row)) {
            ++line_no;
            if (!row.empty() && row.back() == '\r') row.pop_back();
            if (row == "end") {
              closed = true;
              break;
            }
            rows.push_back(row);
          }
          if (!closed) fail("grid without 'end'");
          have_grid = true;
          break;
        } else {
          fail("unknown task key '" + k + "'");
        }
      }
      if (!have_grid || rows.empty()) fail("task without grid");
      spec.height = static_cast<int>(rows.size());
      spec.width = static_cast<int>(rows.front().size());
      spec.walls.assign(static_cast<std::size_t>(spec.width * spec.height), false);
      int n_start = 0, n_goal = 0;
      for (int y = 0; y < spec.height; ++y) {
        if (static_cast<int>(rows[static_cast<std::size_t>(y)].size()) != spec.width) fail("ragged grid");
        for (int x = 0; x < spec.width; ++x) {
          const char ch = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)];
          switch (ch) {
            case '.': break;
            case '#': spec.walls[static_cast<std::size_t>(y * spec.width + x)] = true; break;
            case 'S': spec.start = {x, y}; ++n_start; break;
            case 'G': spec.goal = {x, y}; ++n_goal; break;
            default: fail(std::string("unknown grid character '") + ch + "'");
          }
        }
      }
      if (n_start != 1 || n_goal != 1) fail("grid needs exactly one S and one G");
      validate(spec);
      suite.tasks.push_back(std::move(spec));
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  validate(suite);
  return suite;
}

inline GridSuite load_suite(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open suite file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_suite(buf.str());
}

inline void save_suite(const GridSuite& suite, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write suite file '" + path + "'");
  out << format_suite(suite);
}

}  // namespace drats
