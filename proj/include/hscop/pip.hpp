// Copyright 2026 The hscop Authors
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

// Progressive integer programming: repeatedly solve the restricted program
// around the current iterate, shrinking the in-between band after an
// improvement and enlarging it after a stall.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hscop/encode.hpp"
#include "hscop/hscop.hpp"
#include "hscop/milp.hpp"

namespace hscop {

struct PipConfig {
  double eps1 = 0.5;
  double eps2 = 0.5;
  double expand_factor = 2.0;
  // In-between atoms per subproblem are capped at ceil(cap_fraction * K).
  double cap_fraction = 1.0;
  double improvement_tol = 1e-6;
  int max_stale_expansions = 10;
  int max_iterations = 1000;
  double subproblem_time_limit = 300.0;
  std::optional<double> total_time_limit;
  EncodeOptions encode;
  milp::Tolerances tolerances;

  void validate() const {
    if (!(eps1 > 0.0) || !(eps2 > 0.0)) throw std::invalid_argument("PipConfig: epsilons must be positive");
    if (!(expand_factor > 1.0)) throw std::invalid_argument("PipConfig: expand_factor must exceed 1");
    if (!(cap_fraction > 0.0) || cap_fraction > 1.0) throw std::invalid_argument("PipConfig: cap_fraction must be in (0,1]");
    if (!(improvement_tol > 0.0)) throw std::invalid_argument("PipConfig: improvement_tol must be positive");
    if (max_stale_expansions < 1 || max_iterations < 1) throw std::invalid_argument("PipConfig: limits must be >= 1");
    if (!(subproblem_time_limit > 0.0)) throw std::invalid_argument("PipConfig: time limit must be positive");
  }
};

struct PipIterationLog {
  int iteration = 0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  int num_lt = 0;
  int num_inb = 0;
  int num_gt = 0;
  int binaries = 0;
  double mip_objective = 0.0;
  double mu = 0.0;  // objective of the iterate after this step
  bool improved = false;
  bool cap_violated = false;
  milp::SolveStatus status = milp::SolveStatus::Optimal;
  double seconds = 0.0;
};

struct PipState {
  int iteration = 0;
  Point x;
  double mu = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  int stale_count = 0;
  std::vector<PipIterationLog> history;
  // Sets and status of the most recent subproblem.
  IndexSets last_sets;
  bool last_cap_binding = false;
  bool last_improved = false;
  bool last_certifiable = false;
  std::int64_t binaries_solved = 0;
};

struct PipResult {
  Point x;
  double mu = 0.0;
  bool certificate = false;
  int iterations = 0;
  std::int64_t binaries_solved = 0;
  std::string termination;
  IndexSets terminal_sets;
  std::vector<PipIterationLog> history;
  double seconds = 0.0;
};

inline nlohmann::json to_json(const PipIterationLog& l) {
  return {{"iteration", l.iteration}, {"eps1", l.eps1},          {"eps2", l.eps2},
          {"lt", l.num_lt},           {"inb", l.num_inb},        {"gt", l.num_gt},
          {"binaries", l.binaries},   {"mip_objective", l.mip_objective},
          {"mu", l.mu},               {"improved", l.improved},  {"cap_violated", l.cap_violated},
          {"status", milp::to_string(l.status)}, {"seconds", l.seconds}};
}

/// Zero projected onto the box, with the smallest feasible residual.
inline Point initial_point(const HscopProblem& problem) {
  Point p;
  p.x.resize(problem.n);
  for (std::size_t i = 0; i < problem.n; ++i) {
    p.x[i] = std::clamp(0.0, problem.box.lower()[i], problem.box.upper()[i]);
  }
  const auto gamma = minimal_residual(problem, p.x);
  if (!gamma || !in_domain(problem, p.x)) {
    throw std::invalid_argument("initial_point: the default start is infeasible; supply a feasible start");
  }
  p.gamma = *gamma;
  return p;
}

struct EpsilonChoice {
  double eps1 = 0.0;
  double eps2 = 0.0;
  IndexSets sets;
  bool cap_binding = false;   // the requested band held more than `cap` atoms
  bool cap_violated = false;  // exact-zero atoms alone exceed `cap`
};

/// Shrinks the requested band by a common factor until at most `cap` atoms
/// are in-between. Atoms enter the band in order of |phi|/eps on their side;
/// ties are broken by atom index, and atoms beyond the cap go to lt or gt by
/// sign. Atoms with phi exactly 0 cannot be excluded and always stay.
inline EpsilonChoice choose_epsilons(std::span<const double> phi, double eps1, double eps2, std::size_t cap) {
  EpsilonChoice out;
  out.eps1 = eps1;
  out.eps2 = eps2;
  out.sets = index_sets_from_values(phi, eps1, eps2);
  if (out.sets.inb.size() <= cap) return out;
  out.cap_binding = true;
  // Entry threshold of each in-between atom as a fraction of the band.
  auto threshold = [&](int k) {
    const double v = phi[static_cast<std::size_t>(k)];
    if (v == 0.0) return 0.0;
    return v > 0.0 ? v / eps1 : -v / eps2;
  };
  std::vector<int> order = out.sets.inb;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return threshold(a) < threshold(b); });
  std::size_t zeros = 0;
  for (int k : order) zeros += phi[static_cast<std::size_t>(k)] == 0.0 ? 1 : 0;
  const std::size_t keep = std::max(cap, zeros);
  out.cap_violated = zeros > cap;
  const double s = keep == 0 ? 0.0 : threshold(order[keep - 1]);
  out.eps1 = eps1 * s;
  out.eps2 = eps2 * s;
  IndexSets sets;
  sets.lt = out.sets.lt;
  sets.gt = out.sets.gt;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int k = order[i];
    if (i < keep) {
      sets.inb.push_back(k);
    } else if (phi[static_cast<std::size_t>(k)] > 0.0) {
      sets.gt.push_back(k);
    } else {
      sets.lt.push_back(k);
    }
  }
  for (auto* v : {&sets.lt, &sets.inb, &sets.gt}) std::sort(v->begin(), v->end());
  out.sets = std::move(sets);
  return out;
}

inline EpsilonChoice choose_epsilons(const HscopProblem& problem, const Point& x_bar, double eps1, double eps2,
                                     std::size_t cap) {
  return choose_epsilons(atom_values(problem, x_bar.x), eps1, eps2, cap);
}

inline std::size_t binary_cap(const HscopProblem& problem, const PipConfig& config) {
  return static_cast<std::size_t>(std::ceil(config.cap_fraction * static_cast<double>(problem.atoms.size()) - 1e-9));
}

inline PipState make_state(const HscopProblem& problem, const Point& start, const PipConfig& config) {
  const auto ev = evaluate(problem, start);
  if (!ev.feasible) throw std::invalid_argument("PIP: starting point is infeasible");
  PipState s;
  s.x = start;
  s.mu = ev.objective;
  s.eps1 = config.eps1;
  s.eps2 = config.eps2;
  return s;
}

/// Maps a subproblem solution back to the original problem: x is clamped to
/// the box and gamma recomputed as the minimal residual.
inline std::optional<Point> repair_point(const HscopProblem& problem, Vector x) {
  for (std::size_t i = 0; i < problem.n; ++i) x[i] = std::clamp(x[i], problem.box.lower()[i], problem.box.upper()[i]);
  const auto gamma = minimal_residual(problem, x);
  if (!gamma) return std::nullopt;
  Point p{std::move(x), *gamma};
  if (!evaluate(problem, p).feasible) return std::nullopt;
  return p;
}

/// Builds and solves the restricted program at (x, sets).
inline milp::MilpSolution solve_restricted(const HscopProblem& problem, const Point& x, const IndexSets& sets,
                                           const PipConfig& config, double time_limit, int* binaries = nullptr,
                                           EncodingMap* map_out = nullptr) {
  auto [model, map] = build_restricted_mip(problem, x, sets, config.encode);
  model.time_limit_seconds = time_limit;
  model.heuristic = make_heuristic(problem, model, map);
  if (binaries) *binaries = model.num_binaries();
  auto sol = milp::solve_milp(model, config.tolerances);
  if (map_out) *map_out = std::move(map);
  return sol;
}

/// Full-MIP solve with the default start as hint.
struct FullSolveResult {
  milp::MilpSolution mip;
  std::optional<Point> x;  // repaired solution: clamped to the box, minimal gamma
  double objective = -milp::kInf;
  int binaries = 0;
};

inline FullSolveResult solve_full(const HscopProblem& problem, std::optional<double> time_limit = std::nullopt,
                                  const EncodeOptions& options = {}, const milp::Tolerances& tolerances = {},
                                  std::optional<Point> start = std::nullopt) {
  auto [model, map] = build_full_mip(problem, options);
  model.time_limit_seconds = time_limit;
  model.heuristic = make_heuristic(problem, model, map);
  if (!start) {
    try {
      start = initial_point(problem);
    } catch (const std::invalid_argument&) {
    }
  }
  if (start) model.hint = lift(problem, model, map, start->x);
  FullSolveResult out;
  out.binaries = model.num_binaries();
  out.mip = milp::solve_milp(model, tolerances);
  if (out.mip.has_solution()) {
    const auto ext = extract_solution(out.mip, map);
    out.x = repair_point(problem, ext.point.x);
    if (!out.x) out.x = ext.point;
    out.objective = evaluate(problem, *out.x).objective;
  }
  return out;
}

/// One PIP iteration.
inline PipState pip_step(const HscopProblem& problem, PipState state, const PipConfig& config,
                         std::optional<double> time_budget = std::nullopt) {
  const auto start = std::chrono::steady_clock::now();
  const auto choice = choose_epsilons(problem, state.x, state.eps1, state.eps2, binary_cap(problem, config));
  PipIterationLog log;
  log.iteration = state.iteration;
  log.eps1 = choice.eps1;
  log.eps2 = choice.eps2;
  log.num_lt = static_cast<int>(choice.sets.lt.size());
  log.num_inb = static_cast<int>(choice.sets.inb.size());
  log.num_gt = static_cast<int>(choice.sets.gt.size());
  log.cap_violated = choice.cap_violated;

  double limit = config.subproblem_time_limit;
  if (time_budget) limit = std::max(0.0, std::min(limit, *time_budget));
  EncodingMap map;
  const auto sol = solve_restricted(problem, state.x, choice.sets, config, limit, &log.binaries, &map);
  log.status = sol.status;
  log.mip_objective = sol.objective;
  state.binaries_solved += log.binaries;

  if (sol.status == milp::SolveStatus::NumericalFailure) {
    throw std::runtime_error("PIP: subproblem solver reported a numerical failure");
  }
  bool improved = false;
  if (sol.has_solution()) {
    if (auto cand = repair_point(problem, extract_solution(sol, map).point.x)) {
      const double mu = evaluate(problem, *cand).objective;
      if (mu > state.mu + config.improvement_tol) {
        state.x = std::move(*cand);
        state.mu = mu;
        improved = true;
      }
    }
  }
  // The hint is feasible, so a time-limited solve always has an incumbent;
  // anything else means the subproblem gave no information.
  state.last_certifiable = !improved && sol.status == milp::SolveStatus::Optimal &&
                           sol.objective <= state.mu + config.improvement_tol;
  if (improved) {
    state.eps1 = choice.eps1 / config.expand_factor;
    state.eps2 = choice.eps2 / config.expand_factor;
    state.stale_count = 0;
  } else {
    state.eps1 = choice.eps1 * config.expand_factor;
    state.eps2 = choice.eps2 * config.expand_factor;
    ++state.stale_count;
  }
  // A band collapsed to zero by the cap is reopened at the configured width.
  if (state.eps1 == 0.0 || state.eps2 == 0.0) {
    state.eps1 = std::max(state.eps1, config.eps1 * std::numeric_limits<double>::epsilon());
    state.eps2 = std::max(state.eps2, config.eps2 * std::numeric_limits<double>::epsilon());
  }
  state.last_sets = choice.sets;
  state.last_cap_binding = choice.cap_binding;
  state.last_improved = improved;
  log.improved = improved;
  log.mu = state.mu;
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  state.history.push_back(log);
  ++state.iteration;
  return state;
}

/// Runs PIP from `start` (or initial_point()) until the band stops paying
/// off. Each iteration's log is also written to `log_stream` as JSON lines,
/// and `on_step` sees the state after every iteration.
inline PipResult run_pip(const HscopProblem& problem, const PipConfig& config,
                         std::optional<Point> start = std::nullopt, std::ostream* log_stream = nullptr,
                         const std::function<void(const PipState&)>& on_step = {}) {
  problem.validate();
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  PipState state = make_state(problem, start ? *start : initial_point(problem), config);
  PipResult result;
  bool time_ok = true;
  while (true) {
    if (state.iteration >= config.max_iterations) {
      result.termination = "max_iterations";
      break;
    }
    std::optional<double> budget;
    if (config.total_time_limit) {
      budget = *config.total_time_limit - elapsed();
      if (*budget <= 0.0) {
        result.termination = "time_limit";
        time_ok = false;
        break;
      }
    }
    try {
      state = pip_step(problem, std::move(state), config, budget);
    } catch (const std::runtime_error&) {
      result.termination = "solver_failure";
      time_ok = false;
      break;
    }
    if (log_stream) *log_stream << to_json(state.history.back()).dump() << '\n';
    if (on_step) on_step(state);
    if (state.last_improved) continue;
    if (state.stale_count >= config.max_stale_expansions) {
      result.termination = "stale";
      break;
    }
    // With the deterministic engine an identical subproblem gives an
    // identical answer: stop once enlarging the band cannot change it.
    const bool all_in = state.last_sets.inb.size() == problem.atoms.size();
    if (state.last_certifiable && (all_in || state.last_cap_binding)) {
      result.termination = all_in ? "band_covers_all_atoms" : "band_at_cap";
      break;
    }
  }
  result.x = state.x;
  result.mu = state.mu;
  result.iterations = state.iteration;
  result.binaries_solved = state.binaries_solved;
  result.terminal_sets = state.last_sets;
  result.certificate = time_ok && state.iteration > 0 && !state.last_improved && state.last_certifiable &&
                       std::none_of(state.history.begin(), state.history.end(), [](const PipIterationLog& l) {
                         return l.status == milp::SolveStatus::FeasibleTimeLimit;
                       });
  result.history = std::move(state.history);
  result.seconds = elapsed();
  return result;
}

}  // namespace hscop
