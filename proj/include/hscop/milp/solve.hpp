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

// Entry points of the MILP engine: LP relaxation, best-bound branch and
// bound, and exhaustive enumeration of binary assignments.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hscop/milp/model.hpp"
#include "hscop/milp/simplex.hpp"

namespace hscop::milp {

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

inline std::vector<int> binary_indices(const MilpModel& model) {
  std::vector<int> out;
  for (int j = 0; j < model.num_vars(); ++j) {
    if (model.vars()[static_cast<std::size_t>(j)].binary) out.push_back(j);
  }
  return out;
}

inline void snap_binaries(const MilpModel& model, std::vector<double>& x) {
  for (int j = 0; j < model.num_vars(); ++j) {
    if (model.vars()[static_cast<std::size_t>(j)].binary) {
      x[static_cast<std::size_t>(j)] = std::round(x[static_cast<std::size_t>(j)]);
    }
  }
}

inline double gap_of(double objective, double bound) {
  if (!std::isfinite(objective)) return kInf;
  return std::max(0.0, bound - objective) / std::max(1.0, std::abs(objective));
}

// Re-solves the LP with every binary fixed at its value in `x` so the
// continuous part is optimal for that assignment. Bounds on the engine are
// restored afterwards.
inline std::optional<std::vector<double>> polish(const MilpModel& model, DualSimplex& lp,
                                                 const std::vector<int>& binaries,
                                                 const std::vector<double>& x) {
  std::vector<std::pair<double, double>> saved;
  saved.reserve(binaries.size());
  for (int j : binaries) {
    saved.emplace_back(lp.lower(j), lp.upper(j));
    const double v = std::round(x[static_cast<std::size_t>(j)]);
    lp.set_bounds(j, v, v);
  }
  std::optional<std::vector<double>> out;
  if (lp.solve() == LpStatus::Optimal) {
    out = lp.values();
    snap_binaries(model, *out);
  }
  for (std::size_t k = 0; k < binaries.size(); ++k) {
    lp.set_bounds(binaries[k], saved[k].first, saved[k].second);
  }
  return out;
}

}  // namespace detail

/// Solves the LP relaxation (binaries relaxed to [0,1]).
inline MilpSolution solve_lp(const MilpModel& model) {
  model.validate();
  const auto start = detail::Clock::now();
  DualSimplex lp(model);
  MilpSolution sol;
  const LpStatus s = lp.solve();
  sol.lp_iterations = lp.iterations();
  sol.seconds = detail::seconds_since(start);
  if (s == LpStatus::Infeasible) {
    sol.status = SolveStatus::Infeasible;
    return sol;
  }
  if (s == LpStatus::NumericalFailure) {
    sol.status = SolveStatus::NumericalFailure;
    return sol;
  }
  sol.status = SolveStatus::Optimal;
  sol.values = lp.values();
  sol.objective = lp.objective();
  sol.bound = sol.objective;
  sol.gap = 0.0;
  return sol;
}

/// Exhaustive search over all binary assignments; each assignment is an LP.
/// Assignments are visited in Gray-code order so consecutive LPs differ in a
/// single bound and warm start from each other.
inline MilpSolution solve_enumeration(const MilpModel& model, const Tolerances& tol = {}) {
  model.validate();
  const auto binaries = detail::binary_indices(model);
  if (binaries.size() > 20) {
    throw std::invalid_argument("solve_enumeration: more than 20 binary variables");
  }
  const auto start = detail::Clock::now();
  DualSimplex lp(model);
  for (int j : binaries) lp.set_bounds(j, 0.0, 0.0);
  MilpSolution best;
  best.status = SolveStatus::Infeasible;
  const std::uint64_t count = std::uint64_t{1} << binaries.size();
  bool numerical = false;
  for (std::uint64_t k = 0; k < count; ++k) {
    if (k > 0) {
      // Gray code: flip the bit given by the lowest set bit of k.
      const int bit = __builtin_ctzll(k);
      const int j = binaries[static_cast<std::size_t>(bit)];
      const double v = lp.lower(j) == 0.0 ? 1.0 : 0.0;
      lp.set_bounds(j, v, v);
    }
    const LpStatus s = lp.solve();
    if (s == LpStatus::NumericalFailure) {
      numerical = true;
      continue;
    }
    if (s != LpStatus::Optimal) continue;
    auto x = lp.values();
    detail::snap_binaries(model, x);
    if (model.max_violation(x) > tol.feasibility) continue;
    const double obj = model.objective_value(x);
    if (best.status != SolveStatus::Optimal || obj > best.objective) {
      best.status = SolveStatus::Optimal;
      best.objective = obj;
      best.values = std::move(x);
    }
  }
  if (best.status != SolveStatus::Optimal && numerical) best.status = SolveStatus::NumericalFailure;
  best.bound = best.objective;
  best.gap = best.status == SolveStatus::Optimal ? 0.0 : kInf;
  best.nodes = static_cast<std::int64_t>(count);
  best.lp_iterations = lp.iterations();
  best.seconds = detail::seconds_since(start);
  return best;
}

/// Best-bound branch and bound on the most fractional binary.
inline MilpSolution solve_milp(const MilpModel& model, const Tolerances& tol = {}) {
  model.validate();
  const auto start = detail::Clock::now();
  const auto binaries = detail::binary_indices(model);
  const std::size_t nb = binaries.size();

  MilpSolution sol;
  std::vector<double> incumbent;
  double incumbent_obj = -kInf;

  auto offer = [&](std::vector<double> x) {
    if (x.size() != static_cast<std::size_t>(model.num_vars())) return;
    detail::snap_binaries(model, x);
    if (model.max_violation(x) > tol.feasibility) return;
    const double obj = model.objective_value(x);
    if (obj > incumbent_obj) {
      incumbent_obj = obj;
      incumbent = std::move(x);
    }
  };
  if (model.hint) offer(*model.hint);

  struct Node {
    double bound;
    int depth;
    std::int64_t id;
    std::vector<std::int8_t> fix;  // -1 free, 0 or 1 fixed; indexed like `binaries`
  };
  struct Worse {
    bool operator()(const Node& a, const Node& b) const {
      if (a.bound != b.bound) return a.bound < b.bound;
      if (a.depth != b.depth) return a.depth < b.depth;
      return a.id > b.id;
    }
  };
  std::priority_queue<Node, std::vector<Node>, Worse> open;
  std::int64_t next_id = 0;
  open.push({kInf, 0, next_id++, std::vector<std::int8_t>(nb, -1)});

  DualSimplex lp(model);
  std::vector<std::int8_t> applied(nb, -1);
  bool numerical = false;
  bool limit_hit = false;
  double best_open_bound = kInf;

  auto pruned = [&](double bound) {
    if (!std::isfinite(incumbent_obj)) return false;
    return bound - incumbent_obj <=
           std::max(tol.absolute_gap, tol.relative_gap * std::abs(incumbent_obj));
  };

  while (!open.empty()) {
    if (pruned(open.top().bound)) break;
    if ((model.time_limit_seconds && detail::seconds_since(start) >= *model.time_limit_seconds) ||
        (model.node_limit && sol.nodes >= *model.node_limit)) {
      limit_hit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    ++sol.nodes;

    for (std::size_t k = 0; k < nb; ++k) {
      if (node.fix[k] == applied[k]) continue;
      const int j = binaries[k];
      const auto& v = model.vars()[static_cast<std::size_t>(j)];
      if (node.fix[k] < 0) {
        lp.set_bounds(j, v.lower, v.upper);
      } else {
        const double f = node.fix[k];
        lp.set_bounds(j, f, f);
      }
      applied[k] = node.fix[k];
    }
    const LpStatus s = lp.solve();
    if (s == LpStatus::NumericalFailure) {
      numerical = true;
      continue;
    }
    if (s == LpStatus::Infeasible) continue;
    const double obj = lp.objective();
    if (pruned(obj)) continue;
    auto x = lp.values();

    if (model.heuristic) {
      if (auto cand = model.heuristic(x)) offer(std::move(*cand));
      if (pruned(obj)) continue;
    }

    std::size_t branch = nb;
    double best_frac = tol.integrality;
    for (std::size_t k = 0; k < nb; ++k) {
      const double v = x[static_cast<std::size_t>(binaries[k])];
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac > best_frac) {
        best_frac = frac;
        branch = k;
      }
    }
    if (branch == nb) {
      offer(x);
      continue;
    }
    const double child_bound = std::min(obj, node.bound);
    for (std::int8_t val : {std::int8_t{1}, std::int8_t{0}}) {
      Node child{child_bound, node.depth + 1, next_id++, node.fix};
      child.fix[branch] = val;
      open.push(std::move(child));
    }
  }
  if (!open.empty()) best_open_bound = open.top().bound;
  else best_open_bound = -kInf;

  // Polish the incumbent's continuous part.
  if (!incumbent.empty() && nb > 0) {
    if (auto p = detail::polish(model, lp, binaries, incumbent)) offer(std::move(*p));
  }

  sol.lp_iterations = lp.iterations();
  sol.seconds = detail::seconds_since(start);
  if (incumbent.empty()) {
    if (limit_hit) {
      sol.status = SolveStatus::NoIncumbent;
    } else {
      sol.status = numerical ? SolveStatus::NumericalFailure : SolveStatus::Infeasible;
    }
    sol.bound = limit_hit ? best_open_bound : -kInf;
    return sol;
  }
  sol.values = incumbent;
  sol.objective = incumbent_obj;
  sol.bound = std::max(incumbent_obj, best_open_bound);
  sol.gap = detail::gap_of(sol.objective, sol.bound);
  sol.status = limit_hit ? SolveStatus::FeasibleTimeLimit : SolveStatus::Optimal;
  if (sol.status == SolveStatus::Optimal && numerical) {
    // Some subtree could not be solved; the optimality claim is not proven.
    sol.status = SolveStatus::FeasibleTimeLimit;
  }
  return sol;
}

}  // namespace hscop::milp
