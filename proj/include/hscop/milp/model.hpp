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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hscop::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, GreaterEqual, Equal };

struct Variable {
  double lower = 0.0;
  double upper = 0.0;
  bool binary = false;
  std::string name;
};

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Constraint {
  std::vector<Term> terms;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
  std::string name;

  double activity(std::span<const double> x) const {
    double a = 0.0;
    for (const auto& t : terms) a += t.coef * x[t.var];
    return a;
  }

  /// Amount by which x violates the row (0 when satisfied).
  double violation(std::span<const double> x) const {
    const double a = activity(x);
    switch (sense) {
      case Sense::LessEqual: return std::max(0.0, a - rhs);
      case Sense::GreaterEqual: return std::max(0.0, rhs - a);
      case Sense::Equal: return std::abs(a - rhs);
    }
    return 0.0;
  }
};

struct Tolerances {
  double integrality = 1e-6;
  double feasibility = 1e-7;
  double relative_gap = 1e-6;
  double absolute_gap = 1e-8;
};

/// Maps an LP relaxation point to a candidate full assignment. The engine
/// verifies every candidate before using it as an incumbent.
using PrimalHeuristic =
    std::function<std::optional<std::vector<double>>(std::span<const double> lp_values)>;

/// Mixed-binary linear program, always maximized:
///   max c^T x + offset  s.t. rows, lower <= x <= upper, x_j in {0,1} for binaries.
class MilpModel {
 public:
  int add_continuous(double lower, double upper, std::string name = {}) {
    vars_.push_back({lower, upper, false, std::move(name)});
    objective_.push_back(0.0);
    return static_cast<int>(vars_.size()) - 1;
  }

  int add_binary(std::string name = {}) {
    vars_.push_back({0.0, 1.0, true, std::move(name)});
    objective_.push_back(0.0);
    return static_cast<int>(vars_.size()) - 1;
  }

  int add_constraint(std::vector<Term> terms, Sense sense, double rhs, std::string name = {}) {
    // Merge duplicate variables and drop explicit zeros.
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
    std::vector<Term> merged;
    merged.reserve(terms.size());
    for (const auto& t : terms) {
      if (!merged.empty() && merged.back().var == t.var) {
        merged.back().coef += t.coef;
      } else {
        merged.push_back(t);
      }
    }
    std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });
    rows_.push_back({std::move(merged), sense, rhs, std::move(name)});
    return static_cast<int>(rows_.size()) - 1;
  }

  void set_objective(int var, double coef) { objective_.at(static_cast<std::size_t>(var)) = coef; }
  void add_objective(int var, double coef) { objective_.at(static_cast<std::size_t>(var)) += coef; }
  void set_objective_offset(double offset) { offset_ = offset; }

  void set_bounds(int var, double lower, double upper) {
    auto& v = vars_.at(static_cast<std::size_t>(var));
    v.lower = lower;
    v.upper = upper;
  }

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  int num_binaries() const {
    return static_cast<int>(std::count_if(vars_.begin(), vars_.end(),
                                          [](const Variable& v) { return v.binary; }));
  }

  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<Constraint>& rows() const { return rows_; }
  const std::vector<double>& objective() const { return objective_; }
  double objective_offset() const { return offset_; }

  std::optional<std::vector<double>> hint;
  std::optional<double> time_limit_seconds;
  std::optional<std::int64_t> node_limit;
  PrimalHeuristic heuristic;

  /// Throws std::invalid_argument when the model is malformed.
  void validate() const {
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      const auto& v = vars_[j];
      if (!std::isfinite(v.lower) || !std::isfinite(v.upper)) {
        throw std::invalid_argument("variable " + std::to_string(j) + " has a non-finite bound");
      }
      if (v.lower > v.upper) {
        throw std::invalid_argument("variable " + std::to_string(j) + " has lower > upper");
      }
      if (v.binary && (v.lower < 0.0 || v.upper > 1.0)) {
        throw std::invalid_argument("binary variable " + std::to_string(j) +
                                    " has bounds outside [0,1]");
      }
      if (!std::isfinite(objective_[j])) {
        throw std::invalid_argument("objective coefficient " + std::to_string(j) + " not finite");
      }
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      if (!std::isfinite(rows_[r].rhs)) {
        throw std::invalid_argument("row " + std::to_string(r) + " has a non-finite rhs");
      }
      for (const auto& t : rows_[r].terms) {
        if (t.var < 0 || t.var >= num_vars()) {
          throw std::invalid_argument("row " + std::to_string(r) + " references unknown variable");
        }
        if (!std::isfinite(t.coef)) {
          throw std::invalid_argument("row " + std::to_string(r) + " has a non-finite coefficient");
        }
      }
    }
    if (hint && hint->size() != vars_.size()) {
      throw std::invalid_argument("hint length does not match the number of variables");
    }
  }

  double objective_value(std::span<const double> x) const {
    double v = offset_;
    for (std::size_t j = 0; j < objective_.size(); ++j) v += objective_[j] * x[j];
    return v;
  }

  /// Largest bound, row or integrality violation of x.
  double max_violation(std::span<const double> x, bool check_integrality = true) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      worst = std::max({worst, vars_[j].lower - x[j], x[j] - vars_[j].upper});
      if (check_integrality && vars_[j].binary) {
        worst = std::max(worst, std::min(std::abs(x[j]), std::abs(1.0 - x[j])));
      }
    }
    for (const auto& row : rows_) worst = std::max(worst, row.violation(x));
    return worst;
  }

  bool is_feasible(std::span<const double> x, double tol) const {
    return x.size() == vars_.size() && max_violation(x) <= tol;
  }

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  std::vector<double> objective_;
  double offset_ = 0.0;
};

enum class SolveStatus {
  Optimal,
  FeasibleTimeLimit,
  Infeasible,
  Unbounded,
  NoIncumbent,
  NumericalFailure,
};

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::FeasibleTimeLimit: return "FeasibleTimeLimit";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::NoIncumbent: return "NoIncumbent";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

struct MilpSolution {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<double> values;
  double objective = -kInf;
  double bound = kInf;  // best dual (upper) bound
  double gap = kInf;
  std::int64_t nodes = 0;
  std::int64_t lp_iterations = 0;
  double seconds = 0.0;

  bool has_solution() const {
    return status == SolveStatus::Optimal || status == SolveStatus::FeasibleTimeLimit;
  }
};

/// Writes the model in a CPLEX-LP-like text form for debugging. The grammar
/// is: a "Maximize" section with the objective, a "Subject To" section with
/// one named row per line, a "Bounds" section and a "Binaries" list.
inline void write_lp(std::ostream& os, const MilpModel& model) {
  auto name_of = [&](int j) {
    const auto& n = model.vars()[static_cast<std::size_t>(j)].name;
    return n.empty() ? "v" + std::to_string(j) : n;
  };
  auto write_terms = [&](const std::vector<Term>& terms) {
    if (terms.empty()) {
      os << " 0";
      return;
    }
    for (const auto& t : terms) {
      os << (t.coef < 0 ? " - " : " + ") << std::abs(t.coef) << ' ' << name_of(t.var);
    }
  };
  os << "Maximize\n obj:";
  std::vector<Term> obj;
  for (int j = 0; j < model.num_vars(); ++j) {
    if (model.objective()[static_cast<std::size_t>(j)] != 0.0) {
      obj.push_back({j, model.objective()[static_cast<std::size_t>(j)]});
    }
  }
  write_terms(obj);
  if (model.objective_offset() != 0.0) os << " + " << model.objective_offset();
  os << "\nSubject To\n";
  for (int r = 0; r < model.num_rows(); ++r) {
    const auto& row = model.rows()[static_cast<std::size_t>(r)];
    os << ' ' << (row.name.empty() ? "r" + std::to_string(r) : row.name) << ':';
    write_terms(row.terms);
    os << (row.sense == Sense::LessEqual ? " <= " : row.sense == Sense::GreaterEqual ? " >= " : " = ")
       << row.rhs << '\n';
  }
  os << "Bounds\n";
  for (int j = 0; j < model.num_vars(); ++j) {
    const auto& v = model.vars()[static_cast<std::size_t>(j)];
    if (!v.binary) os << ' ' << v.lower << " <= " << name_of(j) << " <= " << v.upper << '\n';
  }
  os << "Binaries\n";
  for (int j = 0; j < model.num_vars(); ++j) {
    if (model.vars()[static_cast<std::size_t>(j)].binary) os << ' ' << name_of(j) << '\n';
  }
  os << "End\n";
}

}  // namespace hscop::milp
