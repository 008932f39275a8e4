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

// Heaviside composite optimization problems:
//
//   max  c^T x - sum_g lambda_g ||x_g||_1 - rho*gamma + sum_k psi0_k H(phi_k(x))
//   s.t. sum psi H(phi) + sum w H(phi_u) H(phi_v) [+ gamma] >= b   per row
//        x in box, a^T x <= r for extra inequalities, gamma >= 0
//
// with H the closed Heaviside function and each phi_k a piecewise affine atom.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hscop/pwa.hpp"

namespace hscop {

struct Atom {
  int id = 0;
  PwaFn phi;
};

struct LinearHeavisideTerm {
  int atom = 0;
  double weight = 0.0;
};

/// weight * H(phi_u) * H(phi_v) with u != v.
struct ProductHeavisideTerm {
  int u = 0;
  int v = 0;
  double weight = 0.0;
};

struct ConstraintRow {
  std::vector<LinearHeavisideTerm> linear;
  std::vector<ProductHeavisideTerm> products;
  double rhs = 0.0;
  bool residual_allowed = false;
  std::string name;
};

struct L1Group {
  std::vector<int> indices;
  double weight = 0.0;
};

/// coef^T x <= rhs.
struct LinearInequality {
  Vector coef;
  double rhs = 0.0;
};

struct Objective {
  Vector cost;
  std::vector<L1Group> l1_groups;
  std::vector<LinearHeavisideTerm> heaviside;
  double residual_penalty = 1.0;
};

struct HscopProblem {
  std::size_t n = 0;
  Box box;
  std::vector<LinearInequality> inequalities;
  std::vector<Atom> atoms;
  Objective objective;
  std::vector<ConstraintRow> rows;
  // Groups of atoms of which at most one can be active at any x in the box.
  // Supplied by builders that know the structure; encoders add them as
  // valid inequalities.
  std::vector<std::vector<int>> exclusive_groups;

  bool has_residual_rows() const {
    return std::any_of(rows.begin(), rows.end(), [](const ConstraintRow& r) { return r.residual_allowed; });
  }

  /// Throws std::invalid_argument when the problem is malformed.
  void validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("HscopProblem: " + msg); };
    if (box.dim() != n) fail("box dimension differs from n");
    if (objective.cost.size() != n) fail("cost vector length differs from n");
    for (double c : objective.cost) detail::require_finite(c, "cost coefficient");
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      if (atoms[k].id != static_cast<int>(k)) fail("atom ids must be dense 0..K-1 in order");
      if (dim(atoms[k].phi) != n) fail("atom " + std::to_string(k) + " has wrong dimension");
    }
    const int K = static_cast<int>(atoms.size());
    auto check_atom = [&](int a) {
      if (a < 0 || a >= K) fail("reference to unknown atom " + std::to_string(a));
    };
    auto check_weight = [&](double w) {
      if (!std::isfinite(w) || w < 0.0) fail("Heaviside weights must be finite and nonnegative");
    };
    for (const auto& t : objective.heaviside) {
      check_atom(t.atom);
      check_weight(t.weight);
    }
    for (const auto& g : objective.l1_groups) {
      if (!std::isfinite(g.weight) || g.weight < 0.0) fail("l1 weights must be nonnegative");
      for (int i : g.indices) {
        if (i < 0 || static_cast<std::size_t>(i) >= n) fail("l1 group index out of range");
      }
    }
    for (const auto& ineq : inequalities) {
      if (ineq.coef.size() != n) fail("inequality has wrong dimension");
      for (double c : ineq.coef) detail::require_finite(c, "inequality coefficient");
      detail::require_finite(ineq.rhs, "inequality rhs");
    }
    for (const auto& row : rows) {
      detail::require_finite(row.rhs, "row rhs");
      for (const auto& t : row.linear) {
        check_atom(t.atom);
        check_weight(t.weight);
      }
      for (const auto& p : row.products) {
        check_atom(p.u);
        check_atom(p.v);
        if (p.u == p.v) fail("product term with identical atoms; fold it into a linear term");
        check_weight(p.weight);
      }
    }
    for (const auto& g : exclusive_groups) {
      for (int a : g) check_atom(a);
    }
    if (has_residual_rows() &&
        (!std::isfinite(objective.residual_penalty) || objective.residual_penalty <= 0.0)) {
      fail("residual penalty must be positive when residual rows exist");
    }
  }
};

struct Point {
  Vector x;
  double gamma = 0.0;
};

/// Relative slack used when comparing row values against right-hand sides;
/// sums of many weights are not exact in floating point.
inline constexpr double kRowTolerance = 1e-9;

struct Evaluation {
  double objective = 0.0;
  std::vector<double> phi;          // phi_k(x)
  std::vector<int> active;          // H(phi_k(x))
  std::vector<double> row_values;   // including gamma where allowed
  bool feasible = false;
};

inline double row_value_without_residual(const ConstraintRow& row, std::span<const int> active) {
  double v = 0.0;
  for (const auto& t : row.linear) v += t.weight * active[static_cast<std::size_t>(t.atom)];
  for (const auto& p : row.products) {
    v += p.weight * active[static_cast<std::size_t>(p.u)] * active[static_cast<std::size_t>(p.v)];
  }
  return v;
}

inline bool row_satisfied(double value, double rhs) {
  return value >= rhs - kRowTolerance * std::max(1.0, std::abs(rhs));
}

/// c^T x - sum lambda ||x_g||_1, the concave part without the residual.
inline double smooth_part(const HscopProblem& problem, std::span<const double> x) {
  double v = 0.0;
  for (std::size_t i = 0; i < problem.n; ++i) v += problem.objective.cost[i] * x[i];
  for (const auto& g : problem.objective.l1_groups) {
    double norm = 0.0;
    for (int i : g.indices) norm += std::abs(x[static_cast<std::size_t>(i)]);
    v -= g.weight * norm;
  }
  return v;
}

inline bool in_domain(const HscopProblem& problem, std::span<const double> x, double tol = 1e-9) {
  if (!problem.box.contains(x, tol)) return false;
  for (const auto& ineq : problem.inequalities) {
    double a = 0.0;
    for (std::size_t i = 0; i < problem.n; ++i) a += ineq.coef[i] * x[i];
    if (a > ineq.rhs + tol * std::max(1.0, std::abs(ineq.rhs))) return false;
  }
  return true;
}

inline Evaluation evaluate(const HscopProblem& problem, const Point& point) {
  detail::require_dim(point.x.size(), problem.n, "evaluate");
  Evaluation ev;
  ev.phi.reserve(problem.atoms.size());
  ev.active.reserve(problem.atoms.size());
  for (const auto& atom : problem.atoms) {
    const double v = eval(atom.phi, point.x);
    ev.phi.push_back(v);
    ev.active.push_back(heaviside_closed(v));
  }
  ev.feasible = point.gamma >= 0.0 && in_domain(problem, point.x);
  for (const auto& row : problem.rows) {
    double v = row_value_without_residual(row, ev.active);
    if (row.residual_allowed) v += point.gamma;
    ev.row_values.push_back(v);
    if (!row_satisfied(v, row.rhs)) ev.feasible = false;
  }
  double obj = smooth_part(problem, point.x);
  if (problem.has_residual_rows()) obj -= problem.objective.residual_penalty * point.gamma;
  for (const auto& t : problem.objective.heaviside) {
    obj += t.weight * ev.active[static_cast<std::size_t>(t.atom)];
  }
  ev.objective = obj;
  return ev;
}

/// Smallest gamma >= 0 satisfying every residual row at x, or nullopt when a
/// row without residual is violated.
inline std::optional<double> minimal_residual(const HscopProblem& problem, std::span<const double> x) {
  std::vector<int> active;
  active.reserve(problem.atoms.size());
  for (const auto& atom : problem.atoms) active.push_back(heaviside_closed(eval(atom.phi, x)));
  double gamma = 0.0;
  for (const auto& row : problem.rows) {
    const double v = row_value_without_residual(row, active);
    if (row.residual_allowed) {
      gamma = std::max(gamma, row.rhs - v);
    } else if (!row_satisfied(v, row.rhs)) {
      return std::nullopt;
    }
  }
  return gamma;
}

struct IndexSets {
  std::vector<int> lt;   // phi < -eps2
  std::vector<int> inb;  // -eps2 <= phi <= eps1
  std::vector<int> gt;   // phi > eps1
};

inline bool operator==(const IndexSets& a, const IndexSets& b) {
  return a.lt == b.lt && a.inb == b.inb && a.gt == b.gt;
}

inline IndexSets index_sets_from_values(std::span<const double> phi, double eps1, double eps2) {
  if (!(eps1 >= 0.0) || !(eps2 >= 0.0)) throw std::invalid_argument("index_sets: epsilons must be >= 0");
  IndexSets s;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const int id = static_cast<int>(k);
    if (phi[k] < -eps2) {
      s.lt.push_back(id);
    } else if (phi[k] > eps1) {
      s.gt.push_back(id);
    } else {
      s.inb.push_back(id);
    }
  }
  return s;
}

inline std::vector<double> atom_values(const HscopProblem& problem, std::span<const double> x) {
  std::vector<double> phi;
  phi.reserve(problem.atoms.size());
  for (const auto& atom : problem.atoms) phi.push_back(eval(atom.phi, x));
  return phi;
}

inline IndexSets index_sets(const HscopProblem& problem, std::span<const double> x, double eps1, double eps2) {
  detail::require_dim(x.size(), problem.n, "index_sets");
  return index_sets_from_values(atom_values(problem, x), eps1, eps2);
}

/// Lower bound of phi_k over the box.
inline double atom_lower_bound(const HscopProblem& problem, int atom) {
  return lower_bound_on_box(problem.atoms[static_cast<std::size_t>(atom)].phi, problem.box);
}

/// Global lower bound of all atoms over the box, clamped to be <= 0.
inline double phi_lower_bound(const HscopProblem& problem) {
  double b = 0.0;
  for (std::size_t k = 0; k < problem.atoms.size(); ++k) {
    b = std::min(b, atom_lower_bound(problem, static_cast<int>(k)));
  }
  return b;
}

// JSON serialization.

namespace detail {

using nlohmann::json;

inline json affine_list_to_json(const std::vector<AffineFn>& pieces) {
  json out = json::array();
  for (const auto& p : pieces) out.push_back({{"w", p.weights()}, {"b", p.offset()}});
  return out;
}

inline std::vector<AffineFn> affine_list_from_json(const json& j) {
  std::vector<AffineFn> pieces;
  for (const auto& p : j) pieces.emplace_back(p.at("w").get<Vector>(), p.at("b").get<double>());
  return pieces;
}

inline json terms_to_json(const std::vector<LinearHeavisideTerm>& terms) {
  json out = json::array();
  for (const auto& t : terms) out.push_back({{"atom", t.atom}, {"weight", t.weight}});
  return out;
}

inline std::vector<LinearHeavisideTerm> terms_from_json(const json& j) {
  std::vector<LinearHeavisideTerm> out;
  for (const auto& t : j) out.push_back({t.at("atom").get<int>(), t.at("weight").get<double>()});
  return out;
}

}  // namespace detail

/// Schema (version 1):
///   {"format": "hscop-problem", "version": 1, "n": int,
///    "box": {"lower": [..], "upper": [..]},
///    "inequalities": [{"coef": [..], "rhs": r}],
///    "atoms": [{"id": k, "kind": "min_affine", "pieces": [{"w": [..], "b": b}]}
///            | {"id": k, "kind": "dc", "plus": [pieces], "minus": [pieces]}],
///    "objective": {"cost": [..], "l1_groups": [{"indices": [..], "weight": w}],
///                  "heaviside": [{"atom": k, "weight": w}], "residual_penalty": rho},
///    "rows": [{"name": s, "linear": [{"atom", "weight"}],
///              "products": [{"u", "v", "weight"}], "rhs": b, "residual_allowed": bool}],
///    "exclusive_groups": [[k, ..]]}
inline nlohmann::json to_json(const HscopProblem& p) {
  using nlohmann::json;
  json atoms = json::array();
  for (const auto& a : p.atoms) {
    if (const auto* m = std::get_if<MinAffine>(&a.phi)) {
      atoms.push_back({{"id", a.id}, {"kind", "min_affine"}, {"pieces", detail::affine_list_to_json(m->pieces())}});
    } else {
      const auto& d = std::get<DcPwa>(a.phi);
      atoms.push_back({{"id", a.id},
                       {"kind", "dc"},
                       {"plus", detail::affine_list_to_json(d.plus().pieces())},
                       {"minus", detail::affine_list_to_json(d.minus().pieces())}});
    }
  }
  json groups = json::array();
  for (const auto& g : p.objective.l1_groups) groups.push_back({{"indices", g.indices}, {"weight", g.weight}});
  json ineqs = json::array();
  for (const auto& q : p.inequalities) ineqs.push_back({{"coef", q.coef}, {"rhs", q.rhs}});
  json rows = json::array();
  for (const auto& r : p.rows) {
    json prods = json::array();
    for (const auto& t : r.products) prods.push_back({{"u", t.u}, {"v", t.v}, {"weight", t.weight}});
    rows.push_back({{"name", r.name},
                    {"linear", detail::terms_to_json(r.linear)},
                    {"products", prods},
                    {"rhs", r.rhs},
                    {"residual_allowed", r.residual_allowed}});
  }
  return {{"format", "hscop-problem"},
          {"version", 1},
          {"n", p.n},
          {"box", {{"lower", p.box.lower()}, {"upper", p.box.upper()}}},
          {"inequalities", ineqs},
          {"atoms", atoms},
          {"objective",
           {{"cost", p.objective.cost},
            {"l1_groups", groups},
            {"heaviside", detail::terms_to_json(p.objective.heaviside)},
            {"residual_penalty", p.objective.residual_penalty}}},
          {"rows", rows},
          {"exclusive_groups", p.exclusive_groups}};
}

inline HscopProblem problem_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "hscop-problem" || j.value("version", 0) != 1) {
    throw std::invalid_argument("problem_from_json: unsupported format or version");
  }
  HscopProblem p;
  p.n = j.at("n").get<std::size_t>();
  p.box = Box(j.at("box").at("lower").get<Vector>(), j.at("box").at("upper").get<Vector>());
  for (const auto& q : j.value("inequalities", nlohmann::json::array())) {
    p.inequalities.push_back({q.at("coef").get<Vector>(), q.at("rhs").get<double>()});
  }
  for (const auto& a : j.at("atoms")) {
    const std::string kind = a.at("kind").get<std::string>();
    Atom atom;
    atom.id = a.at("id").get<int>();
    if (kind == "min_affine") {
      atom.phi = MinAffine(detail::affine_list_from_json(a.at("pieces")));
    } else if (kind == "dc") {
      atom.phi = DcPwa(MaxAffine(detail::affine_list_from_json(a.at("plus"))),
                       MaxAffine(detail::affine_list_from_json(a.at("minus"))));
    } else {
      throw std::invalid_argument("problem_from_json: unknown atom kind " + kind);
    }
    p.atoms.push_back(std::move(atom));
  }
  const auto& o = j.at("objective");
  p.objective.cost = o.at("cost").get<Vector>();
  for (const auto& g : o.value("l1_groups", nlohmann::json::array())) {
    p.objective.l1_groups.push_back({g.at("indices").get<std::vector<int>>(), g.at("weight").get<double>()});
  }
  p.objective.heaviside = detail::terms_from_json(o.value("heaviside", nlohmann::json::array()));
  p.objective.residual_penalty = o.value("residual_penalty", 1.0);
  for (const auto& r : j.value("rows", nlohmann::json::array())) {
    ConstraintRow row;
    row.name = r.value("name", "");
    row.linear = detail::terms_from_json(r.value("linear", nlohmann::json::array()));
    for (const auto& t : r.value("products", nlohmann::json::array())) {
      row.products.push_back({t.at("u").get<int>(), t.at("v").get<int>(), t.at("weight").get<double>()});
    }
    row.rhs = r.at("rhs").get<double>();
    row.residual_allowed = r.value("residual_allowed", false);
    p.rows.push_back(std::move(row));
  }
  p.exclusive_groups = j.value("exclusive_groups", std::vector<std::vector<int>>{});
  p.validate();
  return p;
}

}  // namespace hscop
