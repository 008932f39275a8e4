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

// Mixed-binary encodings of an HSCOP.
//
// Each atom k gets z_k with z_k = 1 => phi_k(x) >= margin and z_k = 0
// leaving phi_k free down to its box lower bound. Min-of-affine atoms need
// one big-M row per piece. A difference-of-convex atom P - Q uses
//   t >= p_l(x) for all plus pieces,  t - p_l(x) <= C v_l,  sum v_l <= L - 1
// (so t = P(x)), an epigraph m >= q(x) of the minus part, and
//   t - m >= B (1 - z) + margin z.
// Products H_u H_v become w with w <= z_u, w <= z_v, w >= z_u + z_v - 1.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hscop/hscop.hpp"
#include "hscop/milp.hpp"

namespace hscop {

struct EncodeOptions {
  // phi_k(x) >= activation_margin whenever z_k = 1, so an extracted point
  // activates the closed Heaviside despite solver round-off.
  double activation_margin = 1e-8;
  // Add sum z <= 1 over each exclusive group of the problem.
  bool exclusion_rows = true;
};

enum class AtomStatus { Free, Fixed0, Fixed1 };

struct AtomEncoding {
  AtomStatus status = AtomStatus::Free;
  int z = -1;            // binary, when Free
  int t = -1;            // plus-part epigraph of a DC atom
  int m = -1;            // minus-part epigraph of a DC atom
  std::vector<int> v;    // piece selectors of a DC atom
  double lower = 0.0;    // big-M lower bound used for this atom (<= 0)
  double big_c = 0.0;    // bound on t - plus piece over the box
  double margin = 0.0;   // activation margin used for this atom
};

struct EncodingMap {
  std::vector<int> x;
  int gamma = -1;
  std::vector<AtomEncoding> atoms;
  std::map<std::pair<int, int>, int> products;  // (u < v) -> w
  std::vector<std::pair<int, int>> l1;          // (x index, s var)
  double global_lower = 0.0;                    // B, the global phi lower bound
  int num_big_m_rows = 0;
  int num_mccormick_rows = 0;
  int num_dc_binaries = 0;
  std::vector<int> row_of_constraint;  // HSCOP row -> MILP row, -1 if dropped
};

namespace detail {

class Encoder {
 public:
  Encoder(const HscopProblem& problem, const EncodeOptions& options)
      : p_(problem), opt_(options) {}

  std::pair<milp::MilpModel, EncodingMap> build(std::span<const AtomStatus> status,
                                                std::span<const double> ref_phi) {
    using milp::Sense;
    using milp::Term;
    map_.global_lower = phi_lower_bound(p_);
    for (std::size_t i = 0; i < p_.n; ++i) {
      map_.x.push_back(model_.add_continuous(p_.box.lower()[i], p_.box.upper()[i], "x" + std::to_string(i)));
      model_.set_objective(map_.x.back(), p_.objective.cost[i]);
    }
    for (const auto& ineq : p_.inequalities) {
      std::vector<Term> terms;
      for (std::size_t i = 0; i < p_.n; ++i) terms.push_back({map_.x[i], ineq.coef[i]});
      model_.add_constraint(std::move(terms), Sense::LessEqual, ineq.rhs, "ineq");
    }
    for (const auto& g : p_.objective.l1_groups) {
      if (g.weight == 0.0) continue;
      for (int i : g.indices) {
        const auto ui = static_cast<std::size_t>(i);
        const double ub = std::max(std::abs(p_.box.lower()[ui]), std::abs(p_.box.upper()[ui]));
        const int s = model_.add_continuous(0.0, ub, "s" + std::to_string(i));
        model_.set_objective(s, -g.weight);
        model_.add_constraint({{s, 1.0}, {map_.x[ui], -1.0}}, Sense::GreaterEqual, 0.0, "l1p");
        model_.add_constraint({{s, 1.0}, {map_.x[ui], 1.0}}, Sense::GreaterEqual, 0.0, "l1m");
        map_.l1.emplace_back(i, s);
      }
    }
    if (p_.has_residual_rows()) {
      double cap = 0.0;
      for (const auto& r : p_.rows) {
        if (r.residual_allowed) cap = std::max(cap, r.rhs);
      }
      map_.gamma = model_.add_continuous(0.0, cap, "gamma");
      model_.set_objective(map_.gamma, -p_.objective.residual_penalty);
    }
    map_.atoms.resize(p_.atoms.size());
    for (std::size_t k = 0; k < p_.atoms.size(); ++k) {
      encode_atom(static_cast<int>(k), status[k], ref_phi.empty() ? std::nullopt : std::optional(ref_phi[k]));
    }
    double offset = 0.0;
    for (const auto& t : p_.objective.heaviside) {
      const auto& a = map_.atoms[static_cast<std::size_t>(t.atom)];
      if (a.status == AtomStatus::Free) model_.add_objective(a.z, t.weight);
      if (a.status == AtomStatus::Fixed1) offset += t.weight;
    }
    model_.set_objective_offset(offset);
    for (const auto& row : p_.rows) encode_row(row);
    if (opt_.exclusion_rows) {
      for (const auto& g : p_.exclusive_groups) {
        std::vector<Term> terms;
        double fixed = 0.0;
        for (int a : g) {
          const auto& e = map_.atoms[static_cast<std::size_t>(a)];
          if (e.status == AtomStatus::Free) terms.push_back({e.z, 1.0});
          if (e.status == AtomStatus::Fixed1) fixed += 1.0;
        }
        if (!terms.empty()) model_.add_constraint(std::move(terms), Sense::LessEqual, 1.0 - fixed, "excl");
      }
    }
    return {std::move(model_), std::move(map_)};
  }

 private:
  void encode_atom(int k, AtomStatus status, std::optional<double> ref) {
    using milp::Sense;
    using milp::Term;
    auto& enc = map_.atoms[static_cast<std::size_t>(k)];
    enc.status = status;
    enc.lower = std::min(0.0, atom_lower_bound(p_, k));
    enc.margin = opt_.activation_margin;
    // Keep the reference point feasible when it activates the atom by less
    // than the configured margin.
    if (ref && *ref >= 0.0) enc.margin = std::min(enc.margin, *ref);
    if (status == AtomStatus::Fixed0) return;
    const auto& phi = p_.atoms[static_cast<std::size_t>(k)].phi;
    if (status == AtomStatus::Free) {
      enc.z = model_.add_binary("z" + std::to_string(k));
    }
    // Row: g(x) - (margin - lower) z >= lower, or g(x) >= margin when fixed.
    auto add_activation = [&](std::vector<Term> terms, double constant) {
      if (status == AtomStatus::Free) {
        terms.push_back({enc.z, -(enc.margin - enc.lower)});
        model_.add_constraint(std::move(terms), Sense::GreaterEqual, enc.lower - constant, "bigm");
      } else {
        model_.add_constraint(std::move(terms), Sense::GreaterEqual, enc.margin - constant, "act");
      }
      ++map_.num_big_m_rows;
    };
    auto affine_terms = [&](const AffineFn& f, double sign) {
      std::vector<Term> terms;
      for (std::size_t i = 0; i < p_.n; ++i) {
        if (f.weights()[i] != 0.0) terms.push_back({map_.x[i], sign * f.weights()[i]});
      }
      return terms;
    };
    if (const auto* g = std::get_if<MinAffine>(&phi)) {
      for (const auto& piece : g->pieces()) add_activation(affine_terms(piece, 1.0), piece.offset());
      return;
    }
    const auto& dc = std::get<DcPwa>(phi);
    const auto& plus = dc.plus().pieces();
    const double t_lo = dc.plus().lower_bound(p_.box);
    const double t_hi = dc.plus().upper_bound(p_.box);
    enc.t = model_.add_continuous(t_lo, t_hi, "t" + std::to_string(k));
    enc.m = model_.add_continuous(dc.minus().lower_bound(p_.box), dc.minus().upper_bound(p_.box),
                                  "m" + std::to_string(k));
    for (const auto& piece : plus) {
      auto terms = affine_terms(piece, -1.0);
      terms.push_back({enc.t, 1.0});
      model_.add_constraint(std::move(terms), Sense::GreaterEqual, piece.offset(), "tge");
    }
    for (const auto& piece : dc.minus().pieces()) {
      auto terms = affine_terms(piece, -1.0);
      terms.push_back({enc.m, 1.0});
      model_.add_constraint(std::move(terms), Sense::GreaterEqual, piece.offset(), "mge");
    }
    if (plus.size() == 1) {
      auto terms = affine_terms(plus[0], -1.0);
      terms.push_back({enc.t, 1.0});
      model_.add_constraint(std::move(terms), Sense::LessEqual, plus[0].offset(), "tle");
    } else {
      for (const auto& piece : plus) enc.big_c = std::max(enc.big_c, t_hi - piece.lower_bound(p_.box));
      std::vector<Term> sum;
      for (std::size_t l = 0; l < plus.size(); ++l) {
        const int v = model_.add_binary("v" + std::to_string(k) + "_" + std::to_string(l));
        enc.v.push_back(v);
        ++map_.num_dc_binaries;
        auto terms = affine_terms(plus[l], -1.0);
        terms.push_back({enc.t, 1.0});
        terms.push_back({v, -enc.big_c});
        model_.add_constraint(std::move(terms), Sense::LessEqual, plus[l].offset(), "tle");
        sum.push_back({v, 1.0});
      }
      model_.add_constraint(std::move(sum), Sense::LessEqual, static_cast<double>(plus.size()) - 1.0, "vsum");
    }
    add_activation({{enc.t, 1.0}, {enc.m, -1.0}}, 0.0);
  }

  int product_var(int u, int v) {
    using milp::Sense;
    const auto key = std::minmax(u, v);
    auto it = map_.products.find(key);
    if (it != map_.products.end()) return it->second;
    const int zu = map_.atoms[static_cast<std::size_t>(key.first)].z;
    const int zv = map_.atoms[static_cast<std::size_t>(key.second)].z;
    const int w = model_.add_continuous(0.0, 1.0, "w" + std::to_string(key.first) + "_" + std::to_string(key.second));
    model_.add_constraint({{w, 1.0}, {zu, -1.0}}, Sense::LessEqual, 0.0, "mcu");
    model_.add_constraint({{w, 1.0}, {zv, -1.0}}, Sense::LessEqual, 0.0, "mcv");
    model_.add_constraint({{w, 1.0}, {zu, -1.0}, {zv, -1.0}}, Sense::GreaterEqual, -1.0, "mcl");
    map_.num_mccormick_rows += 3;
    map_.products.emplace(key, w);
    return w;
  }

  void encode_row(const ConstraintRow& row) {
    std::vector<milp::Term> terms;
    double constant = 0.0;
    auto status_of = [&](int a) { return map_.atoms[static_cast<std::size_t>(a)].status; };
    for (const auto& t : row.linear) {
      if (status_of(t.atom) == AtomStatus::Fixed1) constant += t.weight;
      if (status_of(t.atom) == AtomStatus::Free) terms.push_back({map_.atoms[static_cast<std::size_t>(t.atom)].z, t.weight});
    }
    for (const auto& pr : row.products) {
      const AtomStatus su = status_of(pr.u);
      const AtomStatus sv = status_of(pr.v);
      if (su == AtomStatus::Fixed0 || sv == AtomStatus::Fixed0) continue;
      if (su == AtomStatus::Fixed1 && sv == AtomStatus::Fixed1) {
        constant += pr.weight;
      } else if (su == AtomStatus::Fixed1) {
        terms.push_back({map_.atoms[static_cast<std::size_t>(pr.v)].z, pr.weight});
      } else if (sv == AtomStatus::Fixed1) {
        terms.push_back({map_.atoms[static_cast<std::size_t>(pr.u)].z, pr.weight});
      } else {
        terms.push_back({product_var(pr.u, pr.v), pr.weight});
      }
    }
    if (row.residual_allowed) terms.push_back({map_.gamma, 1.0});
    const double rhs = row.rhs - constant;
    if (terms.empty()) {
      if (!row_satisfied(0.0, rhs)) throw std::invalid_argument("encode: constant row is violated");
      map_.row_of_constraint.push_back(-1);
      return;
    }
    map_.row_of_constraint.push_back(model_.add_constraint(std::move(terms), milp::Sense::GreaterEqual, rhs,
                                                           row.name.empty() ? "row" : row.name));
  }

  const HscopProblem& p_;
  EncodeOptions opt_;
  milp::MilpModel model_;
  EncodingMap map_;
};

}  // namespace detail

std::vector<double> lift(const HscopProblem& problem, const milp::MilpModel& model, const EncodingMap& map,
                         std::span<const double> x);

/// The full mixed-binary program: one binary per atom.
inline std::pair<milp::MilpModel, EncodingMap> build_full_mip(const HscopProblem& problem,
                                                              const EncodeOptions& options = {}) {
  problem.validate();
  std::vector<AtomStatus> status(problem.atoms.size(), AtomStatus::Free);
  return detail::Encoder(problem, options).build(status, {});
}

/// The restricted program around x_bar: atoms in `sets.gt` are forced active,
/// atoms in `sets.lt` are dropped, atoms in `sets.inb` keep a binary.
inline std::pair<milp::MilpModel, EncodingMap> build_restricted_mip(const HscopProblem& problem,
                                                                    const Point& x_bar,
                                                                    const IndexSets& sets,
                                                                    const EncodeOptions& options = {}) {
  problem.validate();
  if (!evaluate(problem, x_bar).feasible) {
    throw std::invalid_argument("build_restricted_mip: reference point is infeasible");
  }
  if (sets.lt.size() + sets.inb.size() + sets.gt.size() != problem.atoms.size()) {
    throw std::invalid_argument("build_restricted_mip: index sets do not partition the atoms");
  }
  std::vector<AtomStatus> status(problem.atoms.size(), AtomStatus::Free);
  for (int a : sets.lt) status[static_cast<std::size_t>(a)] = AtomStatus::Fixed0;
  for (int a : sets.gt) status[static_cast<std::size_t>(a)] = AtomStatus::Fixed1;
  const auto phi = atom_values(problem, x_bar.x);
  auto out = detail::Encoder(problem, options).build(status, phi);
  out.first.hint = lift(problem, out.first, out.second, x_bar.x);
  return out;
}

/// Completes x to a full assignment of the encoded model: z from the atom
/// values, auxiliaries at their tightest values, gamma minimal. The result
/// may still violate the model (for instance a forced atom that x leaves
/// inactive); callers verify it.
inline std::vector<double> lift(const HscopProblem& problem, const milp::MilpModel& model,
                                const EncodingMap& map, std::span<const double> x) {
  std::vector<double> out(static_cast<std::size_t>(model.num_vars()), 0.0);
  for (std::size_t i = 0; i < map.x.size(); ++i) out[static_cast<std::size_t>(map.x[i])] = x[i];
  for (const auto& [i, s] : map.l1) out[static_cast<std::size_t>(s)] = std::abs(x[static_cast<std::size_t>(i)]);
  std::vector<int> z(problem.atoms.size(), 0);
  for (std::size_t k = 0; k < problem.atoms.size(); ++k) {
    const auto& enc = map.atoms[k];
    const auto& phi = problem.atoms[k].phi;
    const double value = eval(phi, x);
    if (enc.status == AtomStatus::Fixed1) z[k] = 1;
    if (enc.status == AtomStatus::Free) {
      z[k] = value >= enc.margin ? 1 : 0;
      out[static_cast<std::size_t>(enc.z)] = z[k];
    }
    if (enc.t >= 0) {
      const auto& dc = std::get<DcPwa>(phi);
      out[static_cast<std::size_t>(enc.t)] = dc.plus()(x);
      out[static_cast<std::size_t>(enc.m)] = dc.minus()(x);
      if (!enc.v.empty()) {
        const std::size_t active = dc.plus().active_piece(x);
        for (std::size_t l = 0; l < enc.v.size(); ++l) out[static_cast<std::size_t>(enc.v[l])] = l == active ? 0.0 : 1.0;
      }
    }
  }
  for (const auto& [key, w] : map.products) {
    out[static_cast<std::size_t>(w)] = z[static_cast<std::size_t>(key.first)] * z[static_cast<std::size_t>(key.second)];
  }
  if (map.gamma >= 0) {
    double gamma = 0.0;
    for (const auto& row : model.rows()) {
      double coef = 0.0;
      double rest = 0.0;
      for (const auto& t : row.terms) {
        if (t.var == map.gamma) {
          coef = t.coef;
        } else {
          rest += t.coef * out[static_cast<std::size_t>(t.var)];
        }
      }
      if (coef > 0.0) gamma = std::max(gamma, (row.rhs - rest) / coef);
    }
    const auto& gv = model.vars()[static_cast<std::size_t>(map.gamma)];
    out[static_cast<std::size_t>(map.gamma)] = std::clamp(gamma, gv.lower, gv.upper);
  }
  return out;
}

/// Rounds an LP point through lift(); usable as the engine's primal heuristic.
inline milp::PrimalHeuristic make_heuristic(const HscopProblem& problem, const milp::MilpModel& model,
                                            const EncodingMap& map) {
  return [&problem, &model, &map](std::span<const double> lp) -> std::optional<std::vector<double>> {
    Vector x(map.x.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = lp[static_cast<std::size_t>(map.x[i])];
    return lift(problem, model, map, x);
  };
}

struct ExtractedSolution {
  Point point;
  std::vector<int> z;  // per atom, including fixed ones
};

inline ExtractedSolution extract_solution(const milp::MilpSolution& solution, const EncodingMap& map) {
  if (!solution.has_solution()) {
    throw std::runtime_error(std::string("extract_solution: no solution (status ") +
                             milp::to_string(solution.status) + ")");
  }
  ExtractedSolution out;
  for (int j : map.x) out.point.x.push_back(solution.values[static_cast<std::size_t>(j)]);
  if (map.gamma >= 0) out.point.gamma = std::max(0.0, solution.values[static_cast<std::size_t>(map.gamma)]);
  for (const auto& enc : map.atoms) {
    switch (enc.status) {
      case AtomStatus::Fixed0: out.z.push_back(0); break;
      case AtomStatus::Fixed1: out.z.push_back(1); break;
      case AtomStatus::Free:
        out.z.push_back(solution.values[static_cast<std::size_t>(enc.z)] > 0.5 ? 1 : 0);
        break;
    }
  }
  return out;
}

}  // namespace hscop
