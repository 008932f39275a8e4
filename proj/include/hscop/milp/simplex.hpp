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

// Bounded-variable simplex on a dense tableau.
//
// Every row r of the model is written as a_r x - y_r = 0 with a logical
// variable y_r whose bounds encode the row sense, so the tableau always has
// the form T = B^{-1} [A | -I]. Structural variables must have finite bounds;
// placing each nonbasic structural variable at the bound favoured by the sign
// of its cost makes the all-logical basis dual feasible, so no phase one is
// needed. Bound changes (branching) keep the basis dual feasible and the dual
// simplex restores primal feasibility from the previous basis.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "hscop/milp/model.hpp"

namespace hscop::milp {

enum class LpStatus { Optimal, Infeasible, NumericalFailure };

struct LpOptions {
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double pivot_tol = 1e-9;
  double drop_tol = 1e-14;
  // Allowed mismatch between the tableau point and the original rows.
  double residual_tol = 1e-8;
  // Consecutive degenerate pivots tolerated before switching to Bland's rule.
  int stall_threshold = 100;
  std::int64_t max_iterations = 0;  // per solve; 0 selects a size-dependent default
  // Pivots between scheduled refactorizations of the tableau.
  std::int64_t refactor_interval = 20000;
};

class DualSimplex {
 public:
  explicit DualSimplex(const MilpModel& model, LpOptions opts = {})
      : opts_(opts),
        m_(model.num_rows()),
        n_(model.num_vars()),
        cols_(static_cast<std::size_t>(n_ + m_)),
        rows_(model.rows()),
        offset_(model.objective_offset()) {
    const auto total = static_cast<std::size_t>(n_ + m_);
    cost_.assign(total, 0.0);
    lb_.assign(total, 0.0);
    ub_.assign(total, 0.0);
    for (int j = 0; j < n_; ++j) {
      const auto& v = model.vars()[static_cast<std::size_t>(j)];
      lb_[static_cast<std::size_t>(j)] = v.lower;
      ub_[static_cast<std::size_t>(j)] = v.upper;
      cost_[static_cast<std::size_t>(j)] = model.objective()[static_cast<std::size_t>(j)];
    }
    for (int r = 0; r < m_; ++r) {
      const auto& row = rows_[static_cast<std::size_t>(r)];
      const auto k = static_cast<std::size_t>(n_ + r);
      switch (row.sense) {
        case Sense::LessEqual: lb_[k] = -kInf; ub_[k] = row.rhs; break;
        case Sense::GreaterEqual: lb_[k] = row.rhs; ub_[k] = kInf; break;
        case Sense::Equal: lb_[k] = row.rhs; ub_[k] = row.rhs; break;
      }
    }
    if (opts_.max_iterations <= 0) opts_.max_iterations = 50 * (static_cast<std::int64_t>(total) + 100);
    x_.assign(total, 0.0);
    d_.assign(total, 0.0);
    slack_basis();
  }

  int num_vars() const { return n_; }
  int num_rows() const { return m_; }

  void set_bounds(int var, double lower, double upper) {
    const auto j = static_cast<std::size_t>(var);
    lb_[j] = lower;
    ub_[j] = upper;
    if (pos_[j] < 0) x_[j] = nonbasic_value(j);
  }

  double lower(int var) const { return lb_[static_cast<std::size_t>(var)]; }
  double upper(int var) const { return ub_[static_cast<std::size_t>(var)]; }

  LpStatus solve() {
    for (int attempt = 0; attempt < 3; ++attempt) {
      const LpStatus s = solve_once();
      if (s == LpStatus::Optimal && residual_ok()) return s;
      if (s == LpStatus::Infeasible && residual_ok()) return s;
      // Numerical trouble: rebuild the tableau from the original rows, and
      // from scratch on the final attempt.
      if (attempt == 0) {
        refactor();
      } else {
        slack_basis();
      }
    }
    return LpStatus::NumericalFailure;
  }

  double objective() const {
    double v = offset_;
    for (int j = 0; j < n_; ++j) v += cost_[static_cast<std::size_t>(j)] * x_[static_cast<std::size_t>(j)];
    return v;
  }

  std::vector<double> values() const {
    return std::vector<double>(x_.begin(), x_.begin() + n_);
  }

  std::int64_t iterations() const { return iterations_; }

 private:
  double& T(int i, std::size_t j) { return tab_[static_cast<std::size_t>(i) * cols_ + j]; }
  double T(int i, std::size_t j) const { return tab_[static_cast<std::size_t>(i) * cols_ + j]; }

  bool is_fixed(std::size_t j) const { return lb_[j] == ub_[j]; }

  // Value for a nonbasic variable that keeps its reduced cost dual feasible.
  double nonbasic_value(std::size_t j) const {
    const double lo = lb_[j], hi = ub_[j];
    if (lo == hi) return lo;
    if (!std::isfinite(lo)) return hi;
    if (!std::isfinite(hi)) return lo;
    if (d_[j] > opts_.dual_tol) return hi;
    if (d_[j] < -opts_.dual_tol) return lo;
    return std::abs(x_[j] - lo) <= std::abs(x_[j] - hi) ? lo : hi;
  }

  void slack_basis() {
    const auto total = static_cast<std::size_t>(n_ + m_);
    tab_.assign(static_cast<std::size_t>(m_) * cols_, 0.0);
    head_.assign(static_cast<std::size_t>(m_), 0);
    pos_.assign(total, -1);
    for (int r = 0; r < m_; ++r) {
      for (const auto& t : rows_[static_cast<std::size_t>(r)].terms) {
        T(r, static_cast<std::size_t>(t.var)) = -t.coef;
      }
      T(r, static_cast<std::size_t>(n_ + r)) = 1.0;
      head_[static_cast<std::size_t>(r)] = n_ + r;
      pos_[static_cast<std::size_t>(n_ + r)] = r;
    }
    d_ = cost_;
    for (std::size_t j = 0; j < static_cast<std::size_t>(n_); ++j) x_[j] = nonbasic_value(j);
    since_refactor_ = 0;
  }

  void recompute_duals() {
    d_ = cost_;
    for (int i = 0; i < m_; ++i) {
      const double cb = cost_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])];
      if (cb == 0.0) continue;
      const double* row = &tab_[static_cast<std::size_t>(i) * cols_];
      for (std::size_t j = 0; j < cols_; ++j) d_[j] -= cb * row[j];
    }
    for (int i = 0; i < m_; ++i) d_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] = 0.0;
  }

  void recompute_primals() {
    for (int i = 0; i < m_; ++i) {
      const double* row = &tab_[static_cast<std::size_t>(i) * cols_];
      double v = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (row[j] != 0.0 && pos_[j] < 0) v -= row[j] * x_[j];
      }
      x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] = v;
    }
  }

  // Moves boxed nonbasic variables with wrong-signed reduced costs to the
  // opposite bound. Returns false if some dual infeasibility remains on a
  // variable that cannot be flipped.
  bool repair_dual_feasibility() {
    bool ok = true;
    for (std::size_t j = 0; j < cols_; ++j) {
      if (pos_[j] >= 0 || is_fixed(j)) continue;
      const bool at_lower = x_[j] == lb_[j];
      if (at_lower && d_[j] > opts_.dual_tol) {
        if (std::isfinite(ub_[j])) x_[j] = ub_[j]; else ok = false;
      } else if (!at_lower && d_[j] < -opts_.dual_tol) {
        if (std::isfinite(lb_[j])) x_[j] = lb_[j]; else ok = false;
      }
    }
    return ok;
  }

  void pivot(int r, std::size_t q) {
    double* pr = &tab_[static_cast<std::size_t>(r) * cols_];
    const double inv = 1.0 / pr[q];
    nz_.clear();
    for (std::size_t j = 0; j < cols_; ++j) {
      if (pr[j] == 0.0) continue;
      pr[j] *= inv;
      if (std::abs(pr[j]) < opts_.drop_tol) {
        pr[j] = 0.0;
      } else {
        nz_.push_back(j);
      }
    }
    pr[q] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* ri = &tab_[static_cast<std::size_t>(i) * cols_];
      const double f = ri[q];
      if (f == 0.0) continue;
      for (std::size_t j : nz_) {
        double v = ri[j] - f * pr[j];
        ri[j] = std::abs(v) < opts_.drop_tol ? 0.0 : v;
      }
      ri[q] = 0.0;
    }
    const double fq = d_[q];
    if (fq != 0.0) {
      for (std::size_t j : nz_) d_[j] -= fq * pr[j];
    }
    d_[q] = 0.0;
    const auto leaving = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
    head_[static_cast<std::size_t>(r)] = static_cast<int>(q);
    pos_[q] = r;
    pos_[leaving] = -1;
    ++iterations_;
    ++since_refactor_;
  }

  enum class Phase { Done, Infeasible, IterationLimit };

  Phase dual_phase() {
    int degenerate = 0;
    for (;;) {
      if (iterations_ - solve_start_ >= opts_.max_iterations) return Phase::IterationLimit;
      if (since_refactor_ >= opts_.refactor_interval) {
        refactor();
        recompute_duals();
        recompute_primals();
      }
      const bool bland = degenerate >= opts_.stall_threshold;
      int r = -1;
      double best = 0.0;
      int best_var = std::numeric_limits<int>::max();
      for (int i = 0; i < m_; ++i) {
        const auto j = static_cast<std::size_t>(head_[static_cast<std::size_t>(i)]);
        double infeas = 0.0;
        if (x_[j] < lb_[j] - opts_.primal_tol) infeas = lb_[j] - x_[j];
        else if (x_[j] > ub_[j] + opts_.primal_tol) infeas = x_[j] - ub_[j];
        if (infeas <= 0.0) continue;
        if (bland) {
          if (static_cast<int>(j) < best_var) {
            best_var = static_cast<int>(j);
            r = i;
          }
        } else if (infeas > best) {
          best = infeas;
          r = i;
        }
      }
      if (r < 0) return Phase::Done;

      const auto leaving = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
      const bool to_lower = x_[leaving] < lb_[leaving];
      const double target = to_lower ? lb_[leaving] : ub_[leaving];
      const double s = to_lower ? -1.0 : 1.0;
      const double* pr = &tab_[static_cast<std::size_t>(r) * cols_];

      // Harris two-pass ratio test (exact minimum ratio under Bland's rule).
      std::size_t q = cols_;
      double bound = kInf;
      for (std::size_t j = 0; j < cols_; ++j) {
        const double a = pr[j];
        if (a == 0.0 || pos_[j] >= 0 || is_fixed(j)) continue;
        const bool at_lower = x_[j] == lb_[j];
        const double sa = s * a;
        if (at_lower ? sa <= opts_.pivot_tol : sa >= -opts_.pivot_tol) continue;
        const double dj = std::abs(d_[j]);
        if (bland) {
          const double ratio = dj / std::abs(a);
          if (ratio < bound) {
            bound = ratio;
            q = j;
          }
        } else {
          bound = std::min(bound, (dj + opts_.dual_tol) / std::abs(a));
        }
      }
      if (!bland && std::isfinite(bound)) {
        double best_alpha = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) {
          const double a = pr[j];
          if (a == 0.0 || pos_[j] >= 0 || is_fixed(j)) continue;
          const bool at_lower = x_[j] == lb_[j];
          const double sa = s * a;
          if (at_lower ? sa <= opts_.pivot_tol : sa >= -opts_.pivot_tol) continue;
          if (std::abs(d_[j]) / std::abs(a) <= bound && std::abs(a) > best_alpha) {
            best_alpha = std::abs(a);
            q = j;
          }
        }
      }
      if (q == cols_) {
        if (row_proves_infeasible(r, to_lower)) return Phase::Infeasible;
        // Tolerances hid the entering candidate; let the caller refactor.
        return Phase::IterationLimit;
      }

      if (std::abs(d_[q]) <= opts_.dual_tol) {
        ++degenerate;
      } else {
        degenerate = 0;
      }

      const double step = (x_[leaving] - target) / pr[q];
      for (int i = 0; i < m_; ++i) {
        const double a = T(i, q);
        if (a != 0.0) x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] -= a * step;
      }
      x_[q] += step;
      x_[leaving] = target;
      pivot(r, q);
    }
  }

  // Basic variable of row r cannot reach its violated bound even with every
  // nonbasic variable at its most favourable bound.
  bool row_proves_infeasible(int r, bool to_lower) const {
    const auto leaving = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
    double extreme = 0.0;
    double scale = 1.0;
    for (std::size_t j = 0; j < cols_; ++j) {
      const double a = T(r, j);
      if (a == 0.0 || pos_[j] >= 0) continue;
      // x_leaving = -sum a_j x_j
      const double lo = -a * (a > 0 ? ub_[j] : lb_[j]);
      const double hi = -a * (a > 0 ? lb_[j] : ub_[j]);
      const double v = to_lower ? hi : lo;
      if (!std::isfinite(v)) return false;
      extreme += v;
      scale += std::abs(v);
    }
    const double tol = 1e-9 * scale;
    return to_lower ? extreme < lb_[leaving] - tol : extreme > ub_[leaving] + tol;
  }

  // Primal simplex pass removing residual dual infeasibilities from a primal
  // feasible basis.
  Phase primal_phase() {
    int degenerate = 0;
    for (;;) {
      if (iterations_ - solve_start_ >= opts_.max_iterations) return Phase::IterationLimit;
      const bool bland = degenerate >= opts_.stall_threshold;
      std::size_t q = cols_;
      double best = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (pos_[j] >= 0 || is_fixed(j)) continue;
        const bool at_lower = x_[j] == lb_[j];
        const double viol = at_lower ? d_[j] : -d_[j];
        if (viol <= opts_.dual_tol) continue;
        if (bland) {
          q = j;
          break;
        }
        if (viol > best) {
          best = viol;
          q = j;
        }
      }
      if (q == cols_) return Phase::Done;
      const double dir = x_[q] == lb_[q] ? 1.0 : -1.0;
      double t = ub_[q] - lb_[q];  // bound flip
      int r = -1;
      for (int i = 0; i < m_; ++i) {
        const double a = -T(i, q) * dir;  // d x_B_i / dt
        if (std::abs(a) <= opts_.pivot_tol) continue;
        const auto j = static_cast<std::size_t>(head_[static_cast<std::size_t>(i)]);
        double lim;
        if (a > 0) {
          if (!std::isfinite(ub_[j])) continue;
          lim = std::max(0.0, (ub_[j] - x_[j]) / a);
        } else {
          if (!std::isfinite(lb_[j])) continue;
          lim = std::max(0.0, (x_[j] - lb_[j]) / -a);
        }
        if (lim < t || (lim == t && r >= 0 && bland &&
                        head_[static_cast<std::size_t>(i)] < head_[static_cast<std::size_t>(r)])) {
          t = lim;
          r = i;
        }
      }
      if (!std::isfinite(t)) return Phase::IterationLimit;  // unbounded ray: cannot occur with boxed columns
      degenerate = t <= opts_.primal_tol ? degenerate + 1 : 0;
      for (int i = 0; i < m_; ++i) {
        const double a = T(i, q);
        if (a != 0.0) x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] -= a * dir * t;
      }
      if (r < 0) {
        x_[q] = dir > 0 ? ub_[q] : lb_[q];
        continue;
      }
      x_[q] += dir * t;
      const auto leaving = static_cast<std::size_t>(head_[static_cast<std::size_t>(r)]);
      const double a = -T(r, q) * dir;
      x_[leaving] = a > 0 ? ub_[leaving] : lb_[leaving];
      pivot(r, q);
    }
  }

  LpStatus solve_once() {
    solve_start_ = iterations_;
    recompute_duals();
    for (std::size_t j = 0; j < cols_; ++j) {
      if (pos_[j] < 0) x_[j] = nonbasic_value(j);
    }
    recompute_primals();
    for (int round = 0; round < 50; ++round) {
      const Phase p = dual_phase();
      if (p == Phase::Infeasible) return LpStatus::Infeasible;
      if (p == Phase::IterationLimit) return LpStatus::NumericalFailure;
      recompute_primals();
      if (has_primal_infeasibility()) continue;
      if (repair_dual_feasibility()) {
        recompute_primals();
        if (!has_primal_infeasibility()) return LpStatus::Optimal;
        continue;
      }
      recompute_primals();
      if (has_primal_infeasibility()) continue;
      if (primal_phase() != Phase::Done) return LpStatus::NumericalFailure;
      recompute_primals();
      if (!has_primal_infeasibility()) return LpStatus::Optimal;
    }
    return LpStatus::NumericalFailure;
  }

  bool has_primal_infeasibility() const {
    for (int i = 0; i < m_; ++i) {
      const auto j = static_cast<std::size_t>(head_[static_cast<std::size_t>(i)]);
      if (x_[j] < lb_[j] - opts_.primal_tol || x_[j] > ub_[j] + opts_.primal_tol) return true;
    }
    return false;
  }

  // Checks the current point against the original rows.
  bool residual_ok() const {
    for (int r = 0; r < m_; ++r) {
      const auto& row = rows_[static_cast<std::size_t>(r)];
      double a = 0.0, scale = 1.0;
      for (const auto& t : row.terms) {
        const double v = t.coef * x_[static_cast<std::size_t>(t.var)];
        a += v;
        scale += std::abs(v);
      }
      if (std::abs(a - x_[static_cast<std::size_t>(n_ + r)]) > opts_.residual_tol * scale) return false;
    }
    return true;
  }

  // Rebuilds T = B^{-1}[A | -I] for the current basis by Gauss-Jordan
  // elimination on the original rows. Falls back to the slack basis when the
  // basis matrix is numerically singular.
  void refactor() {
    std::vector<int> basics(head_.begin(), head_.end());
    tab_.assign(static_cast<std::size_t>(m_) * cols_, 0.0);
    for (int r = 0; r < m_; ++r) {
      for (const auto& t : rows_[static_cast<std::size_t>(r)].terms) {
        T(r, static_cast<std::size_t>(t.var)) = t.coef;
      }
      T(r, static_cast<std::size_t>(n_ + r)) = -1.0;
    }
    std::vector<char> done(static_cast<std::size_t>(m_), 0);
    std::vector<int> new_head(static_cast<std::size_t>(m_), -1);
    // Logical columns first: they are unit columns and pivot trivially.
    std::stable_sort(basics.begin(), basics.end(), [&](int a, int b) { return (a >= n_) > (b >= n_); });
    for (int k : basics) {
      const auto col = static_cast<std::size_t>(k);
      int best = -1;
      double best_abs = 1e-10;
      for (int i = 0; i < m_; ++i) {
        if (done[static_cast<std::size_t>(i)]) continue;
        const double a = std::abs(T(i, col));
        if (a > best_abs) {
          best_abs = a;
          best = i;
        }
      }
      if (best < 0) {
        slack_basis();
        return;
      }
      done[static_cast<std::size_t>(best)] = 1;
      new_head[static_cast<std::size_t>(best)] = k;
      // pivot() also updates head_/pos_/d_; all three are rebuilt below.
      pivot(best, col);
      --iterations_;
    }
    head_ = new_head;
    std::fill(pos_.begin(), pos_.end(), -1);
    for (int i = 0; i < m_; ++i) pos_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] = i;
    since_refactor_ = 0;
    recompute_duals();
    recompute_primals();
  }

  LpOptions opts_;
  int m_;
  int n_;
  std::size_t cols_;
  std::vector<Constraint> rows_;
  double offset_;
  std::vector<double> cost_, lb_, ub_, x_, d_;
  std::vector<double> tab_;
  std::vector<int> head_;
  std::vector<int> pos_;
  std::vector<std::size_t> nz_;
  std::int64_t iterations_ = 0;
  std::int64_t since_refactor_ = 0;
  std::int64_t solve_start_ = 0;
};

}  // namespace hscop::milp
