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

#include "hscop/milp.hpp"

#include "oracles.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

namespace hscop::milp {
namespace {

TEST(LpTest, SingleBoundedVariable) {
  MilpModel m;
  const int x = m.add_continuous(0.0, 10.0);
  m.set_objective(x, 1.0);
  m.add_constraint({{x, 1.0}}, Sense::LessEqual, 2.0);
  const auto sol = solve_lp(m);
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_NEAR(sol.objective, 2.0, 1e-9);
}

TEST(LpTest, RelaxationOfBinary) {
  MilpModel m;
  const int z = m.add_binary();
  m.set_objective(z, 1.0);
  m.add_constraint({{z, 2.0}}, Sense::LessEqual, 1.0);
  EXPECT_NEAR(solve_lp(m).objective, 0.5, 1e-9);
  const auto sol = solve_milp(m);
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_NEAR(sol.objective, 0.0, 1e-9);
}

TEST(LpTest, DetectsInfeasibility) {
  MilpModel m;
  const int x = m.add_continuous(0.0, 1.0);
  const int y = m.add_continuous(0.0, 1.0);
  m.add_constraint({{x, 1.0}, {y, 1.0}}, Sense::GreaterEqual, 3.0);
  EXPECT_EQ(solve_lp(m).status, SolveStatus::Infeasible);
  EXPECT_EQ(solve_milp(m).status, SolveStatus::Infeasible);
}

TEST(LpTest, EqualityRows) {
  MilpModel m;
  const int x = m.add_continuous(-5.0, 5.0);
  const int y = m.add_continuous(-5.0, 5.0);
  m.set_objective(x, 1.0);
  m.set_objective(y, 2.0);
  m.add_constraint({{x, 1.0}, {y, 1.0}}, Sense::Equal, 1.0);
  const auto sol = solve_lp(m);
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_NEAR(sol.objective, -4.0 + 10.0, 1e-9);
}

TEST(LpTest, RandomLpsMatchVertexEnumeration) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 3;
    const int m = 3 + trial % 5;
    std::vector<double> c(n), lo(n, -2.0), hi(n, 2.0), b(m);
    std::vector<std::vector<double>> a(m, std::vector<double>(n));
    MilpModel model;
    for (int j = 0; j < n; ++j) {
      c[j] = u(rng);
      model.add_continuous(lo[j], hi[j]);
      model.set_objective(j, c[j]);
    }
    for (int r = 0; r < m; ++r) {
      std::vector<Term> terms;
      for (int j = 0; j < n; ++j) {
        a[r][j] = u(rng);
        terms.push_back({j, a[r][j]});
      }
      b[r] = 0.5 * u(rng);
      model.add_constraint(terms, Sense::LessEqual, b[r]);
    }
    const auto ref = testing::vertex_enumeration_lp(c, a, b, lo, hi);
    const auto sol = solve_lp(model);
    ASSERT_EQ(ref.has_value(), sol.status == SolveStatus::Optimal) << trial;
    if (ref) EXPECT_NEAR(sol.objective, *ref, 1e-7) << trial;
  }
}

TEST(LpTest, IterationLimitAppliesPerSolve) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  MilpModel m;
  for (int j = 0; j < 8; ++j) {
    m.add_continuous(0.0, 1.0);
    m.set_objective(j, u(rng));
  }
  for (int r = 0; r < 4; ++r) {
    std::vector<Term> row;
    for (int j = 0; j < 8; ++j) row.push_back({j, u(rng)});
    m.add_constraint(row, Sense::LessEqual, 1.5);
  }
  LpOptions opts;
  opts.max_iterations = 30;
  DualSimplex lp(m, opts);
  std::uniform_int_distribution<int> pick(0, 7);
  for (int round = 0; round < 300; ++round) {
    const int j = pick(rng);
    if (round % 3 == 0) lp.set_bounds(j, 0.0, 1.0);
    else lp.set_bounds(j, 0.0, 0.0);
    ASSERT_EQ(lp.solve(), LpStatus::Optimal) << round;
  }
  EXPECT_GT(lp.iterations(), opts.max_iterations);
}

TEST(MilpTest, SetPacking) {
  MilpModel m;
  const int a = m.add_binary();
  const int b = m.add_binary();
  m.set_objective(a, 1.0);
  m.set_objective(b, 1.0);
  m.add_constraint({{a, 1.0}, {b, 1.0}}, Sense::LessEqual, 1.0);
  const auto sol = solve_milp(m);
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_NEAR(sol.objective, 1.0, 1e-9);
}

TEST(MilpTest, EnumerationEdgeCases) {
  MilpModel m;
  const int x = m.add_continuous(0.0, 3.0);
  m.set_objective(x, 1.0);
  EXPECT_NEAR(solve_enumeration(m).objective, 3.0, 1e-12);
  MilpModel inf;
  const int z = inf.add_binary();
  inf.add_constraint({{z, 1.0}}, Sense::GreaterEqual, 2.0);
  EXPECT_EQ(solve_enumeration(inf).status, SolveStatus::Infeasible);
  MilpModel big;
  for (int j = 0; j < 21; ++j) big.add_binary();
  EXPECT_THROW(solve_enumeration(big), std::invalid_argument);
}

TEST(MilpTest, ValidateRejectsMalformedModels) {
  MilpModel m;
  m.add_continuous(0.0, kInf);
  EXPECT_THROW(solve_milp(m), std::invalid_argument);
  MilpModel n;
  n.add_continuous(1.0, 0.0);
  EXPECT_THROW(solve_lp(n), std::invalid_argument);
}

TEST(MilpTest, WriteLpMentionsSections) {
  MilpModel m;
  const int z = m.add_binary("z");
  m.set_objective(z, 1.0);
  m.add_constraint({{z, 1.0}}, Sense::LessEqual, 1.0, "cap");
  std::ostringstream os;
  write_lp(os, m);
  const std::string s = os.str();
  for (const char* part : {"Maximize", "Subject To", "cap:", "Bounds", "Binaries", "End"}) {
    EXPECT_NE(s.find(part), std::string::npos) << part;
  }
}

// Brute force over binary assignments and a fine grid of one continuous
// variable gives an independent check on the optimum.
TEST(MilpTest, KnapsackMatchesBruteForce) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4 + trial % 6;
    MilpModel m;
    std::vector<double> w(n), v(n);
    std::vector<Term> row;
    for (int j = 0; j < n; ++j) {
      w[j] = u(rng);
      v[j] = u(rng);
      const int z = m.add_binary();
      m.set_objective(z, v[j]);
      row.push_back({z, w[j]});
    }
    const double cap = 0.4 * n * 0.55;
    m.add_constraint(row, Sense::LessEqual, cap);
    double best = 0.0;
    for (int mask = 0; mask < (1 << n); ++mask) {
      double ww = 0.0, vv = 0.0;
      for (int j = 0; j < n; ++j) {
        if (mask >> j & 1) {
          ww += w[j];
          vv += v[j];
        }
      }
      if (ww <= cap) best = std::max(best, vv);
    }
    const auto bb = solve_milp(m);
    ASSERT_EQ(bb.status, SolveStatus::Optimal);
    EXPECT_NEAR(bb.objective, best, 1e-7);
    const auto en = solve_enumeration(m);
    EXPECT_NEAR(en.objective, best, 1e-7);
  }
}

TEST(MilpTest, RandomMixedModelsAgreeWithEnumeration) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const auto m = testing::random_mixed_model(rng, 3 + trial % 8, 1 + trial % 4);
    const auto bb = solve_milp(m);
    const auto en = solve_enumeration(m);
    ASSERT_EQ(bb.status == SolveStatus::Optimal, en.status == SolveStatus::Optimal) << trial;
    if (en.status == SolveStatus::Optimal) {
      EXPECT_NEAR(bb.objective, en.objective, 1e-6) << trial;
      EXPECT_LE(m.max_violation(bb.values), 1e-7);
      EXPECT_GE(bb.bound, bb.objective - 1e-12);
    }
  }
}

TEST(MilpTest, HeuristicAndHintAreVerified) {
  MilpModel m;
  const int a = m.add_binary();
  const int b = m.add_binary();
  m.set_objective(a, 1.0);
  m.set_objective(b, 1.0);
  m.add_constraint({{a, 1.0}, {b, 1.0}}, Sense::LessEqual, 1.0);
  m.hint = std::vector<double>{1.0, 1.0};  // infeasible, must be ignored
  m.heuristic = [](std::span<const double>) { return std::optional<std::vector<double>>({1.0, 1.0}); };
  const auto sol = solve_milp(m);
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_NEAR(sol.objective, 1.0, 1e-9);
}

TEST(MilpTest, NodeLimitReportsNoIncumbentOrFeasible) {
  MilpModel m;
  std::vector<Term> row;
  for (int j = 0; j < 12; ++j) {
    const int z = m.add_binary();
    m.set_objective(z, 1.0 + 0.01 * j);
    row.push_back({z, 2.0});
  }
  m.add_constraint(row, Sense::LessEqual, 11.0);
  m.node_limit = 1;
  const auto sol = solve_milp(m);
  EXPECT_TRUE(sol.status == SolveStatus::NoIncumbent || sol.status == SolveStatus::FeasibleTimeLimit);
}

}  // namespace
}  // namespace hscop::milp
