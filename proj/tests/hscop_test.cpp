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

#include "hscop/hscop.hpp"

#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace hscop {
namespace {

HscopProblem line_problem() {
  HscopProblem p;
  p.n = 1;
  p.box = Box({-1.0}, {3.0});
  p.objective.cost = {0.0};
  p.atoms.push_back({0, MinAffine({AffineFn({1.0}, 0.0)})});
  p.atoms.push_back({1, MinAffine({AffineFn({1.0}, -2.0)})});
  p.objective.heaviside = {{0, 1.0}, {1, 1.0}};
  return p;
}

TEST(EvaluateTest, NoAtomsGivesResidualPenaltyOnly) {
  HscopProblem p;
  p.n = 1;
  p.box = Box({0.0}, {1.0});
  p.objective.cost = {0.0};
  p.objective.residual_penalty = 5.0;
  ConstraintRow row;
  row.rhs = 1.0;
  row.residual_allowed = true;
  p.rows.push_back(row);
  const auto ev = evaluate(p, {{0.5}, 2.0});
  EXPECT_DOUBLE_EQ(ev.objective, -10.0);
  EXPECT_TRUE(ev.feasible);
  EXPECT_FALSE(evaluate(p, {{0.5}, 0.5}).feasible);
}

TEST(EvaluateTest, ClosedHeavisideAtBoundary) {
  const auto p = line_problem();
  const auto ev = evaluate(p, {{0.0}, 0.0});
  EXPECT_EQ(ev.active[0], 1);
  EXPECT_EQ(ev.active[1], 0);
  EXPECT_DOUBLE_EQ(ev.objective, 1.0);
  EXPECT_DOUBLE_EQ(evaluate(p, {{2.5}, 0.0}).objective, 2.0);
  EXPECT_THROW(evaluate(p, {{0.0, 1.0}, 0.0}), std::invalid_argument);
}

TEST(IndexSetsTest, Thresholding) {
  const std::vector<double> phi{-3.0, -0.05, 0.0, 0.02, 1.5};
  const auto s = index_sets_from_values(phi, 0.1, 0.1);
  EXPECT_EQ(s.lt, std::vector<int>({0}));
  EXPECT_EQ(s.inb, std::vector<int>({1, 2, 3}));
  EXPECT_EQ(s.gt, std::vector<int>({4}));
  const auto z = index_sets_from_values(phi, 0.0, 0.0);
  EXPECT_EQ(z.inb, std::vector<int>({2}));
  const auto edge = index_sets_from_values(std::vector<double>{-0.1, 0.1}, 0.1, 0.1);
  EXPECT_EQ(edge.inb, std::vector<int>({0, 1}));
  EXPECT_THROW(index_sets_from_values(phi, -1.0, 0.0), std::invalid_argument);
}

TEST(IndexSetsTest, MonotoneInEpsilon) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> phi(12);
    for (auto& v : phi) v = u(rng);
    const double e1 = std::abs(u(rng)), e2 = std::abs(u(rng));
    const double f1 = e1 + std::abs(u(rng)), f2 = e2 + std::abs(u(rng));
    const auto a = index_sets_from_values(phi, e1, e2);
    const auto b = index_sets_from_values(phi, f1, f2);
    EXPECT_EQ(a.lt.size() + a.inb.size() + a.gt.size(), phi.size());
    EXPECT_TRUE(std::includes(b.inb.begin(), b.inb.end(), a.inb.begin(), a.inb.end()));
    EXPECT_TRUE(std::includes(a.gt.begin(), a.gt.end(), b.gt.begin(), b.gt.end()));
  }
}

TEST(LowerBoundTest, GlobalBoundAndClamp) {
  auto p = line_problem();
  EXPECT_DOUBLE_EQ(phi_lower_bound(p), -3.0);
  p.atoms.resize(1);
  p.objective.heaviside.resize(1);
  EXPECT_DOUBLE_EQ(phi_lower_bound(p), -1.0);
  p.atoms[0].phi = MinAffine({AffineFn({1.0}, 5.0)});
  EXPECT_DOUBLE_EQ(phi_lower_bound(p), 0.0);
}

TEST(ProductTest, MatchesHeavisideOfMin) {
  std::mt19937_64 rng(2);
  auto p = testing::random_hscop(rng, 3, 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto& prod = p.rows[0].products[0];
  for (int s = 0; s < 500; ++s) {
    const Vector x{u(rng), u(rng), u(rng)};
    const auto ev = evaluate(p, {x, 0.0});
    const double m = std::min(eval(p.atoms[prod.u].phi, x), eval(p.atoms[prod.v].phi, x));
    EXPECT_EQ(ev.active[prod.u] * ev.active[prod.v], heaviside_closed(m));
  }
}

TEST(ValidateTest, RejectsMalformedProblems) {
  auto p = line_problem();
  p.objective.heaviside.push_back({7, 1.0});
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = line_problem();
  p.objective.heaviside[0].weight = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = line_problem();
  ConstraintRow row;
  row.products.push_back({0, 0, 1.0});
  p.rows.push_back(row);
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = line_problem();
  ConstraintRow res;
  res.residual_allowed = true;
  p.rows.push_back(res);
  p.objective.residual_penalty = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(JsonTest, RoundTrip) {
  std::mt19937_64 rng(4);
  auto p = testing::random_hscop(rng, 2, 3);
  p.atoms.push_back({3, DcPwa(MaxAffine({AffineFn({1.0, 0.0}, 0.0), AffineFn({-1.0, 0.0}, 0.0)}),
                              MaxAffine({AffineFn({0.0, 2.0}, -1.0)}))});
  p.inequalities.push_back({{1.0, 1.0}, 1.5});
  p.exclusive_groups = {{0, 1}};
  const auto q = problem_from_json(nlohmann::json::parse(to_json(p).dump()));
  EXPECT_EQ(to_json(q), to_json(p));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int s = 0; s < 20; ++s) {
    const Point pt{{u(rng), u(rng)}, 0.1};
    EXPECT_DOUBLE_EQ(evaluate(p, pt).objective, evaluate(q, pt).objective);
  }
  EXPECT_THROW(problem_from_json(nlohmann::json{{"format", "other"}}), std::invalid_argument);
}

TEST(ResidualTest, MinimalResidual) {
  std::mt19937_64 rng(5);
  auto p = testing::random_hscop(rng, 2, 3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int s = 0; s < 100; ++s) {
    const Vector x{u(rng), u(rng)};
    const double g = *minimal_residual(p, x);
    EXPECT_TRUE(evaluate(p, {x, g}).feasible);
    if (g > 1e-9) EXPECT_FALSE(evaluate(p, {x, g - 1e-6}).feasible);
  }
}

}  // namespace
}  // namespace hscop
