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

#include "hscop/synthdata.hpp"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

namespace hscop::synthdata {
namespace {

TEST(SynthTest, OutcomeFormulaAtZero) {
  const Vector x(30, 0.0);
  EXPECT_NEAR(mean_outcome(x, 0) + 1.0, std::exp(2.0) - 0.8 + 1.0, 1e-12);
  EXPECT_NEAR(mean_outcome(x, 0) + 1.0, 7.589, 1e-3);
  Vector y(30, 1.0);
  EXPECT_NEAR(mean_outcome(y, 3), 1.0 + std::exp(4.1) - 0.4 + 1.8 - 1.2, 1e-12);
}

TEST(SynthTest, DeterministicUnderSeed) {
  SynthConfig cfg;
  cfg.num_distinct = 5;
  cfg.num_samples = 40;
  std::stringstream a, b;
  treatment::write_dataset_csv(a, generate(cfg));
  treatment::write_dataset_csv(b, generate(cfg));
  EXPECT_EQ(a.str(), b.str());
  cfg.seed = 2;
  std::stringstream c;
  treatment::write_dataset_csv(c, generate(cfg));
  EXPECT_NE(a.str(), c.str());
}

TEST(SynthTest, ShapeAndRanges) {
  SynthConfig cfg;
  const auto d = generate(cfg);
  EXPECT_EQ(d.samples.size(), 1000u);
  EXPECT_EQ(d.covariate_table().size(), 25u);
  std::vector<int> arms(4, 0);
  for (const auto& s : d.samples) {
    for (double v : s.x) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(s.outcome, 0.0);
    ++arms[static_cast<std::size_t>(s.treatment)];
  }
  // Chi-square goodness of fit against uniform arms, 3 degrees of freedom,
  // 0.1% critical value 16.27.
  double chi2 = 0.0;
  for (int c : arms) chi2 += (c - 250.0) * (c - 250.0) / 250.0;
  EXPECT_LT(chi2, 16.27);
  EXPECT_EQ(d.propensity_of(0, 2), 0.25);
}

TEST(SynthTest, RejectsBadConfig) {
  SynthConfig cfg;
  cfg.num_samples = 1001;
  EXPECT_THROW(generate(cfg), std::invalid_argument);
  const auto m = manifest(SynthConfig{});
  EXPECT_EQ(m.at("seed"), 1);
}

TEST(SynthTest, HundredAtomsForTwentyFiveCovariates) {
  const auto d = generate(SynthConfig{});
  const auto prob = treatment::build_treatment_hscop(d, treatment::TreatmentSpec{});
  EXPECT_EQ(prob.atoms.size(), 100u);
}

}  // namespace
}  // namespace hscop::synthdata
