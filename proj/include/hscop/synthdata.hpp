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

// Synthetic treatment data: uniform covariates on [0,1]^p, uniformly
// assigned arms, and outcomes
//   Y = X5 + exp(2 + 0.2 X0 - 0.1 X1 + 2 X0 X1) + arm term + eps,
//   eps ~ Lognormal(0, 0.001).

#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <random>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hscop/treatment.hpp"

namespace hscop::synthdata {

struct SynthConfig {
  std::size_t num_covariates = 30;
  int num_arms = 4;
  int num_distinct = 25;
  int num_samples = 1000;
  std::uint64_t seed = 1;
  double noise_log_sigma = 0.001;
  std::optional<double> outcome_bound;  // M; the largest outcome when unset

  void validate() const {
    if (num_covariates < 6) throw std::invalid_argument("SynthConfig: the outcome model needs at least 6 covariates");
    if (num_arms != 4) throw std::invalid_argument("SynthConfig: the outcome model has exactly 4 arms");
    if (num_distinct <= 0 || num_samples <= 0) throw std::invalid_argument("SynthConfig: sizes must be positive");
    if (num_samples % num_distinct != 0) {
      throw std::invalid_argument("SynthConfig: num_samples must be divisible by num_distinct");
    }
    if (!(noise_log_sigma >= 0.0)) throw std::invalid_argument("SynthConfig: noise scale must be >= 0");
  }
};

/// Noise-free outcome for arm d in [0, 4).
inline double mean_outcome(std::span<const double> x, int d) {
  double y = x[5] + std::exp(2.0 + 0.2 * x[0] - 0.1 * x[1] + 2.0 * x[0] * x[1]);
  switch (d) {
    case 0: y += -0.8 + 1.8 * x[1] - 0.2 * x[2]; break;
    case 1: y += -1.0 + 2.1 * x[1] - 1.2 * x[0]; break;
    case 2: y += -0.8 + 1.3 * x[0] * x[2]; break;
    case 3: y += -0.4 + 1.8 * x[0] - 1.2 * x[1] * x[2]; break;
    default: throw std::invalid_argument("mean_outcome: arm out of range");
  }
  return y;
}

/// Deterministic in the config (including the seed). Propensities are the
/// known uniform 1/J.
inline treatment::Dataset generate(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> arm(0, config.num_arms - 1);
  std::lognormal_distribution<double> noise(0.0, config.noise_log_sigma);
  treatment::Dataset data;
  data.num_arms = config.num_arms;
  std::vector<Vector> xs(static_cast<std::size_t>(config.num_distinct), Vector(config.num_covariates));
  for (auto& x : xs) {
    for (auto& v : x) v = unif(rng);
  }
  const int per = config.num_samples / config.num_distinct;
  for (int id = 0; id < config.num_distinct; ++id) {
    for (int r = 0; r < per; ++r) {
      treatment::Sample s;
      s.covariate_id = id;
      s.x = xs[static_cast<std::size_t>(id)];
      s.treatment = arm(rng);
      s.outcome = mean_outcome(s.x, s.treatment) + noise(rng);
      if (s.outcome < 0.0) {
        std::cerr << "synthdata: negative outcome clamped to 0\n";
        s.outcome = 0.0;
      }
      data.samples.push_back(std::move(s));
    }
  }
  data.outcome_bound = config.outcome_bound;
  treatment::set_known_propensities(data, 1.0 / config.num_arms);
  return data;
}

inline nlohmann::json manifest(const SynthConfig& config) {
  nlohmann::json j = {{"generator", "hscop-synthdata"},
                      {"version", 1},
                      {"num_covariates", config.num_covariates},
                      {"num_arms", config.num_arms},
                      {"num_distinct", config.num_distinct},
                      {"num_samples", config.num_samples},
                      {"seed", config.seed},
                      {"noise", {{"distribution", "lognormal"}, {"mu", 0.0}, {"sigma", config.noise_log_sigma}}},
                      {"propensity", "uniform"}};
  if (config.outcome_bound) j["outcome_bound"] = *config.outcome_bound;
  return j;
}

}  // namespace hscop::synthdata
