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

// Acceptance suite. Prints one PASS or FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hscop/classify.hpp"
#include "hscop/encode.hpp"
#include "hscop/hscop.hpp"
#include "hscop/milp.hpp"
#include "hscop/pip.hpp"
#include "hscop/synthdata.hpp"
#include "hscop/treatment.hpp"
#include "oracles.hpp"

namespace {

using namespace hscop;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Branch and bound agrees with enumeration on random mixed-binary models.
Verdict milp_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  int models = 0, optimal = 0, mismatches = 0;
  double worst = 0.0;
  for (int t = 0; t < 240; ++t) {
    const auto m = testing::random_mixed_model(rng, 1 + t % 12, 1 + (t * 7) % 15);
    const auto bb = milp::solve_milp(m);
    const auto en = milp::solve_enumeration(m);
    ++models;
    const bool bb_opt = bb.status == milp::SolveStatus::Optimal;
    const bool en_opt = en.status == milp::SolveStatus::Optimal;
    if (bb_opt != en_opt) {
      ++mismatches;
      continue;
    }
    if (!en_opt) continue;
    ++optimal;
    const double err = std::abs(bb.objective - en.objective) / std::max(1.0, std::abs(en.objective));
    worst = std::max(worst, err);
    if (err > 1e-6) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {models >= 200 && mismatches == 0 && secs < 120.0,
          fmt("%d models (%d optimal), %d mismatches, worst rel err %.2e, %.1f s", models, optimal, mismatches,
              worst, secs)};
}

std::vector<HscopProblem> random_hscops() {
  std::mt19937_64 rng(202);
  std::vector<HscopProblem> out;
  for (int t = 0; t < 60; ++t) out.push_back(testing::random_hscop(rng, 1 + t % 6, 1 + t % 10, t % 3 != 0));
  return out;
}

// 2. The full MIP optimum equals brute force over activation patterns.
Verdict full_mip_equivalence() {
  const auto t0 = Clock::now();
  int count = 0, mismatches = 0;
  double worst = 0.0;
  for (const auto& p : random_hscops()) {
    const auto ref = testing::brute_force_hscop(p);
    auto [model, map] = build_full_mip(p);
    const auto sol = milp::solve_milp(model);
    ++count;
    if (!ref || sol.status != milp::SolveStatus::Optimal) {
      ++mismatches;
      continue;
    }
    const double err = std::abs(sol.objective - *ref) / std::max(1.0, std::abs(*ref));
    worst = std::max(worst, err);
    if (err > 1e-6) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {count >= 50 && mismatches == 0 && secs < 300.0,
          fmt("%d problems, %d mismatches, worst rel err %.2e, %.1f s", count, mismatches, worst, secs)};
}

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

treatment::Dataset sandwich_data(std::uint64_t seed) {
  synthdata::SynthConfig cfg;
  cfg.num_distinct = 10;
  cfg.num_samples = 400;
  cfg.seed = seed;
  return synthdata::generate(cfg);
}

struct PipRun {
  std::string name;
  HscopProblem problem;
  PipConfig config;
  std::optional<Point> start;
  PipResult result;
  int iterate_checks = 0;
  int infeasible_iterates = 0;
  int decreases = 0;
  int value_mismatches = 0;
};

// Runs PIP and checks every iterate: feasible, objective equal to mu, and mu
// never below its predecessor.
void run_checked(PipRun& run) {
  double prev = evaluate(run.problem, run.start ? *run.start : initial_point(run.problem)).objective;
  run.result = run_pip(run.problem, run.config, run.start, nullptr, [&](const PipState& s) {
    ++run.iterate_checks;
    const auto ev = evaluate(run.problem, s.x);
    if (!ev.feasible) ++run.infeasible_iterates;
    if (ev.objective != s.mu) ++run.value_mismatches;
    if (s.mu < prev) ++run.decreases;
    prev = s.mu;
  });
}

std::vector<PipRun>& pip_runs() {
  static std::vector<PipRun> runs = [] {
    std::vector<PipRun> out;
    int i = 0;
    for (auto& p : random_hscops()) {
      PipRun r;
      r.name = "random-" + std::to_string(i);
      r.problem = std::move(p);
      r.config.cap_fraction = i % 2 == 0 ? 0.6 : 1.0;
      out.push_back(std::move(r));
      ++i;
    }
    PipRun toy;
    toy.name = "line-toy";
    toy.problem = line_problem();
    toy.start = Point{{-1.0}, 0.0};
    out.push_back(std::move(toy));
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      PipRun r;
      r.name = "treatment-seed-" + std::to_string(seed);
      r.problem = treatment::build_treatment_hscop(sandwich_data(seed), treatment::TreatmentSpec{});
      r.config.cap_fraction = 0.6;
      r.config.total_time_limit = 300.0;
      out.push_back(std::move(r));
    }
    for (auto& r : out) run_checked(r);
    return out;
  }();
  return runs;
}

// 3. Every PIP iterate is feasible and mu never decreases.
Verdict pip_monotone() {
  int iterates = 0, bad = 0;
  std::string first_bad;
  for (const auto& r : pip_runs()) {
    iterates += r.iterate_checks;
    const int b = r.infeasible_iterates + r.decreases + r.value_mismatches;
    if (b > 0 && first_bad.empty()) first_bad = " first: " + r.name;
    bad += b;
  }
  return {bad == 0 && iterates > 0,
          fmt("%zu instances, %d iterates checked, %d violations%s", pip_runs().size(), iterates, bad,
              first_bad.c_str())};
}

// 4. A certified terminal point cannot be improved by re-solving its
// restricted program.
Verdict certificate_recheck() {
  int certified = 0, refuted = 0;
  double worst = -milp::kInf;
  for (const auto& r : pip_runs()) {
    if (!r.result.certificate) continue;
    ++certified;
    const auto sol = solve_restricted(r.problem, r.result.x, r.result.terminal_sets, r.config, 600.0);
    const double excess = sol.objective - r.result.mu;
    worst = std::max(worst, excess);
    if (sol.status != milp::SolveStatus::Optimal || excess > 1e-6) ++refuted;
  }
  return {certified > 0 && refuted == 0,
          fmt("%d certified of %zu runs, %d refuted, largest re-solve excess %.2e", certified, pip_runs().size(),
              refuted, worst)};
}

// 5. PIP with cap 0.6 is sandwiched between 95% of the full optimum and the
// full optimum on the 40-atom synthetic instances, seeds 1 to 5.
Verdict sandwich() {
  bool ok = true;
  std::string detail;
  for (const auto& r : pip_runs()) {
    if (r.name.rfind("treatment-seed-", 0) != 0) continue;
    const auto full = solve_full(r.problem, 600.0);
    const bool full_ok = full.mip.status == milp::SolveStatus::Optimal && full.x && full.x->gamma == 0.0;
    const bool pip_ok = r.result.x.gamma == 0.0;
    const double ratio = full_ok ? r.result.mu / full.objective : 0.0;
    const bool upper = full_ok && r.result.mu <= full.objective + 1e-9 * std::max(1.0, std::abs(full.objective));
    const bool seed_ok = r.problem.atoms.size() == 40 && full_ok && pip_ok && upper && ratio >= 0.95;
    ok = ok && seed_ok;
    detail += fmt("%sseed %s: full %.4f (%s, %.1f s), pip %.4f (%.1f s), ratio %.4f%s", detail.empty() ? "" : "; ",
                  r.name.substr(15).c_str(), full.objective, milp::to_string(full.mip.status), full.mip.seconds,
                  r.result.mu, r.result.seconds, ratio, seed_ok ? "" : " FAIL");
  }
  return {ok, detail};
}

// 6. Gini statistic closed forms, and the constraint row agrees with it.
Verdict gini_oracle() {
  using namespace treatment;
  auto tiny = [](std::vector<double> ys, double m) {
    Dataset d;
    d.num_arms = 2;
    for (std::size_t i = 0; i < ys.size(); ++i) d.samples.push_back({static_cast<int>(i), {0.5}, 0, ys[i]});
    set_known_propensities(d, 1.0);
    d.outcome_bound = m;
    return d;
  };
  TreatmentSpec spec;
  spec.num_arms = 2;
  spec.base_scores = {1.0, 0.0};
  const auto treat_all = PolicyParams::zeros(2, 1);
  const double g_two = gini_ipw(tiny({0.0, 3.0}, 5.0), treat_all, spec);
  const double g_one = gini_ipw(tiny({2.0}, 2.0), treat_all, spec);
  const double g_eq = gini_ipw(tiny({2.0, 2.0, 2.0}, 4.0), treat_all, spec);
  const bool closed = g_two == 0.5 && g_one == 0.0 && std::abs(g_eq) <= 1e-15;

  synthdata::SynthConfig cfg;
  cfg.num_covariates = 6;
  cfg.num_distinct = 6;
  cfg.num_samples = 48;
  const auto data = synthdata::generate(cfg);
  const TreatmentSpec full_spec;
  TreatmentLayout layout;
  const auto prob = build_treatment_hscop(data, full_spec, &layout);
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int policies = 0, disagree = 0, feasible = 0;
  for (int t = 0; t < 1000 && policies < 100; ++t) {
    Vector beta(prob.n);
    for (auto& v : beta) v = u(rng);
    const PolicyParams params{4, layout.p, beta};
    if (welfare_ipw(data, params, full_spec) == 0.0) continue;
    ++policies;
    const double g = gini_ipw(data, params, full_spec);
    const bool row_ok = evaluate(prob, {beta, 0.0}).feasible;
    feasible += row_ok;
    if (std::abs(g - full_spec.alpha) > 1e-9 && row_ok != (g <= full_spec.alpha)) ++disagree;
  }
  return {closed && policies == 100 && disagree == 0,
          fmt("two-sample %.17g, single %.17g, equal %.3g; %d policies (%d feasible), %d disagreements", g_two,
              g_one, g_eq, policies, feasible, disagree)};
}

// 7. The 1-D toy reaches mu = 2 with a certificate in at most 12 iterations.
Verdict line_trace() {
  const auto r = run_pip(line_problem(), PipConfig{}, Point{{-1.0}, 0.0});
  return {r.mu == 2.0 && r.certificate && r.iterations <= 12,
          fmt("mu %.17g, certificate %s, %d iterations, termination %s", r.mu, r.certificate ? "true" : "false",
              r.iterations, r.termination.c_str())};
}

// 8. With z forced to 1, the encoded set projected on x is {phi >= 0}.
Verdict dc_projection() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> plus_count(1, 4), minus_count(1, 3);
  int functions = 0, points = 0, skipped = 0, wrong = 0;
  for (int f = 0; f < 50; ++f) {
    const double lo0 = -1.0 - u(rng) * 0.5, lo1 = -1.0 - u(rng) * 0.5;
    const Box box({lo0, lo1}, {lo0 + 2.0 + u(rng) * 0.5, lo1 + 2.0 + u(rng) * 0.5});
    auto piece = [&] { return AffineFn({u(rng), u(rng)}, 0.3 * u(rng)); };
    std::vector<AffineFn> plus, minus;
    for (int l = plus_count(rng); l > 0; --l) plus.push_back(piece());
    for (int l = minus_count(rng); l > 0; --l) minus.push_back(piece());
    const DcPwa phi{MaxAffine(plus), MaxAffine(minus)};
    HscopProblem p;
    p.n = 2;
    p.box = box;
    p.objective.cost = {0.0, 0.0};
    p.atoms.push_back({0, phi});
    p.objective.heaviside = {{0, 1.0}};
    auto [model, map] = build_full_mip(p);
    model.set_bounds(map.atoms[0].z, 1.0, 1.0);
    ++functions;
    for (int gx = 0; gx < 100; ++gx) {
      for (int gy = 0; gy < 100; ++gy) {
        const Vector x{box.lower()[0] + (box.upper()[0] - box.lower()[0]) * gx / 99.0,
                       box.lower()[1] + (box.upper()[1] - box.lower()[1]) * gy / 99.0};
        const double v = phi(x);
        if (std::abs(v) < 1e-7) {
          ++skipped;
          continue;
        }
        ++points;
        model.set_bounds(map.x[0], x[0], x[0]);
        model.set_bounds(map.x[1], x[1], x[1]);
        if (milp::solve_milp(model).has_solution() != (v >= 0.0)) ++wrong;
      }
    }
  }
  return {functions >= 50 && wrong == 0,
          fmt("%d functions, %d grid points, %d within 1e-7 of the boundary skipped, %d misclassified, %.1f s",
              functions, points, skipped, wrong, seconds_since(t0))};
}

// 9. 25 distinct covariates with every arm observed give 100 atoms.
Verdict atom_count() {
  const auto data = synthdata::generate(synthdata::SynthConfig{});
  std::set<std::pair<int, int>> cells;
  for (const auto& s : data.samples) cells.insert({s.covariate_id, s.treatment});
  const auto prob = treatment::build_treatment_hscop(data, treatment::TreatmentSpec{});
  return {cells.size() == 100 && prob.atoms.size() == 100,
          fmt("%zu observed (covariate, arm) cells, %zu atoms", cells.size(), prob.atoms.size())};
}

// 10. With no controlled pairs and class-proportional weights the NP problem
// has the optimum of the matching standard problem.
Verdict np_reduction() {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int trials = 0, mismatches = 0;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    classify::LabeledDataset d;
    d.num_classes = 2;
    const int n = 6 + t % 5;
    for (int s = 0; s < n; ++s) d.samples.push_back({{u(rng), u(rng)}, s % 3 == 0 ? 1 : 0});
    const auto sets = d.class_sets();
    auto np = classify::NpSpec::complement_of(2, {});
    np.score.lambda = 0.02;
    Vector class_weights;
    for (int i = 0; i < 2; ++i) {
      const double w = static_cast<double>(sets[static_cast<std::size_t>(i)].size()) / n;
      np.weights[{i, 1 - i}] = w;
      class_weights.push_back(w);
    }
    auto [m_np, map_np] = build_full_mip(classify::build_np_classification(d, np));
    auto [m_std, map_std] = build_full_mip(classify::build_standard_classification(d, np.score, class_weights));
    const auto a = milp::solve_enumeration(m_np);
    const auto b = milp::solve_enumeration(m_std);
    ++trials;
    const double err = std::abs(a.objective - b.objective);
    worst = std::max(worst, err);
    if (a.status != milp::SolveStatus::Optimal || b.status != milp::SolveStatus::Optimal || err > 1e-8) {
      ++mismatches;
    }
  }
  return {mismatches == 0, fmt("%d toy datasets (6 to 10 atoms), %d mismatches, worst abs diff %.2e", trials,
                               mismatches, worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"MILP oracle equivalence", milp_oracle},
      {"full MIP equals pattern brute force", full_mip_equivalence},
      {"PIP monotone and feasible", pip_monotone},
      {"PIP certificate re-check", certificate_recheck},
      {"PIP within 95% of full MIP, 40 atoms", sandwich},
      {"Gini statistic oracle", gini_oracle},
      {"1-D PIP trace", line_trace},
      {"DC encoding projection", dc_projection},
      {"100 atoms for 25 covariates", atom_count},
      {"NP reduces to standard", np_reduction},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
