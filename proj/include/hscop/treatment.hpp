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

// Multi-action treatment learning: welfare estimated by inverse propensity
// weighting, maximized over margin-shifted linear score policies subject to
// a linearized Gini constraint with a penalized residual.
//
// Treatments are 0-based: arm j in [0, J).

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hscop/hscop.hpp"

namespace hscop::treatment {

struct Sample {
  int covariate_id = 0;
  Vector x;
  int treatment = 0;
  double outcome = 0.0;
};

struct Dataset {
  int num_arms = 0;
  std::vector<Sample> samples;
  // propensity[{covariate_id, arm}] = e_arm(xi)
  std::map<std::pair<int, int>, double> propensity;
  std::optional<double> outcome_bound;  // M; defaults to the largest outcome

  std::size_t num_covariates() const { return samples.empty() ? 0 : samples.front().x.size(); }

  double bound() const {
    if (outcome_bound) return *outcome_bound;
    double m = 0.0;
    for (const auto& s : samples) m = std::max(m, s.outcome);
    return m;
  }

  /// Distinct covariate ids in increasing order with their vectors.
  std::map<int, Vector> covariate_table() const {
    std::map<int, Vector> table;
    for (const auto& s : samples) {
      auto [it, inserted] = table.emplace(s.covariate_id, s.x);
      if (!inserted && it->second != s.x) {
        throw std::invalid_argument("Dataset: covariate id " + std::to_string(s.covariate_id) +
                                    " maps to different vectors");
      }
    }
    return table;
  }

  double propensity_of(int covariate_id, int arm) const {
    auto it = propensity.find({covariate_id, arm});
    if (it == propensity.end()) {
      throw std::invalid_argument("Dataset: missing propensity for covariate " + std::to_string(covariate_id) +
                                  ", arm " + std::to_string(arm));
    }
    return it->second;
  }

  void validate() const {
    if (num_arms < 2) throw std::invalid_argument("Dataset: need at least two arms");
    const double m = bound();
    for (const auto& s : samples) {
      if (s.x.size() != num_covariates()) throw std::invalid_argument("Dataset: ragged covariate vectors");
      if (s.treatment < 0 || s.treatment >= num_arms) throw std::invalid_argument("Dataset: treatment out of range");
      if (!std::isfinite(s.outcome) || s.outcome < 0.0 || s.outcome > m) {
        throw std::invalid_argument("Dataset: outcome outside [0, M]");
      }
    }
    for (const auto& [key, e] : propensity) {
      if (!(e > 0.0) || e > 1.0) throw std::invalid_argument("Dataset: propensity outside (0, 1]");
    }
    covariate_table();
  }
};

struct TreatmentSpec {
  int num_arms = 4;
  Vector base_scores;  // b_j; empty means all zero
  Vector margins;      // tau_j; empty means all 0.001
  double alpha = 0.7;
  double lambda = 0.01;
  double rho = 1e8;
  double beta_bound = 1.0;  // beta in [-beta_bound, beta_bound]^{J p}

  double base(int j) const { return base_scores.empty() ? 0.0 : base_scores[static_cast<std::size_t>(j)]; }
  double tau(int j) const { return margins.empty() ? 0.001 : margins[static_cast<std::size_t>(j)]; }

  void validate() const {
    if (num_arms < 2) throw std::invalid_argument("TreatmentSpec: need at least two arms");
    if (!base_scores.empty() && base_scores.size() != static_cast<std::size_t>(num_arms)) {
      throw std::invalid_argument("TreatmentSpec: base_scores has the wrong length");
    }
    if (!margins.empty() && margins.size() != static_cast<std::size_t>(num_arms)) {
      throw std::invalid_argument("TreatmentSpec: margins has the wrong length");
    }
    for (int j = 0; j < num_arms; ++j) {
      if (!(tau(j) > 0.0)) throw std::invalid_argument("TreatmentSpec: margins must be positive");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("TreatmentSpec: alpha must be in (0,1)");
    if (!(lambda >= 0.0)) throw std::invalid_argument("TreatmentSpec: lambda must be >= 0");
    if (!(rho > 0.0)) throw std::invalid_argument("TreatmentSpec: rho must be positive");
    if (!(beta_bound > 0.0)) throw std::invalid_argument("TreatmentSpec: beta_bound must be positive");
  }
};

/// beta as J rows of length p; stacked as beta[j * p + i].
struct PolicyParams {
  int num_arms = 0;
  std::size_t p = 0;
  Vector beta;

  static PolicyParams zeros(int num_arms, std::size_t p) {
    return {num_arms, p, Vector(static_cast<std::size_t>(num_arms) * p, 0.0)};
  }
  double score(int j, std::span<const double> xi) const {
    double v = 0.0;
    for (std::size_t i = 0; i < p; ++i) v += beta[static_cast<std::size_t>(j) * p + i] * xi[i];
    return v;
  }
};

inline constexpr double kOverlapFloor = 0.05;

/// Every (covariate, arm) cell gets the same known propensity.
inline void set_known_propensities(Dataset& data, double value) {
  data.propensity.clear();
  for (const auto& [id, x] : data.covariate_table()) {
    for (int j = 0; j < data.num_arms; ++j) data.propensity[{id, j}] = value;
  }
}

/// Empirical arm frequencies per covariate, clamped to [kappa, 1 - kappa]
/// and renormalized to sum to one.
inline void estimate_empirical_propensities(Dataset& data, double kappa = kOverlapFloor) {
  if (!(kappa > 0.0 && kappa < 0.5)) throw std::invalid_argument("estimate_empirical_propensities: kappa in (0, 1/2)");
  std::map<int, std::vector<double>> counts;
  for (const auto& s : data.samples) {
    auto& c = counts[s.covariate_id];
    c.resize(static_cast<std::size_t>(data.num_arms), 0.0);
    c[static_cast<std::size_t>(s.treatment)] += 1.0;
  }
  data.propensity.clear();
  for (auto& [id, c] : counts) {
    double total = 0.0;
    for (double v : c) total += v;
    double sum = 0.0;
    for (auto& v : c) {
      v = std::clamp(v / total, kappa, 1.0 - kappa);
      sum += v;
    }
    for (int j = 0; j < data.num_arms; ++j) data.propensity[{id, j}] = c[static_cast<std::size_t>(j)] / sum;
  }
}

/// h_j^tau(xi, .) for every arm j as a MinAffine in the stacked beta:
/// min over m != j of xi.beta^j - xi.beta^m + b_j - b_m - tau_j.
inline std::vector<MinAffine> score_functions(const TreatmentSpec& spec, std::span<const double> xi) {
  const std::size_t p = xi.size();
  const std::size_t n = static_cast<std::size_t>(spec.num_arms) * p;
  std::vector<MinAffine> out;
  for (int j = 0; j < spec.num_arms; ++j) {
    std::vector<AffineFn> pieces;
    for (int m = 0; m < spec.num_arms; ++m) {
      if (m == j) continue;
      Vector w(n, 0.0);
      for (std::size_t i = 0; i < p; ++i) {
        w[static_cast<std::size_t>(j) * p + i] += xi[i];
        w[static_cast<std::size_t>(m) * p + i] -= xi[i];
      }
      pieces.emplace_back(std::move(w), spec.base(j) - spec.base(m) - spec.tau(j));
    }
    out.emplace_back(std::move(pieces));
  }
  return out;
}

/// The arm j with h_j^tau(xi, beta) >= 0, if any. The margins make it unique.
inline std::optional<int> policy_assign(std::span<const double> xi, const PolicyParams& params,
                                        const TreatmentSpec& spec) {
  for (int j = 0; j < spec.num_arms; ++j) {
    double best_other = -std::numeric_limits<double>::infinity();
    for (int m = 0; m < spec.num_arms; ++m) {
      if (m != j) best_other = std::max(best_other, params.score(m, xi) + spec.base(m));
    }
    if (params.score(j, xi) + spec.base(j) - best_other - spec.tau(j) >= 0.0) return j;
  }
  return std::nullopt;
}

/// 1{policy assigns the observed arm} per sample.
inline std::vector<int> agreement(const Dataset& data, const PolicyParams& params, const TreatmentSpec& spec) {
  std::vector<int> a;
  a.reserve(data.samples.size());
  for (const auto& s : data.samples) {
    const auto g = policy_assign(s.x, params, spec);
    a.push_back(g && *g == s.treatment ? 1 : 0);
  }
  return a;
}

/// (1/N) sum_s Y_s / e_{j_s}(X^s) * 1{g(X^s) = j_s}.
inline double welfare_ipw(const Dataset& data, const PolicyParams& params, const TreatmentSpec& spec) {
  const auto a = agreement(data, params, spec);
  double w = 0.0;
  for (std::size_t s = 0; s < data.samples.size(); ++s) {
    const auto& smp = data.samples[s];
    if (a[s]) w += smp.outcome / data.propensity_of(smp.covariate_id, smp.treatment);
  }
  return w / static_cast<double>(data.samples.size());
}

/// The Gini statistic implied by the linearized constraint:
/// (M - G2) / E - 1 with G2 the pairwise term and E the IPW welfare.
inline double gini_ipw(const Dataset& data, const PolicyParams& params, const TreatmentSpec& spec) {
  const auto a = agreement(data, params, spec);
  const double n = static_cast<double>(data.samples.size());
  const double m = data.bound();
  std::vector<std::pair<double, double>> treated;  // (Y, e)
  for (std::size_t s = 0; s < data.samples.size(); ++s) {
    const auto& smp = data.samples[s];
    if (a[s]) treated.emplace_back(smp.outcome, data.propensity_of(smp.covariate_id, smp.treatment));
  }
  double e = 0.0;
  for (const auto& [y, p] : treated) e += y / p;
  e /= n;
  if (!(e > 0.0)) throw std::domain_error("gini_ipw: welfare is zero, the statistic is undefined");
  double g2 = 0.0;
  for (const auto& [ys, ps] : treated) {
    for (const auto& [yt, pt] : treated) g2 += (m - std::max(ys, yt)) / (ps * pt);
  }
  g2 /= n * n;
  return (m - g2) / e - 1.0;
}

/// Atom bookkeeping of a built treatment problem.
struct TreatmentLayout {
  std::vector<std::pair<int, int>> atoms;  // atom k -> (covariate id, arm)
  std::size_t p = 0;
};

/// Builds the welfare maximization HSCOP: atoms h_j^tau(xi, beta) for each
/// observed (xi, j), objective weights (1/N) sum Y/e, one l1 group per arm,
/// and the Gini row with products folded per atom pair and residual gamma.
inline HscopProblem build_treatment_hscop(const Dataset& data, const TreatmentSpec& spec,
                                          TreatmentLayout* layout = nullptr) {
  data.validate();
  spec.validate();
  if (spec.num_arms != data.num_arms) throw std::invalid_argument("build_treatment_hscop: arm count mismatch");
  const std::size_t p = data.num_covariates();
  const auto table = data.covariate_table();
  const double n = static_cast<double>(data.samples.size());
  const double m = data.bound();

  std::map<std::pair<int, int>, int> atom_of;
  TreatmentLayout lay;
  lay.p = p;
  for (const auto& s : data.samples) atom_of.emplace(std::make_pair(s.covariate_id, s.treatment), 0);
  for (auto& [key, k] : atom_of) {
    k = static_cast<int>(lay.atoms.size());
    lay.atoms.push_back(key);
  }

  HscopProblem prob;
  prob.n = static_cast<std::size_t>(spec.num_arms) * p;
  prob.box = Box::uniform(prob.n, -spec.beta_bound, spec.beta_bound);
  prob.objective.cost.assign(prob.n, 0.0);
  prob.objective.residual_penalty = spec.rho;
  for (int j = 0; j < spec.num_arms; ++j) {
    L1Group g;
    g.weight = spec.lambda;
    for (std::size_t i = 0; i < p; ++i) g.indices.push_back(static_cast<int>(static_cast<std::size_t>(j) * p + i));
    prob.objective.l1_groups.push_back(std::move(g));
  }
  std::map<int, std::vector<int>> groups;
  for (std::size_t k = 0; k < lay.atoms.size(); ++k) {
    const auto [id, j] = lay.atoms[k];
    auto scores = score_functions(spec, table.at(id));
    prob.atoms.push_back({static_cast<int>(k), std::move(scores[static_cast<std::size_t>(j)])});
    groups[id].push_back(static_cast<int>(k));
  }
  for (auto& [id, g] : groups) {
    if (g.size() > 1) prob.exclusive_groups.push_back(std::move(g));
  }

  // Per-sample atom and IPW weight.
  std::vector<int> atom(data.samples.size());
  std::vector<double> ipw(data.samples.size());
  for (std::size_t s = 0; s < data.samples.size(); ++s) {
    const auto& smp = data.samples[s];
    atom[s] = atom_of.at({smp.covariate_id, smp.treatment});
    ipw[s] = smp.outcome / data.propensity_of(smp.covariate_id, smp.treatment);
  }
  const std::size_t K = lay.atoms.size();
  Vector objective(K, 0.0), linear(K, 0.0);
  for (std::size_t s = 0; s < data.samples.size(); ++s) {
    objective[static_cast<std::size_t>(atom[s])] += ipw[s] / n;
    linear[static_cast<std::size_t>(atom[s])] += (1.0 + spec.alpha) * ipw[s] / n;
  }
  std::vector<Vector> pair(K, Vector(K, 0.0));
  for (std::size_t s = 0; s < data.samples.size(); ++s) {
    const auto& a = data.samples[s];
    const double es = data.propensity_of(a.covariate_id, a.treatment);
    for (std::size_t t = 0; t < data.samples.size(); ++t) {
      const auto& b = data.samples[t];
      const double et = data.propensity_of(b.covariate_id, b.treatment);
      pair[static_cast<std::size_t>(atom[s])][static_cast<std::size_t>(atom[t])] +=
          (m - std::max(a.outcome, b.outcome)) / (es * et) / (n * n);
    }
  }
  ConstraintRow gini;
  gini.name = "gini";
  gini.rhs = m;
  gini.residual_allowed = true;
  for (std::size_t k = 0; k < K; ++k) {
    prob.objective.heaviside.push_back({static_cast<int>(k), objective[k]});
    // z_k^2 = z_k folds the diagonal block into the linear term.
    gini.linear.push_back({static_cast<int>(k), linear[k] + pair[k][k]});
    for (std::size_t l = k + 1; l < K; ++l) {
      const double w = pair[k][l] + pair[l][k];
      if (w > 0.0) gini.products.push_back({static_cast<int>(k), static_cast<int>(l), w});
    }
  }
  prob.rows.push_back(std::move(gini));
  prob.validate();
  if (layout) *layout = std::move(lay);
  return prob;
}

inline PolicyParams params_from_point(const Point& point, int num_arms, std::size_t p) {
  return {num_arms, p, point.x};
}

// CSV input and output.

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("CSV: cannot parse " + what + " '" + s + "'");
  }
  if (used != s.size()) throw std::invalid_argument("CSV: trailing characters in " + what + " '" + s + "'");
  return v;
}

inline int parse_int(const std::string& s, const std::string& what) {
  const double v = parse_double(s, what);
  if (v != std::floor(v)) throw std::invalid_argument("CSV: " + what + " is not an integer");
  return static_cast<int>(v);
}

}  // namespace detail

/// Columns: covariate_id, x_0..x_{p-1}, treatment, outcome (header required).
inline void write_dataset_csv(std::ostream& os, const Dataset& data) {
  os << "covariate_id";
  for (std::size_t i = 0; i < data.num_covariates(); ++i) os << ",x_" << i;
  os << ",treatment,outcome\n";
  os.precision(17);
  for (const auto& s : data.samples) {
    os << s.covariate_id;
    for (double v : s.x) os << ',' << v;
    os << ',' << s.treatment << ',' << s.outcome << '\n';
  }
}

inline Dataset read_dataset_csv(std::istream& is, int num_arms) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("dataset CSV: empty input");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 3 || header.front() != "covariate_id" || header[header.size() - 2] != "treatment" ||
      header.back() != "outcome") {
    throw std::invalid_argument("dataset CSV: header must be covariate_id,x_0..,treatment,outcome");
  }
  const std::size_t p = header.size() - 3;
  for (std::size_t i = 0; i < p; ++i) {
    if (header[i + 1] != "x_" + std::to_string(i)) throw std::invalid_argument("dataset CSV: bad column " + header[i + 1]);
  }
  Dataset data;
  data.num_arms = num_arms;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) throw std::invalid_argument("dataset CSV: wrong field count on line " + std::to_string(row));
    Sample s;
    s.covariate_id = detail::parse_int(f[0], "covariate_id");
    for (std::size_t i = 0; i < p; ++i) s.x.push_back(detail::parse_double(f[i + 1], "covariate"));
    s.treatment = detail::parse_int(f[p + 1], "treatment");
    s.outcome = detail::parse_double(f[p + 2], "outcome");
    data.samples.push_back(std::move(s));
  }
  return data;
}

/// Columns: covariate_id, treatment, propensity (header required).
inline void read_propensity_csv(std::istream& is, Dataset& data) {
  std::string line;
  if (!std::getline(is, line) || detail::split_csv_line(line) != std::vector<std::string>{"covariate_id", "treatment", "propensity"}) {
    throw std::invalid_argument("propensity CSV: header must be covariate_id,treatment,propensity");
  }
  data.propensity.clear();
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 3) throw std::invalid_argument("propensity CSV: wrong field count");
    data.propensity[{detail::parse_int(f[0], "covariate_id"), detail::parse_int(f[1], "treatment")}] =
        detail::parse_double(f[2], "propensity");
  }
}

}  // namespace hscop::treatment
