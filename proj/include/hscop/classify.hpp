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

// Classification as HSCOPs: standard multiclass, Neyman-Pearson constrained,
// and fixed-depth trees with an outer enumeration over leaf labels.
//
// Scores: h_j(x, beta) = x.beta^j + b_j - max_{m != j}(x.beta^m + b_m) with
// beta stacked as beta[j * p + i].

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hscop/hscop.hpp"
#include "hscop/pip.hpp"
#include "hscop/treatment.hpp"

namespace hscop::classify {

struct LabeledSample {
  Vector x;
  int label = 0;
};

struct LabeledDataset {
  int num_classes = 0;
  std::vector<LabeledSample> samples;

  std::size_t num_features() const { return samples.empty() ? 0 : samples.front().x.size(); }

  /// S_i = {s : Y_s = i}.
  std::vector<std::vector<int>> class_sets() const {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(num_classes));
    for (std::size_t s = 0; s < samples.size(); ++s) {
      out[static_cast<std::size_t>(samples[s].label)].push_back(static_cast<int>(s));
    }
    return out;
  }

  void validate() const {
    if (num_classes < 2) throw std::invalid_argument("LabeledDataset: need at least two classes");
    if (samples.empty()) throw std::invalid_argument("LabeledDataset: no samples");
    for (const auto& s : samples) {
      if (s.x.size() != num_features()) throw std::invalid_argument("LabeledDataset: ragged feature rows");
      if (s.label < 0 || s.label >= num_classes) throw std::invalid_argument("LabeledDataset: label out of range");
      for (double v : s.x) {
        if (!std::isfinite(v)) throw std::invalid_argument("LabeledDataset: non-finite feature");
      }
    }
  }
};

/// Common score-model settings. Margins are subtracted from h_j.
struct ScoreSpec {
  Vector base_scores;  // b_j; empty means all zero
  Vector margins;      // tau_j; empty means all `default_margin`
  double default_margin = 0.0;
  double lambda = 0.0;
  double beta_bound = 1.0;

  double base(int j) const { return base_scores.empty() ? 0.0 : base_scores[static_cast<std::size_t>(j)]; }
  double tau(int j) const { return margins.empty() ? default_margin : margins[static_cast<std::size_t>(j)]; }

  void validate(int num_classes) const {
    if (!base_scores.empty() && base_scores.size() != static_cast<std::size_t>(num_classes)) {
      throw std::invalid_argument("ScoreSpec: base_scores has the wrong length");
    }
    if (!margins.empty() && margins.size() != static_cast<std::size_t>(num_classes)) {
      throw std::invalid_argument("ScoreSpec: margins has the wrong length");
    }
    for (int j = 0; j < num_classes; ++j) {
      if (!(tau(j) >= 0.0)) throw std::invalid_argument("ScoreSpec: margins must be >= 0");
    }
    if (!(lambda >= 0.0)) throw std::invalid_argument("ScoreSpec: lambda must be >= 0");
    if (!(beta_bound > 0.0)) throw std::invalid_argument("ScoreSpec: beta_bound must be positive");
  }
};

/// The pieces x.beta^j - x.beta^m + b_j - b_m + shift for m != j.
inline std::vector<AffineFn> score_pieces(int num_classes, const ScoreSpec& spec, std::span<const double> x, int j,
                                          double shift) {
  const std::size_t p = x.size();
  const std::size_t n = static_cast<std::size_t>(num_classes) * p;
  std::vector<AffineFn> pieces;
  for (int m = 0; m < num_classes; ++m) {
    if (m == j) continue;
    Vector w(n, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
      w[static_cast<std::size_t>(j) * p + i] += x[i];
      w[static_cast<std::size_t>(m) * p + i] -= x[i];
    }
    pieces.emplace_back(std::move(w), spec.base(j) - spec.base(m) + shift);
  }
  return pieces;
}

/// h_j(x, beta) without margin.
inline double score(int num_classes, const ScoreSpec& spec, std::span<const double> x, std::span<const double> beta,
                    int j) {
  const std::size_t p = x.size();
  auto lin = [&](int c) {
    double v = spec.base(c);
    for (std::size_t i = 0; i < p; ++i) v += beta[static_cast<std::size_t>(c) * p + i] * x[i];
    return v;
  };
  double other = -std::numeric_limits<double>::infinity();
  for (int m = 0; m < num_classes; ++m) {
    if (m != j) other = std::max(other, lin(m));
  }
  return lin(j) - other;
}

/// The class j with h_j - tau_j >= 0. With all margins positive it is unique;
/// with zero margins ties resolve to the smallest index.
inline std::optional<int> predict(int num_classes, const ScoreSpec& spec, std::span<const double> x,
                                  std::span<const double> beta) {
  for (int j = 0; j < num_classes; ++j) {
    if (score(num_classes, spec, x, beta, j) - spec.tau(j) >= 0.0) return j;
  }
  return std::nullopt;
}

inline double accuracy(const LabeledDataset& data, const ScoreSpec& spec, std::span<const double> beta) {
  int correct = 0;
  for (const auto& s : data.samples) {
    const auto g = predict(data.num_classes, spec, s.x, beta);
    correct += g && *g == s.label;
  }
  return static_cast<double>(correct) / static_cast<double>(data.samples.size());
}

namespace detail {

inline HscopProblem score_problem_shell(const LabeledDataset& data, const ScoreSpec& spec) {
  HscopProblem prob;
  prob.n = static_cast<std::size_t>(data.num_classes) * data.num_features();
  prob.box = Box::uniform(prob.n, -spec.beta_bound, spec.beta_bound);
  prob.objective.cost.assign(prob.n, 0.0);
  if (spec.lambda > 0.0) {
    L1Group g;
    for (std::size_t i = 0; i < prob.n; ++i) g.indices.push_back(static_cast<int>(i));
    g.weight = spec.lambda;
    prob.objective.l1_groups.push_back(std::move(g));
  }
  return prob;
}

inline void require_nonempty(const std::vector<std::vector<int>>& sets, int i) {
  if (sets[static_cast<std::size_t>(i)].empty()) {
    throw std::invalid_argument("classification: class " + std::to_string(i) + " has no samples");
  }
}

}  // namespace detail

/// max sum_i c_i/|S_i| sum_{s in S_i} H(h_i(X^s, beta) - tau_i) - lambda |beta|_1.
/// Class weights c_i default to 1.
inline HscopProblem build_standard_classification(const LabeledDataset& data, const ScoreSpec& spec,
                                                  const Vector& class_weights = {}) {
  data.validate();
  spec.validate(data.num_classes);
  if (!class_weights.empty() && class_weights.size() != static_cast<std::size_t>(data.num_classes)) {
    throw std::invalid_argument("build_standard_classification: class_weights has the wrong length");
  }
  const auto sets = data.class_sets();
  auto prob = detail::score_problem_shell(data, spec);
  for (int i = 0; i < data.num_classes; ++i) {
    detail::require_nonempty(sets, i);
    const double c = class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(i)];
    const double w = c / static_cast<double>(sets[static_cast<std::size_t>(i)].size());
    for (int s : sets[static_cast<std::size_t>(i)]) {
      const auto& x = data.samples[static_cast<std::size_t>(s)].x;
      const int id = static_cast<int>(prob.atoms.size());
      prob.atoms.push_back({id, MinAffine(score_pieces(data.num_classes, spec, x, i, -spec.tau(i)))});
      prob.objective.heaviside.push_back({id, w});
    }
  }
  prob.validate();
  return prob;
}

using LabelPair = std::pair<int, int>;

struct NpSpec {
  std::vector<LabelPair> e1;  // controlled misclassifications (true i, predicted j)
  std::vector<LabelPair> e2;  // misclassifications in the objective
  std::map<LabelPair, double> weights;  // w_ij; missing pairs weigh 1
  double threshold = 0.1;               // gamma > 0
  ScoreSpec score{.default_margin = 0.001};

  double weight(const LabelPair& ij) const {
    const auto it = weights.find(ij);
    return it == weights.end() ? 1.0 : it->second;
  }

  /// E2 = every off-diagonal pair not in E1.
  static NpSpec complement_of(int num_classes, std::vector<LabelPair> e1) {
    NpSpec spec;
    const std::set<LabelPair> in1(e1.begin(), e1.end());
    for (int i = 0; i < num_classes; ++i) {
      for (int j = 0; j < num_classes; ++j) {
        if (i != j && !in1.contains({i, j})) spec.e2.push_back({i, j});
      }
    }
    spec.e1 = std::move(e1);
    return spec;
  }

  void validate(int num_classes) const {
    score.validate(num_classes);
    for (int j = 0; j < num_classes; ++j) {
      if (!(score.tau(j) > 0.0)) throw std::invalid_argument("NpSpec: margins must be positive");
    }
    if (!(threshold > 0.0)) throw std::invalid_argument("NpSpec: threshold must be positive");
    std::set<LabelPair> seen;
    for (const auto* e : {&e1, &e2}) {
      for (const auto& [i, j] : *e) {
        if (i == j || i < 0 || j < 0 || i >= num_classes || j >= num_classes) {
          throw std::invalid_argument("NpSpec: pairs must be off-diagonal labels in range");
        }
        if (!seen.insert({i, j}).second) throw std::invalid_argument("NpSpec: E1 and E2 overlap or repeat");
      }
    }
    if (seen.size() != static_cast<std::size_t>(num_classes * (num_classes - 1))) {
      throw std::invalid_argument("NpSpec: E1 and E2 must cover every off-diagonal pair");
    }
    for (const auto& [ij, w] : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("NpSpec: weights must be >= 0");
    }
  }
};

/// -h_j(x, .) - tau_j as a DcPwa: max_{m != j}(affine) - 0.
inline DcPwa np_atom(int num_classes, const ScoreSpec& spec, std::span<const double> x, int j) {
  std::vector<AffineFn> pieces;
  for (const auto& piece : score_pieces(num_classes, spec, x, j, 0.0)) {
    const AffineFn neg = -piece;
    pieces.emplace_back(neg.weights(), neg.offset() - spec.tau(j));
  }
  const std::size_t n = pieces.front().dim();
  return DcPwa(MaxAffine(std::move(pieces)), MaxAffine({AffineFn::constant(n, 0.0)}));
}

/// Sum over pairs in `pairs` of w_ij/|S_i| sum_{s in S_i} H_open(h_j(X^s) + tau_j):
/// the weighted misclassification rates in the minimization form.
inline double np_error(const LabeledDataset& data, const NpSpec& spec, const std::vector<LabelPair>& pairs,
                       std::span<const double> beta) {
  const auto sets = data.class_sets();
  double v = 0.0;
  for (const auto& [i, j] : pairs) {
    const auto& si = sets[static_cast<std::size_t>(i)];
    int count = 0;
    for (int s : si) {
      const auto& x = data.samples[static_cast<std::size_t>(s)].x;
      count += heaviside_open(score(data.num_classes, spec.score, x, beta, j) + spec.score.tau(j));
    }
    v += spec.weight({i, j}) * count / static_cast<double>(si.size());
  }
  return v;
}

/// The maximization form: objective atoms -h_j - tau_j over E2, and one row
/// sum_{E1} w/|S| sum H(-h_j - tau_j) >= sum_{E1} w - gamma.
inline HscopProblem build_np_classification(const LabeledDataset& data, const NpSpec& spec) {
  data.validate();
  spec.validate(data.num_classes);
  const auto sets = data.class_sets();
  auto prob = detail::score_problem_shell(data, spec.score);
  auto add_atoms = [&](const LabelPair& ij, std::vector<LinearHeavisideTerm>& out) {
    const auto [i, j] = ij;
    detail::require_nonempty(sets, i);
    const double w = spec.weight(ij) / static_cast<double>(sets[static_cast<std::size_t>(i)].size());
    for (int s : sets[static_cast<std::size_t>(i)]) {
      const int id = static_cast<int>(prob.atoms.size());
      prob.atoms.push_back({id, np_atom(data.num_classes, spec.score, data.samples[static_cast<std::size_t>(s)].x, j)});
      if (w > 0.0) out.push_back({id, w});
    }
  };
  for (const auto& ij : spec.e2) add_atoms(ij, prob.objective.heaviside);
  if (!spec.e1.empty()) {
    ConstraintRow row;
    row.name = "np_control";
    double total = 0.0;
    for (const auto& ij : spec.e1) {
      add_atoms(ij, row.linear);
      total += spec.weight(ij);
    }
    row.rhs = total - spec.threshold;
    if (row.rhs <= 0.0) std::cerr << "build_np_classification: the control row is vacuous (rhs <= 0)\n";
    prob.rows.push_back(std::move(row));
  }
  prob.validate();
  return prob;
}

// Trees.

/// A complete binary tree of the given depth. Branch nodes are numbered in
/// heap order (children of k are 2k+1 and 2k+2); leaves are numbered left to
/// right. At node k a sample goes right when a^k.x >= b_k and left when
/// a^k.x <= b_k - epsilon.
struct TreeShape {
  int depth = 1;
  double epsilon = 1e-3;
  double a_bound = 1.0;
  std::optional<double> b_bound;  // defaults to a_bound * max_s |X^s|_1 + 1

  int num_branches() const { return (1 << depth) - 1; }
  int num_leaves() const { return 1 << depth; }

  void validate() const {
    if (depth < 1) throw std::invalid_argument("TreeShape: depth must be >= 1");
    if (depth > 10) throw std::invalid_argument("TreeShape: depth must be <= 10");
    if (!(epsilon > 0.0)) throw std::invalid_argument("TreeShape: epsilon must be positive");
    if (!(a_bound > 0.0)) throw std::invalid_argument("TreeShape: a_bound must be positive");
    if (b_bound && !(*b_bound > 0.0)) throw std::invalid_argument("TreeShape: b_bound must be positive");
  }

  /// (branch node, went right) along the root-to-leaf path.
  std::vector<std::pair<int, bool>> path(int leaf) const {
    std::vector<std::pair<int, bool>> out;
    int node = 0;
    for (int level = depth - 1; level >= 0; --level) {
      const bool right = (leaf >> level) & 1;
      out.push_back({node, right});
      node = 2 * node + (right ? 2 : 1);
    }
    return out;
  }
};

/// Variable layout: branch k owns a^k at [k(p+1), k(p+1)+p) and b_k at k(p+1)+p.
struct TreeLayout {
  std::size_t p = 0;
  std::vector<std::pair<int, int>> atoms;  // (leaf, sample)

  int a_index(int k, std::size_t i) const { return k * static_cast<int>(p + 1) + static_cast<int>(i); }
  int b_index(int k) const { return k * static_cast<int>(p + 1) + static_cast<int>(p); }
};

/// The leaf a sample reaches, or nullopt when it falls in a margin gap.
inline std::optional<int> route(const TreeShape& shape, std::span<const double> params, std::span<const double> x) {
  const TreeLayout lay{x.size(), {}};
  int node = 0;
  int leaf = 0;
  for (int level = 0; level < shape.depth; ++level) {
    double ax = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) ax += params[static_cast<std::size_t>(lay.a_index(node, i))] * x[i];
    const double b = params[static_cast<std::size_t>(lay.b_index(node))];
    bool right = false;
    if (ax - b >= 0.0) {
      right = true;
    } else if (!(-ax + b - shape.epsilon >= 0.0)) {
      return std::nullopt;
    }
    leaf = 2 * leaf + (right ? 1 : 0);
    node = 2 * node + (right ? 2 : 1);
  }
  return leaf;
}

/// For a fixed label tuple (one class per leaf): one MinAffine atom per leaf t
/// and sample s with Y_s = labels[t], objective weight 1, and lambda |a^k|_1
/// per branch node.
inline HscopProblem build_tree_hscop(const LabeledDataset& data, const TreeShape& shape, const std::vector<int>& labels,
                                     double lambda, TreeLayout* layout = nullptr) {
  data.validate();
  shape.validate();
  if (labels.size() != static_cast<std::size_t>(shape.num_leaves())) {
    throw std::invalid_argument("build_tree_hscop: one label per leaf is required");
  }
  for (int j : labels) {
    if (j < 0 || j >= data.num_classes) throw std::invalid_argument("build_tree_hscop: label out of range");
  }
  if (!(lambda >= 0.0)) throw std::invalid_argument("build_tree_hscop: lambda must be >= 0");
  const std::size_t p = data.num_features();
  TreeLayout lay{p, {}};
  double max_l1 = 0.0;
  for (const auto& s : data.samples) {
    double l1 = 0.0;
    for (double v : s.x) l1 += std::abs(v);
    max_l1 = std::max(max_l1, l1);
  }
  const double b_bound = shape.b_bound.value_or(shape.a_bound * max_l1 + 1.0);
  HscopProblem prob;
  prob.n = static_cast<std::size_t>(shape.num_branches()) * (p + 1);
  Vector lo(prob.n, -shape.a_bound), hi(prob.n, shape.a_bound);
  for (int k = 0; k < shape.num_branches(); ++k) {
    lo[static_cast<std::size_t>(lay.b_index(k))] = -b_bound;
    hi[static_cast<std::size_t>(lay.b_index(k))] = b_bound;
  }
  prob.box = Box(std::move(lo), std::move(hi));
  prob.objective.cost.assign(prob.n, 0.0);
  if (lambda > 0.0) {
    for (int k = 0; k < shape.num_branches(); ++k) {
      L1Group g;
      for (std::size_t i = 0; i < p; ++i) g.indices.push_back(lay.a_index(k, i));
      g.weight = lambda;
      prob.objective.l1_groups.push_back(std::move(g));
    }
  }
  std::vector<std::vector<int>> per_sample(data.samples.size());
  for (int t = 0; t < shape.num_leaves(); ++t) {
    const auto path = shape.path(t);
    for (std::size_t s = 0; s < data.samples.size(); ++s) {
      const auto& x = data.samples[s].x;
      if (data.samples[s].label != labels[static_cast<std::size_t>(t)]) continue;
      std::vector<AffineFn> pieces;
      for (const auto& [k, right] : path) {
        Vector w(prob.n, 0.0);
        const double sign = right ? 1.0 : -1.0;
        for (std::size_t i = 0; i < p; ++i) w[static_cast<std::size_t>(lay.a_index(k, i))] = sign * x[i];
        w[static_cast<std::size_t>(lay.b_index(k))] = -sign;
        pieces.emplace_back(std::move(w), right ? 0.0 : -shape.epsilon);
      }
      const int id = static_cast<int>(prob.atoms.size());
      prob.atoms.push_back({id, MinAffine(std::move(pieces))});
      prob.objective.heaviside.push_back({id, 1.0});
      lay.atoms.push_back({t, static_cast<int>(s)});
      per_sample[s].push_back(id);
    }
  }
  // A sample reaches at most one leaf.
  for (auto& g : per_sample) {
    if (g.size() > 1) prob.exclusive_groups.push_back(std::move(g));
  }
  prob.validate();
  if (layout) *layout = std::move(lay);
  return prob;
}

/// Number of samples whose leaf label equals their class.
inline int tree_correct(const LabeledDataset& data, const TreeShape& shape, const std::vector<int>& labels,
                        std::span<const double> params) {
  int correct = 0;
  for (const auto& s : data.samples) {
    const auto leaf = route(shape, params, s.x);
    correct += leaf && labels[static_cast<std::size_t>(*leaf)] == s.label;
  }
  return correct;
}

struct TupleValue {
  std::vector<int> labels;
  double value = -milp::kInf;
  std::optional<Point> x;
};

struct TupleSearch {
  std::vector<TupleValue> tuples;
  std::size_t best = 0;

  const TupleValue& best_tuple() const { return tuples.at(best); }
};

using TupleSolver = std::function<std::optional<Point>(const HscopProblem&)>;

inline TupleSolver full_mip_solver(std::optional<double> time_limit = std::nullopt) {
  return [time_limit](const HscopProblem& prob) { return solve_full(prob, time_limit).x; };
}

/// Solves one tree HSCOP per label tuple in J^{leaves} (lexicographic, leaf 0
/// most significant) and keeps the argmax.
inline TupleSearch enumerate_label_tuples(const LabeledDataset& data, const TreeShape& shape, double lambda,
                                          const TupleSolver& solver = full_mip_solver(),
                                          std::int64_t budget = 4096) {
  shape.validate();
  std::int64_t count = 1;
  for (int t = 0; t < shape.num_leaves(); ++t) {
    count *= data.num_classes;
    if (count > budget) {
      throw std::length_error("enumerate_label_tuples: " + std::to_string(data.num_classes) + "^" +
                              std::to_string(shape.num_leaves()) +
                              " label tuples exceed the budget; reduce the depth or the number of classes");
    }
  }
  TupleSearch out;
  std::vector<int> labels(static_cast<std::size_t>(shape.num_leaves()), 0);
  for (std::int64_t c = 0; c < count; ++c) {
    std::int64_t r = c;
    for (int t = shape.num_leaves() - 1; t >= 0; --t) {
      labels[static_cast<std::size_t>(t)] = static_cast<int>(r % data.num_classes);
      r /= data.num_classes;
    }
    const auto prob = build_tree_hscop(data, shape, labels, lambda);
    TupleValue tv{labels, -milp::kInf, solver(prob)};
    if (tv.x) tv.value = evaluate(prob, *tv.x).objective;
    out.tuples.push_back(std::move(tv));
    if (out.tuples.back().value > out.tuples[out.best].value) out.best = out.tuples.size() - 1;
  }
  return out;
}

// CSV: x_0..x_{p-1}, label (header required, labels 0-based).

inline void write_labeled_csv(std::ostream& os, const LabeledDataset& data) {
  for (std::size_t i = 0; i < data.num_features(); ++i) os << "x_" << i << ',';
  os << "label\n";
  os.precision(17);
  for (const auto& s : data.samples) {
    for (double v : s.x) os << v << ',';
    os << s.label << '\n';
  }
}

/// num_classes defaults to the largest label plus one.
inline LabeledDataset read_labeled_csv(std::istream& is, std::optional<int> num_classes = std::nullopt) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("labeled CSV: missing header");
  const auto header = treatment::detail::split_csv_line(line);
  if (header.size() < 2 || header.back() != "label") {
    throw std::invalid_argument("labeled CSV: header must be x_0,...,x_{p-1},label");
  }
  for (std::size_t i = 0; i + 1 < header.size(); ++i) {
    if (header[i] != "x_" + std::to_string(i)) throw std::invalid_argument("labeled CSV: bad column " + header[i]);
  }
  LabeledDataset data;
  int max_label = -1;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = treatment::detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("labeled CSV: wrong number of cells on line " + std::to_string(line_no));
    }
    LabeledSample s;
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) s.x.push_back(treatment::detail::parse_double(cells[i], header[i]));
    s.label = treatment::detail::parse_int(cells.back(), "label");
    max_label = std::max(max_label, s.label);
    data.samples.push_back(std::move(s));
  }
  data.num_classes = num_classes.value_or(max_label + 1);
  data.validate();
  return data;
}

}  // namespace hscop::classify
