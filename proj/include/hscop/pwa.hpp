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

// Piecewise affine function algebra: affine pieces, convex max-of-affine,
// concave min-of-affine and difference-of-convex functions, together with
// interval bounds over boxes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace hscop {

using Vector = std::vector<double>;

namespace detail {

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

inline void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " +
                                std::to_string(got) + ", expected " +
                                std::to_string(want) + ")");
  }
}

}  // namespace detail

/// Axis-aligned box {x : lower <= x <= upper} with finite bounds.
class Box {
 public:
  Box() = default;
  Box(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    detail::require_dim(upper_.size(), lower_.size(), "Box");
    for (std::size_t i = 0; i < lower_.size(); ++i) {
      detail::require_finite(lower_[i], "Box lower bound");
      detail::require_finite(upper_[i], "Box upper bound");
      if (lower_[i] > upper_[i]) {
        throw std::invalid_argument("Box: lower bound exceeds upper bound at index " +
                                    std::to_string(i));
      }
    }
  }

  static Box uniform(std::size_t n, double lo, double hi) {
    return Box(Vector(n, lo), Vector(n, hi));
  }

  std::size_t dim() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  bool contains(std::span<const double> x, double tol = 0.0) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < lower_[i] - tol || x[i] > upper_[i] + tol) return false;
    }
    return true;
  }

  friend bool operator==(const Box&, const Box&) = default;

 private:
  Vector lower_;
  Vector upper_;
};

/// w^T x + offset.
class AffineFn {
 public:
  AffineFn() = default;
  AffineFn(Vector weights, double offset) : weights_(std::move(weights)), offset_(offset) {
    for (double w : weights_) detail::require_finite(w, "AffineFn weight");
    detail::require_finite(offset_, "AffineFn offset");
  }

  static AffineFn constant(std::size_t n, double value) { return AffineFn(Vector(n, 0.0), value); }

  std::size_t dim() const { return weights_.size(); }
  const Vector& weights() const { return weights_; }
  double offset() const { return offset_; }

  double operator()(std::span<const double> x) const {
    detail::require_dim(x.size(), dim(), "AffineFn::eval");
    double v = offset_;
    for (std::size_t i = 0; i < weights_.size(); ++i) v += weights_[i] * x[i];
    return v;
  }

  AffineFn operator-() const {
    Vector w(weights_.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = -weights_[i];
    return AffineFn(std::move(w), -offset_);
  }

  double lower_bound(const Box& box) const {
    detail::require_dim(box.dim(), dim(), "AffineFn::lower_bound");
    double v = offset_;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      v += std::min(weights_[i] * box.lower()[i], weights_[i] * box.upper()[i]);
    }
    return v;
  }

  double upper_bound(const Box& box) const {
    detail::require_dim(box.dim(), dim(), "AffineFn::upper_bound");
    double v = offset_;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      v += std::max(weights_[i] * box.lower()[i], weights_[i] * box.upper()[i]);
    }
    return v;
  }

  friend bool operator==(const AffineFn&, const AffineFn&) = default;

 private:
  Vector weights_;
  double offset_ = 0.0;
};

namespace detail {

inline void check_pieces(const std::vector<AffineFn>& pieces, const char* what) {
  if (pieces.empty()) throw std::invalid_argument(std::string(what) + ": needs at least one piece");
  for (const auto& p : pieces) require_dim(p.dim(), pieces.front().dim(), what);
}

}  // namespace detail

/// Convex piecewise affine function max_i pieces[i](x).
class MaxAffine {
 public:
  MaxAffine() = default;
  explicit MaxAffine(std::vector<AffineFn> pieces) : pieces_(std::move(pieces)) {
    detail::check_pieces(pieces_, "MaxAffine");
  }

  std::size_t dim() const { return pieces_.front().dim(); }
  const std::vector<AffineFn>& pieces() const { return pieces_; }

  double operator()(std::span<const double> x) const {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) v = std::max(v, p(x));
    return v;
  }

  /// Index of the first piece attaining the maximum.
  std::size_t active_piece(std::span<const double> x) const {
    std::size_t best = 0;
    double v = pieces_[0](x);
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
      const double pv = pieces_[i](x);
      if (pv > v) {
        v = pv;
        best = i;
      }
    }
    return best;
  }

  double lower_bound(const Box& box) const {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) v = std::max(v, p.lower_bound(box));
    return v;
  }

  double upper_bound(const Box& box) const {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) v = std::max(v, p.upper_bound(box));
    return v;
  }

  friend bool operator==(const MaxAffine&, const MaxAffine&) = default;

 private:
  std::vector<AffineFn> pieces_;
};

/// Concave piecewise affine function min_i pieces[i](x).
class MinAffine {
 public:
  MinAffine() = default;
  explicit MinAffine(std::vector<AffineFn> pieces) : pieces_(std::move(pieces)) {
    detail::check_pieces(pieces_, "MinAffine");
  }

  std::size_t dim() const { return pieces_.front().dim(); }
  const std::vector<AffineFn>& pieces() const { return pieces_; }

  double operator()(std::span<const double> x) const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) v = std::min(v, p(x));
    return v;
  }

  double lower_bound(const Box& box) const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) v = std::min(v, p.lower_bound(box));
    return v;
  }

  double upper_bound(const Box& box) const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) v = std::min(v, p.upper_bound(box));
    return v;
  }

  friend bool operator==(const MinAffine&, const MinAffine&) = default;

 private:
  std::vector<AffineFn> pieces_;
};

/// plus(x) - minus(x) with both parts convex max-of-affine.
class DcPwa {
 public:
  DcPwa() = default;
  DcPwa(MaxAffine plus, MaxAffine minus) : plus_(std::move(plus)), minus_(std::move(minus)) {
    detail::require_dim(minus_.dim(), plus_.dim(), "DcPwa");
  }

  std::size_t dim() const { return plus_.dim(); }
  const MaxAffine& plus() const { return plus_; }
  const MaxAffine& minus() const { return minus_; }

  double operator()(std::span<const double> x) const { return plus_(x) - minus_(x); }

  double lower_bound(const Box& box) const {
    return plus_.lower_bound(box) - minus_.upper_bound(box);
  }
  double upper_bound(const Box& box) const {
    return plus_.upper_bound(box) - minus_.lower_bound(box);
  }

  friend bool operator==(const DcPwa&, const DcPwa&) = default;

 private:
  MaxAffine plus_;
  MaxAffine minus_;
};

inline MaxAffine negate(const MinAffine& f) {
  std::vector<AffineFn> pieces;
  pieces.reserve(f.pieces().size());
  for (const auto& p : f.pieces()) pieces.push_back(-p);
  return MaxAffine(std::move(pieces));
}

inline MinAffine negate(const MaxAffine& f) {
  std::vector<AffineFn> pieces;
  pieces.reserve(f.pieces().size());
  for (const auto& p : f.pieces()) pieces.push_back(-p);
  return MinAffine(std::move(pieces));
}

/// A MinAffine written as a DcPwa: min_i p_i = -max_i(-p_i) = 0 - max_i(-p_i).
inline DcPwa to_dc(const MinAffine& f) {
  return DcPwa(MaxAffine({AffineFn::constant(f.dim(), 0.0)}), negate(f));
}

template <typename F>
double eval(const F& f, std::span<const double> x) {
  return f(x);
}

template <typename F>
double lower_bound_on_box(const F& f, const Box& box) {
  return f.lower_bound(box);
}

template <typename F>
double upper_bound_on_box(const F& f, const Box& box) {
  return f.upper_bound(box);
}

inline int heaviside_closed(double t) {
  if (std::isnan(t)) throw std::invalid_argument("heaviside_closed: NaN argument");
  return t >= 0.0 ? 1 : 0;
}

inline int heaviside_open(double t) {
  if (std::isnan(t)) throw std::invalid_argument("heaviside_open: NaN argument");
  return t > 0.0 ? 1 : 0;
}

/// Heaviside argument of an atom.
using PwaFn = std::variant<MinAffine, DcPwa>;

inline double eval(const PwaFn& f, std::span<const double> x) {
  return std::visit([&](const auto& g) { return g(x); }, f);
}

inline double lower_bound_on_box(const PwaFn& f, const Box& box) {
  return std::visit([&](const auto& g) { return g.lower_bound(box); }, f);
}

inline double upper_bound_on_box(const PwaFn& f, const Box& box) {
  return std::visit([&](const auto& g) { return g.upper_bound(box); }, f);
}

inline std::size_t dim(const PwaFn& f) {
  return std::visit([](const auto& g) { return g.dim(); }, f);
}

}  // namespace hscop
