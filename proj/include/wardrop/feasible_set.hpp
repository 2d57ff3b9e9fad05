#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wardrop/common.hpp"
#include "wardrop/polytope.hpp"
#include "wardrop/simplex.hpp"

namespace wardrop {

/// A player's strategy set: either a box-bounded simplex
/// {x : sum x = total, lower <= x <= upper} or a general polytope {x : Ax <= b}.
/// Box simplices get exact O(T log T) projection and linear minimization;
/// polytopes fall back to the combinatorial exact routines.
class FeasibleSet {
 public:
  enum class Kind { BoxSimplex, Polytope };

  static FeasibleSet box_simplex(double total, Vec lower, Vec upper) {
    detail::check_box_simplex(lower, upper, total);
    FeasibleSet s;
    s.kind_ = Kind::BoxSimplex;
    s.total_ = total;
    s.lower_ = std::move(lower);
    s.upper_ = std::move(upper);
    return s;
  }

  static FeasibleSet polytope(Mat A, Vec b) {
    FeasibleSet s;
    s.kind_ = Kind::Polytope;
    s.poly_ = std::make_shared<Polytope>(std::move(A), std::move(b));
    return s;
  }

  Kind kind() const { return kind_; }
  bool is_box_simplex() const { return kind_ == Kind::BoxSimplex; }
  double total() const { return total_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

  Eigen::Index dim() const {
    return kind_ == Kind::BoxSimplex ? lower_.size() : poly_->dim();
  }

  Vec project(const Vec& p) const {
    return kind_ == Kind::BoxSimplex ? project_box_simplex(p, total_, lower_, upper_)
                                     : poly_->project(p);
  }

  /// argmin_z <cost, z> over the set (exact; vertex scan for polytopes).
  Vec linear_minimizer(const Vec& cost) const {
    if (kind_ == Kind::BoxSimplex)
      return box_simplex_linear_min(cost, total_, lower_, upper_);
    const auto& vs = poly_->vertices();
    const Vec* best = &vs.front();
    double best_val = cost.dot(vs.front());
    for (const Vec& v : vs) {
      const double val = cost.dot(v);
      if (val < best_val) {
        best_val = val;
        best = &v;
      }
    }
    return *best;
  }

  /// Support value h(d) = max_z <d, z>.
  double support_value(const Vec& direction) const {
    return direction.dot(linear_minimizer(-direction));
  }

  bool contains(const Vec& x, double tol = kFeasTol) const {
    if (kind_ == Kind::Polytope) return poly_->contains(x, tol);
    if (std::abs(x.sum() - total_) > tol) return false;
    return ((x - lower_).array() >= -tol).all() && ((upper_ - x).array() >= -tol).all();
  }

  const std::vector<Vec>& vertices() const { return as_polytope().vertices(); }

  /// Max Euclidean norm over the set (attained at a vertex).
  double radius() const {
    double r = 0.0;
    for (const Vec& v : vertices()) r = std::max(r, v.norm());
    return r;
  }

  /// The set scaled by a positive factor: factor * X. For a polytope this
  /// keeps A and scales b, matching the per-class sets of an approximating
  /// atomic game exactly.
  FeasibleSet scaled(double factor) const {
    if (!(factor > 0.0)) throw std::invalid_argument("scale factor must be > 0");
    if (kind_ == Kind::BoxSimplex)
      return box_simplex(factor * total_, factor * lower_, factor * upper_);
    return polytope(poly_->A(), factor * poly_->b());
  }

  const Polytope& as_polytope() const {
    if (kind_ == Kind::Polytope) return *poly_;
    std::call_once(conv_->flag, [this] {
      const Eigen::Index n = lower_.size();
      Mat A(2 * n + 2, n);
      Vec b(2 * n + 2);
      A.row(0).setOnes();
      b[0] = total_;
      A.row(1).setConstant(-1.0);
      b[1] = -total_;
      A.middleRows(2, n) = Mat::Identity(n, n);
      b.segment(2, n) = upper_;
      A.bottomRows(n) = -Mat::Identity(n, n);
      b.tail(n) = -lower_;
      conv_->poly = std::make_shared<Polytope>(std::move(A), std::move(b));
    });
    return *conv_->poly;
  }

 private:
  struct Conversion {
    std::once_flag flag;
    std::shared_ptr<Polytope> poly;
  };

  Kind kind_ = Kind::BoxSimplex;
  double total_ = 0.0;
  Vec lower_, upper_;
  std::shared_ptr<Polytope> poly_;
  std::shared_ptr<Conversion> conv_ = std::make_shared<Conversion>();
};

/// Distance from a point to the set.
inline double distance_to(const FeasibleSet& set, const Vec& p) {
  return (set.project(p) - p).norm();
}

}  // namespace wardrop
