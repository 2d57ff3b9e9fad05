#pragma once

#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wardrop/common.hpp"

namespace wardrop {

namespace detail {

/// Visits all index subsets of {0..n-1} of the given size in lexicographic
/// order. Returns false from the visitor to stop early.
template <typename Visitor>
bool for_each_subset(int n, int size, Visitor&& visit) {
  if (size > n) return true;
  std::vector<int> idx(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    if (!visit(idx)) return false;
    int i = size - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - size + i) --i;
    if (i < 0) return true;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < size; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

}  // namespace detail

/// Bounded convex polytope {x : A x <= b}. Vertex enumeration and projection
/// are exact combinatorial procedures intended for low dimension (T <= 6).
class Polytope {
 public:
  Polytope(Mat A, Vec b) : A_(std::move(A)), b_(std::move(b)) {
    if (A_.rows() != b_.size()) throw std::invalid_argument("A/b size mismatch");
    if (A_.cols() > 6) throw std::invalid_argument("vertex enumeration limited to T <= 6");
  }

  const Mat& A() const { return A_; }
  const Vec& b() const { return b_; }
  Eigen::Index dim() const { return A_.cols(); }

  bool contains(const Vec& x, double tol = kFeasTol) const {
    return ((A_ * x - b_).array() <= tol).all();
  }

  /// True when the recession cone {d : A d <= 0} is trivial.
  bool is_bounded() const {
    const Eigen::Index n = dim();
    Mat ca(A_.rows() + 2 * n, n);
    Vec cb(A_.rows() + 2 * n);
    ca.topRows(A_.rows()) = A_;
    cb.head(A_.rows()).setZero();
    ca.middleRows(A_.rows(), n) = Mat::Identity(n, n);
    cb.segment(A_.rows(), n).setOnes();
    ca.bottomRows(n) = -Mat::Identity(n, n);
    cb.tail(n).setOnes();
    bool bounded = true;
    enumerate_basic_solutions(ca, cb, [&](const Vec& v) {
      if (v.lpNorm<Eigen::Infinity>() > 1e-7) {
        bounded = false;
        return false;
      }
      return true;
    });
    return bounded;
  }

  /// All vertices (basic feasible solutions), deduplicated at 1e-9.
  /// Throws DomainError for an empty or unbounded polytope.
  const std::vector<Vec>& vertices() const {
    std::call_once(cache_->flag, [this] {
      try {
        cache_->vertices = enumerate_vertices();
      } catch (...) {
        cache_->error = std::current_exception();
      }
    });
    if (cache_->error) std::rethrow_exception(cache_->error);
    return cache_->vertices;
  }

  /// Euclidean projection onto the polytope, exact via enumeration of
  /// candidate active sets (conic Caratheodory: the optimal multiplier uses at
  /// most dim independent active rows).
  Vec project(const Vec& p) const {
    if (contains(p, 1e-14)) return p;
    const Eigen::Index n = dim();
    double best_dist = std::numeric_limits<double>::infinity();
    Vec best;
    for (int k = 1; k <= static_cast<int>(n); ++k) {
      detail::for_each_subset(static_cast<int>(A_.rows()), k, [&](const std::vector<int>& J) {
        Mat aj(k, n);
        Vec bj(k);
        for (int i = 0; i < k; ++i) {
          aj.row(i) = A_.row(J[static_cast<std::size_t>(i)]);
          bj[i] = b_[J[static_cast<std::size_t>(i)]];
        }
        Eigen::FullPivLU<Mat> lu(aj);
        if (lu.rank() < k) return true;
        const Mat gram = aj * aj.transpose();
        const Vec lambda = gram.ldlt().solve(aj * p - bj);
        if ((lambda.array() < -1e-10).any()) return true;
        const Vec z = p - aj.transpose() * lambda;
        if (!contains(z, kFeasTol)) return true;
        const double d = (z - p).norm();
        if (d < best_dist) {
          best_dist = d;
          best = z;
        }
        return true;
      });
      if (std::isfinite(best_dist)) break;  // smaller active sets dominate
    }
    if (!std::isfinite(best_dist))
      throw DomainError("polytope projection failed (empty set?)");
    return best;
  }

 private:
  template <typename Visitor>
  static void enumerate_basic_solutions(const Mat& A, const Vec& b, Visitor&& visit) {
    const int n = static_cast<int>(A.cols());
    detail::for_each_subset(static_cast<int>(A.rows()), n, [&](const std::vector<int>& J) {
      Mat aj(n, n);
      Vec bj(n);
      for (int i = 0; i < n; ++i) {
        aj.row(i) = A.row(J[static_cast<std::size_t>(i)]);
        bj[i] = b[J[static_cast<std::size_t>(i)]];
      }
      Eigen::FullPivLU<Mat> lu(aj);
      if (!lu.isInvertible()) return true;
      const Vec v = lu.solve(bj);
      if (((A * v - b).array() <= kFeasTol).all()) {
        if (!visit(v)) return false;
      }
      return true;
    });
  }

  std::vector<Vec> enumerate_vertices() const {
    if (!is_bounded()) throw DomainError("polytope is unbounded");
    std::vector<Vec> verts;
    enumerate_basic_solutions(A_, b_, [&](const Vec& v) {
      for (const Vec& w : verts)
        if ((w - v).lpNorm<Eigen::Infinity>() <= kVertexDedupTol) return true;
      verts.push_back(v);
      return true;
    });
    if (verts.empty()) throw DomainError("polytope is empty");
    return verts;
  }

  struct Cache {
    std::once_flag flag;
    std::vector<Vec> vertices;
    std::exception_ptr error;
  };

  Mat A_;
  Vec b_;
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

}  // namespace wardrop
