#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace wardrop {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Feasibility slack used throughout for membership checks on polytopes.
inline constexpr double kFeasTol = 1e-9;

// Dedup tolerance for vertex lists (basic solutions of small well-conditioned
// systems are accurate to well below this).
inline constexpr double kVertexDedupTol = 1e-9;

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, Vec last_iterate, double gap)
      : std::runtime_error(what), last(std::move(last_iterate)), residual(gap) {}
  Vec last;
  double residual = 0.0;
};

inline bool nearly_equal(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace wardrop
