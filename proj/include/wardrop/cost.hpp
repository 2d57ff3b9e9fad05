#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wardrop/common.hpp"

namespace wardrop {

/// Per-link latency c_t. Required shape: differentiable, convex and increasing
/// on the evaluation domain [0, domain_cap]. Convexity makes the derivative
/// nondecreasing, so the derivative range on the domain is [c'(0), c'(cap)].
class CostFunction {
 public:
  enum class Kind { Affine, Polynomial };

  static CostFunction affine(double slope, double intercept) {
    if (slope < 0.0) throw std::invalid_argument("affine cost needs slope >= 0");
    CostFunction c;
    c.kind_ = Kind::Affine;
    c.coeffs_ = {intercept, slope};
    return c;
  }

  /// coeffs[k] multiplies x^k. All coefficients must be >= 0, which gives an
  /// increasing convex polynomial on x >= 0.
  static CostFunction polynomial(std::vector<double> coeffs) {
    if (coeffs.empty()) throw std::invalid_argument("empty polynomial");
    for (double a : coeffs)
      if (a < 0.0) throw std::invalid_argument("polynomial cost needs coefficients >= 0");
    CostFunction c;
    c.kind_ = Kind::Polynomial;
    c.coeffs_ = std::move(coeffs);
    return c;
  }

  Kind kind() const { return kind_; }
  const std::vector<double>& coefficients() const { return coeffs_; }

  double value(double load) const {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * load + *it;
    return acc;
  }

  double derivative(double load) const {
    double acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 1;)
      acc = acc * load + static_cast<double>(k) * coeffs_[k];
    return acc;
  }

  double second_derivative(double load) const {
    double acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 2;)
      acc = acc * load + static_cast<double>(k * (k - 1)) * coeffs_[k];
    return acc;
  }

  /// Antiderivative int_0^load c(s) ds (the per-link potential term).
  double integral(double load) const {
    double acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 0;)
      acc = acc * load + coeffs_[k] / static_cast<double>(k + 1);
    return acc * load;
  }

  double domain_cap() const { return cap_; }
  void set_domain_cap(double cap) {
    if (!(cap >= 0.0)) throw std::invalid_argument("domain cap must be >= 0");
    cap_ = cap;
  }

  /// Lipschitz constant of c on [0, cap]: max |c'| = c'(cap) by convexity.
  double derivative_upper() const { return derivative(cap_); }
  /// Strong-monotonicity modulus on [0, cap]: min c' = c'(0) by convexity.
  double derivative_lower() const { return derivative(0.0); }

  /// Sample-checks the increasing/convex shape on [0, cap].
  void validate(int grid = 64) const {
    for (int g = 0; g <= grid; ++g) {
      const double x = cap_ * static_cast<double>(g) / grid;
      if (derivative(x) < -1e-12)
        throw DomainError("cost derivative negative at load " + std::to_string(x));
      if (second_derivative(x) < -1e-12)
        throw DomainError("cost not convex at load " + std::to_string(x));
    }
  }

 private:
  Kind kind_ = Kind::Affine;
  std::vector<double> coeffs_ = {0.0, 1.0};
  double cap_ = 1.0;
};

}  // namespace wardrop
