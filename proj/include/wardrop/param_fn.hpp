#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace wardrop {

/// Scalar parameter curve theta -> value on [0,1], used for demands, bounds,
/// utility weights and preferred-profile components.
///
/// Kinds:
///   constant  v
///   linear    intercept + slope * theta
///   sine      offset + amplitude * sin(pi_coeff * pi * theta + phase)
///   table     piecewise-linear interpolation of sorted (theta, value) points
///   demand    scale * E_theta  (resolved against the enclosing segment's demand)
class ParamFn {
 public:
  enum class Kind { Constant, Linear, Sine, Table, Demand };

  static ParamFn constant(double value) {
    ParamFn f;
    f.kind_ = Kind::Constant;
    f.a_ = value;
    return f;
  }
  static ParamFn linear(double intercept, double slope) {
    ParamFn f;
    f.kind_ = Kind::Linear;
    f.a_ = intercept;
    f.b_ = slope;
    return f;
  }
  static ParamFn sine(double amplitude, double pi_coeff, double phase = 0.0,
                      double offset = 0.0) {
    ParamFn f;
    f.kind_ = Kind::Sine;
    f.a_ = amplitude;
    f.b_ = pi_coeff;
    f.c_ = phase;
    f.d_ = offset;
    return f;
  }
  static ParamFn table(std::vector<std::pair<double, double>> points) {
    if (points.size() < 2) throw std::invalid_argument("table needs >= 2 points");
    std::sort(points.begin(), points.end());
    ParamFn f;
    f.kind_ = Kind::Table;
    f.points_ = std::move(points);
    return f;
  }
  static ParamFn demand_reference(double scale = 1.0) {
    ParamFn f;
    f.kind_ = Kind::Demand;
    f.a_ = scale;
    return f;
  }

  Kind kind() const { return kind_; }
  bool references_demand() const { return kind_ == Kind::Demand; }
  bool is_constant() const { return kind_ == Kind::Constant; }

  /// Evaluate at theta. `demand_value` must be supplied for the demand kind.
  double eval(double theta, double demand_value = std::nan("")) const {
    switch (kind_) {
      case Kind::Constant:
        return a_;
      case Kind::Linear:
        return a_ + b_ * theta;
      case Kind::Sine:
        return d_ + a_ * std::sin(b_ * std::numbers::pi * theta + c_);
      case Kind::Table:
        return eval_table(theta);
      case Kind::Demand:
        if (std::isnan(demand_value))
          throw std::logic_error("demand-referencing parameter evaluated without a demand");
        return a_ * demand_value;
    }
    throw std::logic_error("unreachable");
  }

  double constant_value() const { return a_; }

  /// Exact (min, max) of the curve on [lo, hi]. Not available for the demand
  /// kind, which has no value of its own.
  std::pair<double, double> range_on(double lo, double hi) const {
    if (kind_ == Kind::Demand)
      throw std::logic_error("demand-referencing parameter has no intrinsic range");
    double mn = std::min(eval(lo), eval(hi));
    double mx = std::max(eval(lo), eval(hi));
    if (kind_ == Kind::Sine && b_ != 0.0) {
      const double pi = std::numbers::pi;
      // critical points: b*pi*theta + c = pi/2 + k*pi
      const double k_lo = std::floor((b_ * pi * std::min(lo, hi) + c_) / pi - 0.5);
      const double k_hi = std::ceil((b_ * pi * std::max(lo, hi) + c_) / pi - 0.5);
      for (double k = k_lo; k <= k_hi; k += 1.0) {
        const double theta = (pi / 2.0 + k * pi - c_) / (b_ * pi);
        if (theta >= std::min(lo, hi) && theta <= std::max(lo, hi)) {
          const double v = eval(theta);
          mn = std::min(mn, v);
          mx = std::max(mx, v);
        }
      }
    } else if (kind_ == Kind::Table) {
      for (const auto& [t, v] : points_) {
        if (t > lo && t < hi) {
          mn = std::min(mn, v);
          mx = std::max(mx, v);
        }
      }
    }
    return {mn, mx};
  }

 private:
  double eval_table(double theta) const {
    const auto& p = points_;
    if (theta <= p.front().first) return p.front().second;
    if (theta >= p.back().first) return p.back().second;
    auto it = std::upper_bound(p.begin(), p.end(), std::make_pair(theta, 1e300));
    auto lo = std::prev(it);
    const double w = (theta - lo->first) / (it->first - lo->first);
    return lo->second + w * (it->second - lo->second);
  }

  Kind kind_ = Kind::Constant;
  double a_ = 0.0, b_ = 0.0, c_ = 0.0, d_ = 0.0;
  std::vector<std::pair<double, double>> points_;
};

}  // namespace wardrop
