#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "wardrop/common.hpp"

namespace wardrop {

namespace detail {

inline void check_box_simplex(const Vec& lower, const Vec& upper, double total) {
  if (lower.size() != upper.size()) throw std::invalid_argument("bound size mismatch");
  for (Eigen::Index t = 0; t < lower.size(); ++t) {
    if (!(lower[t] <= upper[t] + 1e-15))
      throw std::invalid_argument("lower bound exceeds upper bound");
    if (!std::isfinite(lower[t]) || !std::isfinite(upper[t]))
      throw std::invalid_argument("non-finite bound");
  }
  if (!std::isfinite(total)) throw std::invalid_argument("non-finite total");
  if (total < lower.sum() - 1e-9 || total > upper.sum() + 1e-9)
    throw std::invalid_argument("box-simplex is empty: total outside bound sums");
}

}  // namespace detail

/// Minimizes sum_t (p_t x_t^2 + r_t x_t) subject to sum x = total and
/// lower <= x <= upper, with p_t >= 0 (continuous quadratic knapsack).
///
/// Solved exactly by a breakpoint scan on the equality multiplier lambda:
/// stationarity gives x_t(lambda) = clamp((lambda - r_t)/(2 p_t), l_t, u_t),
/// a nondecreasing piecewise-linear map whose sum is matched to `total`.
/// Coordinates with p_t = 0 contribute step discontinuities at lambda = r_t
/// and are filled in ascending index order when the target lands on a step.
inline Vec solve_quadratic_knapsack(const Vec& quad, const Vec& lin, double total,
                                    const Vec& lower, const Vec& upper) {
  const Eigen::Index n = quad.size();
  detail::check_box_simplex(lower, upper, total);
  for (Eigen::Index t = 0; t < n; ++t)
    if (quad[t] < 0.0) throw std::invalid_argument("knapsack needs p_t >= 0");

  const double sum_lower = lower.sum();
  const double sum_upper = upper.sum();
  const double target = std::clamp(total, sum_lower, sum_upper);

  auto value_at = [&](double lambda) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (quad[t] > 0.0) {
        s += std::clamp((lambda - lin[t]) / (2.0 * quad[t]), lower[t], upper[t]);
      } else {
        s += lambda < lin[t] ? lower[t] : upper[t];  // right-continuous
      }
    }
    return s;
  };

  std::vector<double> breaks;
  breaks.reserve(static_cast<std::size_t>(2 * n));
  for (Eigen::Index t = 0; t < n; ++t) {
    if (quad[t] > 0.0) {
      breaks.push_back(lin[t] + 2.0 * quad[t] * lower[t]);
      breaks.push_back(lin[t] + 2.0 * quad[t] * upper[t]);
    } else {
      breaks.push_back(lin[t]);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  // Locate the first breakpoint whose (right-continuous) sum reaches target.
  std::size_t hi = breaks.size();
  {
    std::size_t lo = 0;
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (value_at(breaks[mid]) >= target)
        hi = mid;
      else
        lo = mid + 1;
    }
  }

  double lambda;
  if (hi == breaks.size()) {
    lambda = breaks.back();  // target == sum_upper up to roundoff
  } else {
    const double bk = breaks[hi];
    // Left limit at bk: step coordinates at lambda == bk sit at lower.
    double s_left = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (quad[t] > 0.0)
        s_left += std::clamp((bk - lin[t]) / (2.0 * quad[t]), lower[t], upper[t]);
      else
        s_left += bk <= lin[t] ? lower[t] : upper[t];
    }
    if (target >= s_left) {
      lambda = bk;  // lands at the break, possibly inside a step discontinuity
    } else {
      // Interpolate inside the open interval (breaks[hi-1], bk).
      const double prev = hi == 0 ? bk : breaks[hi - 1];
      double slope = 0.0;
      const double mid = 0.5 * (prev + bk);
      for (Eigen::Index t = 0; t < n; ++t) {
        if (quad[t] > 0.0) {
          const double v = (mid - lin[t]) / (2.0 * quad[t]);
          if (v > lower[t] && v < upper[t]) slope += 1.0 / (2.0 * quad[t]);
        }
      }
      const double s_prev = value_at(prev);
      lambda = slope > 0.0 ? prev + (target - s_prev) / slope : prev;
    }
  }

  Vec x(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    if (quad[t] > 0.0)
      x[t] = std::clamp((lambda - lin[t]) / (2.0 * quad[t]), lower[t], upper[t]);
    else
      x[t] = lambda < lin[t] ? lower[t] : (lambda > lin[t] ? upper[t] : lower[t]);
  }

  // Step coordinates sitting exactly at lambda absorb the jump residue
  // (filled in index order); free quadratic coordinates only take up
  // floating-point dust so their stationarity is preserved.
  double residue = target - x.sum();
  for (Eigen::Index t = 0; t < n && residue > 0.0; ++t) {
    if (quad[t] == 0.0 && lin[t] == lambda) {
      const double take = std::min(residue, upper[t] - x[t]);
      x[t] += take;
      residue -= take;
    }
  }
  if (std::abs(residue) > 0.0) {
    for (Eigen::Index t = 0; t < n && std::abs(residue) > 0.0; ++t) {
      if (!(quad[t] > 0.0) || x[t] <= lower[t] || x[t] >= upper[t]) continue;
      const double room = residue > 0.0 ? upper[t] - x[t] : lower[t] - x[t];
      const double take = residue > 0.0 ? std::min(residue, room) : std::max(residue, room);
      x[t] += take;
      residue -= take;
    }
  }
  return x;
}

/// Euclidean projection onto {z : sum z = total, lower <= z <= upper}.
/// KKT structure: z_t = clamp(point_t + shift, lower_t, upper_t) for a scalar
/// shift chosen so the sum matches; found exactly by breakpoint search.
inline Vec project_box_simplex(const Vec& point, double total, const Vec& lower,
                               const Vec& upper) {
  for (Eigen::Index t = 0; t < point.size(); ++t)
    if (!std::isfinite(point[t])) throw std::invalid_argument("non-finite projection input");
  return solve_quadratic_knapsack(Vec::Ones(point.size()), -2.0 * point, total, lower, upper);
}

/// argmin_z <cost, z> over the box simplex, by greedy fill: start at the lower
/// bounds and pour the remaining mass into coordinates by ascending cost.
/// Ties broken by index, so the result is deterministic.
inline Vec box_simplex_linear_min(const Vec& cost, double total, const Vec& lower,
                                  const Vec& upper) {
  detail::check_box_simplex(lower, upper, total);
  const Eigen::Index n = cost.size();
  Vec z = lower;
  double remaining = total - lower.sum();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return cost[a] < cost[b]; });
  for (Eigen::Index t : order) {
    if (remaining <= 0.0) break;
    const double take = std::min(remaining, upper[t] - lower[t]);
    z[t] += take;
    remaining -= take;
  }
  return z;
}

}  // namespace wardrop
