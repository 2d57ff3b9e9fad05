#pragma once

#include <cmath>
#include <random>

#include "wardrop/common.hpp"

namespace wardrop {

namespace detail {

template <typename F>
double simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f on [a, b] to the given absolute tolerance.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-10,
                        int max_depth = 40) {
  if (b <= a) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Uniformly distributed unit direction (Gaussian normalization).
inline Vec random_unit_vector(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec d(dim);
  do {
    for (Eigen::Index t = 0; t < dim; ++t) d[t] = gauss(rng);
  } while (d.norm() < 1e-12);
  return d / d.norm();
}

/// Central finite difference of a scalar function along each coordinate.
/// Step h = 1e-5 * max(1, ||x||).
template <typename F>
Vec central_difference_gradient(const F& f, const Vec& x) {
  const double h = 1e-5 * std::max(1.0, x.norm());
  Vec g(x.size());
  Vec e = x;
  for (Eigen::Index t = 0; t < x.size(); ++t) {
    e[t] = x[t] + h;
    const double fp = f(e);
    e[t] = x[t] - h;
    const double fm = f(e);
    e[t] = x[t];
    g[t] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace wardrop
