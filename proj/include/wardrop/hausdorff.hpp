#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "wardrop/feasible_set.hpp"
#include "wardrop/numerics.hpp"

namespace wardrop {

namespace detail {

// Plain simplex (lower = 0, per-link caps not binding): the distance between
// demand slices E and E' is |E - E'|, attained corner to corner.
inline bool is_plain_simplex(const FeasibleSet& s) {
  return s.is_box_simplex() && s.lower().isZero(0.0) &&
         (s.upper().array() >= s.total() - 1e-15).all();
}

}  // namespace detail

/// Hausdorff distance between two convex compact sets given by their vertex
/// lists and projection oracles. Exact for polytopes: x -> d(x, Q) is convex,
/// so its maximum over P is attained at a vertex of P.
inline double hausdorff_distance(const FeasibleSet& p, const FeasibleSet& q) {
  if (detail::is_plain_simplex(p) && detail::is_plain_simplex(q) && p.dim() == q.dim())
    return std::abs(p.total() - q.total());
  double d = 0.0;
  for (const Vec& v : p.vertices()) d = std::max(d, distance_to(q, v));
  for (const Vec& w : q.vertices()) d = std::max(d, distance_to(p, w));
  return d;
}

/// Sampled lower estimate of the Hausdorff distance via support functions:
/// d_H(P, Q) = sup over unit directions of |h_P - h_Q|. Used where one side is
/// only available through a support oracle (e.g. an integrated aggregate set).
inline double support_gap_sampled(const std::function<double(const Vec&)>& support_p,
                                  const std::function<double(const Vec&)>& support_q,
                                  Eigen::Index dim, int num_directions,
                                  std::mt19937_64& rng) {
  double gap = 0.0;
  for (int k = 0; k < num_directions; ++k) {
    const Vec u = random_unit_vector(dim, rng);
    gap = std::max(gap, std::abs(support_p(u) - support_q(u)));
  }
  return gap;
}

}  // namespace wardrop
