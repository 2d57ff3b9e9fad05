#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "wardrop/game.hpp"
#include "wardrop/hausdorff.hpp"
#include "wardrop/instance.hpp"

namespace wardrop {

/// Discretization quality of one atomic class:
///   measure      mu_i, the Lebesgue measure of the class
///   set_gap      delta_i = max_theta d_H(X_theta, (1/mu_i) X_i)
///   utility_gap  d_i = max_theta sup_{|x|<=M} |grad u_i(mu_i x) - grad u_theta(x)|
struct ClassMetrics {
  double measure = 0.0;
  double set_gap = 0.0;
  double utility_gap = 0.0;
};

struct MetricsOptions {
  int theta_grid = 16;          // initial samples per class
  int max_theta_grid = 256;     // adaptive refinement cap
  double refine_tol = 0.10;     // relative change triggering a grid doubling
};

/// One element of an atomic approximating sequence.
struct AasElement {
  int nu = 0;
  AtomicInstance game;
  std::vector<ClassMetrics> per_class;
  double mu_bar = 0.0;     // max_i mu_i
  double delta_bar = 0.0;  // max_i delta_i
  double d_bar = 0.0;      // max_i d_i
};

namespace detail {

// Max over the ball B_0(M) of |grad u_a - grad u_b| for same-kind utilities,
// in closed form. Both specs must be unscaled (scale == 1).
inline double utility_gradient_gap(const UtilitySpec& a, const UtilitySpec& b,
                                   double radius, Eigen::Index dim) {
  using Kind = UtilitySpec::Kind;
  if (a.kind() != b.kind())
    throw std::invalid_argument("utility kinds differ within one class");
  switch (a.kind()) {
    case Kind::None:
      return 0.0;
    case Kind::QuadPref: {
      // |2(w_b - w_a) x + 2(w_a y_a - w_b y_b)| maximized over |x| <= M
      const double slope = 2.0 * std::abs(b.weight() - a.weight());
      const double offset =
          2.0 * (a.weight() * a.preferred() - b.weight() * b.preferred()).norm();
      return slope * radius + offset;
    }
    case Kind::LogBenefit:
      // gradients are w/(1+sum x) * ones; sup over the nonnegative orthant
      return std::abs(a.weight() - b.weight()) * std::sqrt(static_cast<double>(dim));
  }
  return 0.0;
}

// Inclusive theta grid over [lo, hi), nudged inside so segment lookup stays in
// the class. Includes both endpoints: within-class maxima of the metrics
// typically sit there.
inline std::vector<double> theta_grid(double lo, double hi, int points) {
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points));
  const double eps = 1e-12 * std::max(1.0, std::abs(hi));
  for (int j = 0; j < points; ++j) {
    double th = lo + (hi - lo) * static_cast<double>(j) / (points - 1);
    grid.push_back(std::min(th, hi - eps));
  }
  return grid;
}

struct GapPair {
  double set_gap = 0.0;
  double utility_gap = 0.0;
};

inline GapPair class_gaps_on_grid(const NonatomicInstance& inst, const AtomicPlayer& player,
                                  int points) {
  GapPair g;
  for (const auto& [lo, hi] : player.pieces) {
    for (double th : theta_grid(lo, hi, points)) {
      g.set_gap = std::max(g.set_gap, hausdorff_distance(inst.feasible_at(th), player.base_set));
      // grad u_i(mu x) == grad u_base(x) by the population-scale construction,
      // so the utility gap reduces to base-vs-theta variation.
      const UtilitySpec base = player.utility.scaled(1.0 / player.utility.scale());
      g.utility_gap =
          std::max(g.utility_gap, utility_gradient_gap(base, inst.utility_at(th),
                                                       inst.radius(), inst.num_links()));
    }
  }
  return g;
}

}  // namespace detail

/// Recomputes per-class metrics on an adaptively refined theta grid: the grid
/// is doubled until both gaps change by less than refine_tol relatively.
inline void compute_metrics(AasElement& element, const NonatomicInstance& inst,
                            const MetricsOptions& opts = {}) {
  element.per_class.clear();
  element.per_class.reserve(static_cast<std::size_t>(element.game.num_players()));
  element.mu_bar = element.delta_bar = element.d_bar = 0.0;
  for (const AtomicPlayer& p : element.game.players()) {
    detail::GapPair gaps = detail::class_gaps_on_grid(inst, p, opts.theta_grid);
    for (int g = opts.theta_grid * 2; g <= opts.max_theta_grid; g *= 2) {
      const detail::GapPair fine = detail::class_gaps_on_grid(inst, p, g);
      const double rel_set =
          std::abs(fine.set_gap - gaps.set_gap) / std::max(fine.set_gap, 1e-12);
      const double rel_util =
          std::abs(fine.utility_gap - gaps.utility_gap) / std::max(fine.utility_gap, 1e-12);
      gaps = fine;
      if (rel_set < opts.refine_tol && rel_util < opts.refine_tol) break;
    }
    ClassMetrics m;
    m.measure = p.measure;
    m.set_gap = gaps.set_gap;
    m.utility_gap = gaps.utility_gap;
    element.per_class.push_back(m);
    element.mu_bar = std::max(element.mu_bar, m.measure);
    element.delta_bar = std::max(element.delta_bar, m.set_gap);
    element.d_bar = std::max(element.d_bar, m.utility_gap);
  }
}

/// Uniform splitting: cut [0,1] at {k/nu} plus the parameter discontinuities,
/// parameterize each class by its interval midpoint, and scale sets and
/// utilities by the class measure.
inline AasElement build_uniform_aas(const NonatomicInstance& inst, int nu,
                                    const MetricsOptions& opts = {}) {
  if (nu < 1) throw std::invalid_argument("nu must be >= 1");
  std::vector<double> cuts;
  for (int k = 0; k <= nu; ++k) cuts.push_back(static_cast<double>(k) / nu);
  for (double s : inst.discontinuities()) cuts.push_back(s);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             cuts.end());

  std::vector<AtomicPlayer> players;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k], hi = cuts[k + 1];
    const double mid = 0.5 * (lo + hi);
    const double mu = hi - lo;
    AtomicPlayer p;
    p.measure = mu;
    p.base_set = inst.feasible_at(mid);
    p.strategy_set = p.base_set.scaled(mu);
    p.utility = inst.utility_at(mid).scaled(mu);
    p.pieces = {{lo, hi}};
    players.push_back(std::move(p));
  }

  AasElement element{nu, AtomicInstance(std::move(players), inst.costs(), inst.radius()),
                     {}, 0.0, 0.0, 0.0};
  compute_metrics(element, inst, opts);
  return element;
}

namespace detail {

// Locates all crossings of f with the level within [lo, hi] by a scan plus
// bisection; f is continuous there.
template <typename F>
void add_crossings(const F& f, double level, double lo, double hi,
                   std::vector<double>& out) {
  constexpr int kScan = 512;
  double prev_theta = lo;
  double prev_sign = f(lo) - level;
  for (int g = 1; g <= kScan; ++g) {
    const double th = lo + (hi - lo) * static_cast<double>(g) / kScan;
    const double sign = f(th) - level;
    if ((prev_sign < 0.0) != (sign < 0.0)) {
      double a = prev_theta, b = th;
      for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (a + b);
        if ((f(m) - level < 0.0) == (prev_sign < 0.0))
          a = m;
        else
          b = m;
      }
      out.push_back(0.5 * (a + b));
    }
    prev_theta = th;
    prev_sign = sign;
  }
}

}  // namespace detail

/// Meshgrid construction for polytope instances {x : A x <= b_theta} with
/// utility parameters s_theta: classes are preimages of the uniform nu-mesh
/// over the joint (b, s) range (dimensions with constant value collapse).
/// A uniform theta split is added whenever some class keeps measure > 1/nu.
/// Class sets use the averaged right-hand side, class utilities the averaged
/// utility parameters.
inline AasElement build_meshgrid_aas(const NonatomicInstance& inst, int nu,
                                     const MetricsOptions& opts = {}) {
  if (nu < 1) throw std::invalid_argument("nu must be >= 1");
  const auto& segments = inst.segments();
  const auto* first = std::get_if<PolySegmentSets>(&segments.front().sets);
  if (!first) throw std::invalid_argument("meshgrid needs polytope strategy sets");
  const Mat& A = first->A;
  const auto kind = segments.front().utility.kind;
  for (const Segment& s : segments) {
    const auto* poly = std::get_if<PolySegmentSets>(&s.sets);
    if (!poly || poly->A.rows() != A.rows() || !poly->A.isApprox(A, 1e-12))
      throw std::invalid_argument("meshgrid needs one shared constraint matrix");
    if (s.utility.kind != kind)
      throw std::invalid_argument("meshgrid needs one utility kind");
  }

  // parameter evaluators: the b rows, then the utility parameters
  const Eigen::Index num_b = static_cast<Eigen::Index>(first->b.size());
  const Eigen::Index num_s = inst.utility_params_at(
      0.5 * (segments.front().lo + segments.front().hi)).size();
  const Eigen::Index dims = num_b + num_s;
  auto param = [&](Eigen::Index d, double th) -> double {
    if (d < num_b) {
      const auto& poly = std::get<PolySegmentSets>(inst.segment_at(th).sets);
      return poly.b[static_cast<std::size_t>(d)].eval(th);
    }
    return inst.utility_params_at(th)[d - num_b];
  };

  // global ranges per dimension
  Vec lo_d = Vec::Constant(dims, std::numeric_limits<double>::infinity());
  Vec hi_d = Vec::Constant(dims, -std::numeric_limits<double>::infinity());
  for (const Segment& s : segments) {
    for (Eigen::Index d = 0; d < dims; ++d) {
      for (int g = 0; g <= 256; ++g) {
        const double v = param(d, NonatomicInstance::sample_theta(s, g, 256));
        if (!std::isfinite(v)) throw DomainError("unbounded meshgrid parameter");
        lo_d[d] = std::min(lo_d[d], v);
        hi_d[d] = std::max(hi_d[d], v);
      }
    }
  }

  // breakpoints: segment edges plus every crossing of a varying parameter
  // with a mesh cut, refined by bisection
  std::vector<double> edges;
  for (const Segment& s : segments) {
    edges.push_back(s.lo);
    edges.push_back(s.hi);
    for (Eigen::Index d = 0; d < dims; ++d) {
      if (hi_d[d] - lo_d[d] <= 1e-12) continue;
      for (int n = 1; n < nu; ++n) {
        const double level = lo_d[d] + (hi_d[d] - lo_d[d]) * static_cast<double>(n) / nu;
        detail::add_crossings([&](double th) { return param(d, th); }, level, s.lo,
                              s.hi - 1e-12, edges);
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-11; }),
              edges.end());

  // assign each elementary interval to its mesh cell
  auto cell_of = [&](double th) {
    std::vector<int> cell(static_cast<std::size_t>(dims), 0);
    for (Eigen::Index d = 0; d < dims; ++d) {
      if (hi_d[d] - lo_d[d] <= 1e-12) continue;
      const double step = (hi_d[d] - lo_d[d]) / nu;
      int n = static_cast<int>(std::floor((param(d, th) - lo_d[d]) / step));
      cell[static_cast<std::size_t>(d)] = std::clamp(n, 0, nu - 1);
    }
    return cell;
  };
  std::map<std::vector<int>, std::vector<std::pair<double, double>>> classes;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double lo = edges[k], hi = edges[k + 1];
    if (hi - lo < 1e-12) continue;
    classes[cell_of(0.5 * (lo + hi))].push_back({lo, hi});
  }

  // Remark fallback: split along theta if some class stays too heavy
  double max_measure = 0.0;
  for (const auto& [cell, pieces] : classes) {
    double mu = 0.0;
    for (const auto& [lo, hi] : pieces) mu += hi - lo;
    max_measure = std::max(max_measure, mu);
  }
  if (max_measure > 1.0 / nu + 1e-12) {
    std::map<std::vector<int>, std::vector<std::pair<double, double>>> split;
    for (const auto& [cell, pieces] : classes) {
      for (const auto& [lo, hi] : pieces) {
        int k0 = static_cast<int>(std::floor(lo * nu));
        for (int k = k0; k < nu; ++k) {
          const double a = std::max(lo, static_cast<double>(k) / nu);
          const double b = std::min(hi, static_cast<double>(k + 1) / nu);
          if (b - a < 1e-12) continue;
          std::vector<int> key = cell;
          key.push_back(k);
          split[key].push_back({a, b});
          if (b >= hi) break;
        }
      }
    }
    classes = std::move(split);
  }

  std::vector<AtomicPlayer> players;
  for (const auto& [cell, pieces] : classes) {
    double mu = 0.0;
    for (const auto& [lo, hi] : pieces) mu += hi - lo;
    if (mu <= 1e-12) continue;

    Vec b_avg = Vec::Zero(num_b);
    Vec s_avg = Vec::Zero(num_s);
    for (const auto& [lo, hi] : pieces) {
      for (Eigen::Index d = 0; d < num_b; ++d)
        b_avg[d] += adaptive_simpson([&](double th) { return param(d, th); }, lo, hi);
      for (Eigen::Index d = 0; d < num_s; ++d)
        s_avg[d] +=
            adaptive_simpson([&](double th) { return param(num_b + d, th); }, lo, hi);
    }
    s_avg /= mu;

    AtomicPlayer p;
    p.measure = mu;
    p.strategy_set = FeasibleSet::polytope(A, b_avg);
    p.base_set = FeasibleSet::polytope(A, b_avg / mu);
    switch (kind) {
      case UtilitySpec::Kind::None:
        p.utility = UtilitySpec::none();
        break;
      case UtilitySpec::Kind::QuadPref:
        p.utility = UtilitySpec::quad_pref(s_avg[0], s_avg.tail(num_s - 1)).scaled(mu);
        break;
      case UtilitySpec::Kind::LogBenefit:
        p.utility = UtilitySpec::log_benefit(s_avg[0]).scaled(mu);
        break;
    }
    p.pieces = pieces;
    players.push_back(std::move(p));
  }

  AasElement element{nu, AtomicInstance(std::move(players), inst.costs(), inst.radius()),
                     {}, 0.0, 0.0, 0.0};
  compute_metrics(element, inst, opts);
  return element;
}

/// Outcome of checking an increasing sequence of elements against the
/// vanishing-metric requirements of an approximating sequence.
struct VanishReport {
  bool ok = true;
  std::string message;
};

/// Asserts I^(nu) strictly increasing and mu_bar, delta_bar, d_bar
/// nonincreasing (5% slack per step), with the final value below half the
/// first whenever the nu ratio is at least 4.
inline VanishReport metrics_vanish_check(const std::vector<AasElement>& elements) {
  if (elements.size() < 3)
    throw std::invalid_argument("vanish check needs at least 3 elements");
  for (std::size_t k = 1; k < elements.size(); ++k)
    if (elements[k].nu <= elements[k - 1].nu)
      throw std::invalid_argument("vanish check needs strictly increasing nu");

  VanishReport report;
  auto fail = [&](const std::string& what) {
    report.ok = false;
    if (!report.message.empty()) report.message += "; ";
    report.message += what;
  };

  for (std::size_t k = 1; k < elements.size(); ++k)
    if (elements[k].game.num_players() <= elements[k - 1].game.num_players())
      fail("player count not strictly increasing at nu=" + std::to_string(elements[k].nu));

  const char* names[3] = {"mu_bar", "delta_bar", "d_bar"};
  auto metric = [](const AasElement& e, int m) {
    return m == 0 ? e.mu_bar : (m == 1 ? e.delta_bar : e.d_bar);
  };
  for (int m = 0; m < 3; ++m) {
    for (std::size_t k = 1; k < elements.size(); ++k) {
      if (metric(elements[k], m) > 1.05 * metric(elements[k - 1], m) + 1e-15)
        fail(std::string(names[m]) + " increased at nu=" + std::to_string(elements[k].nu));
    }
    const double first = metric(elements.front(), m);
    const double last = metric(elements.back(), m);
    if (elements.back().nu >= 4 * elements.front().nu) {
      const bool halved = first <= 1e-15 ? last <= 1e-15 : last < 0.5 * first;
      if (!halved) fail(std::string(names[m]) + " did not halve across the sequence");
    }
  }
  return report;
}

/// Sampled support-function estimate of the Hausdorff distance between the
/// atomic aggregate set (Minkowski sum of class sets) and the nonatomic
/// aggregate set (integral of X_theta). Checks the aggregation bound
/// estimate <= delta_bar + 1e-6 and returns the estimate.
inline double minkowski_sum_distance_check(const AasElement& element,
                                           const NonatomicInstance& inst,
                                           int num_directions, std::mt19937_64& rng) {
  const Eigen::Index dim = inst.num_links();
  double estimate = 0.0;
  for (int k = 0; k < num_directions; ++k) {
    const Vec u = random_unit_vector(dim, rng);
    double atomic_support = 0.0;
    for (const AtomicPlayer& p : element.game.players())
      atomic_support += p.strategy_set.support_value(u);
    double nonatomic_support = 0.0;
    for (const Segment& s : inst.segments())
      nonatomic_support += adaptive_simpson(
          [&](double th) { return inst.feasible_at(th).support_value(u); }, s.lo, s.hi,
          1e-9);
    estimate = std::max(estimate, std::abs(atomic_support - nonatomic_support));
  }
  if (estimate > element.delta_bar + 1e-6)
    throw DomainError("aggregated-set gap " + std::to_string(estimate) +
                      " exceeds delta_bar " + std::to_string(element.delta_bar));
  return estimate;
}

/// Samples vertices of every class set and checks the player-norm bound
/// |x_i| <= mu_i (M + delta_i).
inline void check_player_norm_bound(const AasElement& element) {
  const double radius = element.game.radius();
  for (Eigen::Index i = 0; i < element.game.num_players(); ++i) {
    const AtomicPlayer& p = element.game.players()[static_cast<std::size_t>(i)];
    const double bound =
        p.measure * (radius + element.per_class[static_cast<std::size_t>(i)].set_gap);
    for (const Vec& v : p.strategy_set.vertices())
      if (v.norm() > bound + 1e-9)
        throw DomainError("player " + std::to_string(i) + " vertex norm " +
                          std::to_string(v.norm()) + " exceeds bound " +
                          std::to_string(bound));
  }
}

}  // namespace wardrop
