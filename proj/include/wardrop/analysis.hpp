#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "wardrop/aas.hpp"
#include "wardrop/equilibrium.hpp"
#include "wardrop/instance.hpp"

namespace wardrop {

/// Constants feeding the convergence bounds. All are reported on the realized
/// domain: cost constants on [0, aggregate cap], utility constants over the
/// classes of the element they were extracted from.
struct BoundInputs {
  double c_min = 0.0;       // min cost derivative
  double lipschitz = 0.0;   // max cost derivative (C)
  double radius = 0.0;      // strategy-set radius M
  double cost_norm = 0.0;   // B_c = |(c_t(cap_t))_t|_2
  double gamma = 0.0;       // utility gradient bound
  double alpha = 0.0;       // uniform strong-concavity modulus
  double mu_bar = 0.0;
  double delta_bar = 0.0;
  double d_bar = 0.0;
};

/// Extracts the bound constants: cost constants exactly (convexity pins the
/// derivative range), the strong-concavity modulus alpha as the minimum over a
/// fixed midpoint grid of 512 points per segment. Instances whose weight
/// function vanishes somewhere have continuum infimum 0; the grid modulus is
/// the effective constant the bounds are reported with, and it does not
/// depend on the element, so bounds decay with the discretization metrics.
inline BoundInputs make_bound_inputs(const NonatomicInstance& inst, const AasElement& element) {
  BoundInputs in;
  in.radius = inst.radius();
  in.mu_bar = element.mu_bar;
  in.delta_bar = element.delta_bar;
  in.d_bar = element.d_bar;

  double c_min = std::numeric_limits<double>::infinity();
  double c_max = 0.0, norm_sq = 0.0;
  for (const CostFunction& c : inst.costs()) {
    c_min = std::min(c_min, c.derivative_lower());
    c_max = std::max(c_max, c.derivative_upper());
    const double v = c.value(c.domain_cap());
    norm_sq += v * v;
  }
  in.c_min = c_min;
  in.lipschitz = c_max;
  in.cost_norm = std::sqrt(norm_sq);

  constexpr int kAlphaGrid = 512;
  double w_max = 0.0;
  double alpha = std::numeric_limits<double>::infinity();
  bool any_utility = false;
  UtilitySpec::Kind kind = UtilitySpec::Kind::None;
  for (const Segment& s : inst.segments()) {
    if (s.utility.kind == UtilitySpec::Kind::None) {
      alpha = 0.0;
      continue;
    }
    any_utility = true;
    kind = s.utility.kind;
    w_max = std::max(w_max, s.utility.weight.range_on(s.lo, s.hi).second);
    for (int g = 0; g < kAlphaGrid; ++g) {
      const double theta = s.lo + (s.hi - s.lo) * (g + 0.5) / kAlphaGrid;
      alpha = std::min(alpha, inst.utility_at(theta).strong_concavity());
    }
  }
  in.alpha = std::isfinite(alpha) ? alpha : 0.0;
  if (any_utility) {
    // gamma = 2 w_max * 2M for the quadratic preference; log benefit gradients
    // are bounded by w sqrt(T) on the orthant
    in.gamma = kind == UtilitySpec::Kind::QuadPref
                   ? 2.0 * w_max * 2.0 * in.radius
                   : w_max * std::sqrt(static_cast<double>(inst.num_links()));
  }
  return in;
}

/// Aggregate convergence bound (no utilities):
/// |X_hat - X*|^2 <= (2/c_min) (B_c delta_bar + C (M+1)^2 mu_bar).
inline double bound_no_utility(const BoundInputs& in) {
  if (!(in.c_min > 0.0))
    throw DomainError("aggregate bound needs strongly monotone costs (c_min > 0)");
  const double m1 = in.radius + 1.0;
  return 2.0 / in.c_min *
         (in.cost_norm * in.delta_bar + in.lipschitz * m1 * m1 * in.mu_bar);
}

/// Profile convergence bound (strongly concave utilities):
/// int |x_hat - x*|^2 <= (2/alpha) ((B_c+Gamma) delta_bar
///                                   + C (M+1)^2 mu_bar + M d_bar).
inline double bound_with_utility(const BoundInputs& in) {
  if (!(in.alpha > 0.0))
    throw DomainError("profile bound needs strongly concave utilities (alpha > 0)");
  const double m1 = in.radius + 1.0;
  return 2.0 / in.alpha *
         ((in.cost_norm + in.gamma) * in.delta_bar + in.lipschitz * m1 * m1 * in.mu_bar +
          in.radius * in.d_bar);
}

/// The constants the proof combination actually yields, surfaced next to the
/// statement-level bound: (1/alpha) ((1+2M)(B_c+Gamma) delta_bar
///                                    + 2C (M+1)^2 mu_bar + 2M d_bar).
inline double bound_with_utility_proof_form(const BoundInputs& in) {
  if (!(in.alpha > 0.0))
    throw DomainError("profile bound needs strongly concave utilities (alpha > 0)");
  const double m1 = in.radius + 1.0;
  return 1.0 / in.alpha *
         ((1.0 + 2.0 * in.radius) * (in.cost_norm + in.gamma) * in.delta_bar +
          2.0 * in.lipschitz * m1 * m1 * in.mu_bar + 2.0 * in.radius * in.d_bar);
}

/// Within-class spread bound of the Wardrop profile:
/// |x*_theta - x*_xi|^2 <= (2/alpha) (M d_i + (B_c+Gamma) delta_i).
inline double within_class_bound(const BoundInputs& in, const ClassMetrics& cls) {
  if (!(in.alpha > 0.0))
    throw DomainError("within-class bound needs strongly concave utilities (alpha > 0)");
  return 2.0 / in.alpha *
         (in.radius * cls.utility_gap + (in.cost_norm + in.gamma) * cls.set_gap);
}

/// Same bound with a class-local concavity modulus (used by the jump scan,
/// where a global modulus would wash out local structure).
inline double within_class_bound_local(double alpha_local, const BoundInputs& in,
                                       const ClassMetrics& cls) {
  if (!(alpha_local > 0.0)) return std::numeric_limits<double>::infinity();
  return 2.0 / alpha_local *
         (in.radius * cls.utility_gap + (in.cost_norm + in.gamma) * cls.set_gap);
}

/// Exact squared L2([0,1]) distance between two piecewise-constant profiles,
/// integrated over the common refinement of their breakpoints.
inline double profile_distance(const PiecewiseProfile& a, const PiecewiseProfile& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty profile");
  std::vector<double> edges = a.breakpoints();
  for (double e : b.breakpoints()) edges.push_back(e);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double x, double y) { return std::abs(x - y) < 1e-15; }),
              edges.end());
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double lo = edges[k], hi = edges[k + 1];
    if (hi - lo <= 0.0) continue;
    const double mid = 0.5 * (lo + hi);
    acc += (hi - lo) * (a.value_at(mid) - b.value_at(mid)).squaredNorm();
  }
  return acc;
}

struct ScanOptions {
  double factor = 5.0;       // jump threshold as a multiple of the local bound
  double floor_sq = 1e-6;    // absolute squared-jump floor (solver noise)
};

/// Locations where the reference profile jumps by more than `factor` times
/// the local within-class spread bound: discontinuity candidates of the
/// Wardrop profile. Classes with a vanishing local modulus never flag.
inline std::vector<double> continuity_scan(const NonatomicInstance& inst,
                                           const AasElement& element,
                                           const EquilibriumResult& ne,
                                           const ScanOptions& opts = {}) {
  const BoundInputs in = make_bound_inputs(inst, element);

  struct Piece {
    double lo, hi;
    Eigen::Index cls;
  };
  std::vector<Piece> pieces;
  for (Eigen::Index i = 0; i < element.game.num_players(); ++i)
    for (const auto& [lo, hi] : element.game.players()[static_cast<std::size_t>(i)].pieces)
      pieces.push_back({lo, hi, i});
  std::sort(pieces.begin(), pieces.end(),
            [](const Piece& x, const Piece& y) { return x.lo < y.lo; });

  auto local_bound = [&](Eigen::Index cls) {
    const AtomicPlayer& p = element.game.players()[static_cast<std::size_t>(cls)];
    const double alpha_local =
        p.utility.is_none() ? 0.0
                            : p.utility.scaled(1.0 / p.utility.scale()).strong_concavity();
    return within_class_bound_local(alpha_local, in,
                                    element.per_class[static_cast<std::size_t>(cls)]);
  };

  std::vector<double> jumps;
  for (std::size_t k = 0; k + 1 < pieces.size(); ++k) {
    const Eigen::Index a = pieces[k].cls, b = pieces[k + 1].cls;
    if (a == b) continue;
    const Vec va = ne.profile.player(a) / element.game.player(a).measure;
    const Vec vb = ne.profile.player(b) / element.game.player(b).measure;
    const double jump_sq = (vb - va).squaredNorm();
    const double threshold =
        std::max(opts.factor * std::max(local_bound(a), local_bound(b)), opts.floor_sq);
    if (jump_sq > threshold) jumps.push_back(pieces[k].hi);
  }
  return jumps;
}

/// Slack granted to the dominance checks for equilibria solved to kkt_tol
/// instead of exactly: 1e-6 + 2 * tol * (2M).
inline double dominance_slack(double kkt_tol, double radius) {
  return 1e-6 + 2.0 * kkt_tol * 2.0 * radius;
}

/// One per-nu record of an experiment run.
struct ReportRow {
  int nu = 0;
  long players = 0;
  double mu_bar = 0.0;
  double delta_bar = 0.0;
  double d_bar = 0.0;
  double agg_dist_sq = std::nan("");
  double profile_dist_sq = std::nan("");
  double bound_no_u = std::numeric_limits<double>::infinity();
  double bound_with_u = std::numeric_limits<double>::infinity();
  double residual = std::nan("");
  long sweeps = 0;
  double seconds = 0.0;
  // diagnostics outside the CSV schema
  bool converged = false;
  double bound_with_u_proof = std::numeric_limits<double>::infinity();
};

struct ConvergenceReport {
  std::vector<ReportRow> rows;
};

}  // namespace wardrop
