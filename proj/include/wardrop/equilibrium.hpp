#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "wardrop/aas.hpp"
#include "wardrop/game.hpp"
#include "wardrop/instance.hpp"
#include "wardrop/simplex.hpp"

namespace wardrop {

enum class InitKind { ZerosProjected, PreferredProfile, UniformSplit, Supplied };

struct SolverConfig {
  double kkt_tol = 1e-3;       // equilibrium gap at which the dynamics stop
  int max_sweeps = 10000;      // Gauss-Seidel sweeps over all players
  double br_inner_tol = 1e-10; // gradient-mapping norm for inner solves
  int br_max_iters = 200000;   // inner projected-gradient cap
  // The dynamics also keep sweeping until no player moves by more than this;
  // stopping at the first sweep under kkt_tol would leave a solver floor that
  // does not shrink with the discretization.
  double sweep_move_tol = 1e-7;
  InitKind init = InitKind::PreferredProfile;
  std::optional<Mat> supplied_init;

  void check() const {
    if (!(kkt_tol > 0.0) || !(br_inner_tol > 0.0))
      throw std::invalid_argument("solver tolerances must be > 0");
    if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
  }
};

struct EquilibriumResult {
  Profile profile;
  double residual = 0.0;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> residual_history;
};

/// argmin over X_i of sum_t x_t c_t(X_other_t + x_t) - u(x).
///
/// Affine costs with quadratic (or no) utility on a box simplex reduce to a
/// separable quadratic knapsack solved exactly; everything else runs projected
/// gradient with Armijo backtracking down to gradient-mapping norm
/// `inner_tol`.
inline Vec best_response(const std::vector<CostFunction>& costs, const Vec& others_aggregate,
                         const FeasibleSet& set, const UtilitySpec& utility,
                         double inner_tol = 1e-10, int max_iters = 200000,
                         const Vec* warm_start = nullptr) {
  const Eigen::Index n = others_aggregate.size();
  if ((others_aggregate.array() < -1e-9).any())
    throw std::invalid_argument("negative opponent aggregate");

  const bool affine = std::all_of(costs.begin(), costs.end(), [](const CostFunction& c) {
    return c.kind() == CostFunction::Kind::Affine;
  });
  const bool quad_utility = utility.kind() == UtilitySpec::Kind::None ||
                            utility.kind() == UtilitySpec::Kind::QuadPref;

  if (affine && quad_utility && set.is_box_simplex()) {
    // sum_t [ a_t x^2 + (a_t X_t + b_t) x ] + (w/s) |x - s y|^2
    Vec quad(n), lin(n);
    const double w_eff =
        utility.kind() == UtilitySpec::Kind::QuadPref ? utility.weight() / utility.scale()
                                                      : 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      const auto& coeffs = costs[static_cast<std::size_t>(t)].coefficients();
      const double slope = coeffs[1], intercept = coeffs[0];
      quad[t] = slope + w_eff;
      lin[t] = slope * others_aggregate[t] + intercept;
      if (utility.kind() == UtilitySpec::Kind::QuadPref)
        lin[t] -= 2.0 * utility.weight() * utility.preferred()[t];
    }
    if (quad.maxCoeff() <= 1e-15)  // flat objective: plain linear program
      return set.linear_minimizer(lin);
    return solve_quadratic_knapsack(quad, lin, set.total(), set.lower(), set.upper());
  }

  auto objective = [&](const Vec& x) {
    double f = 0.0;
    for (Eigen::Index t = 0; t < n; ++t)
      f += x[t] * costs[static_cast<std::size_t>(t)].value(others_aggregate[t] + x[t]);
    return f - utility.value(x);
  };
  auto gradient = [&](const Vec& x) -> Vec {
    Vec g(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      const auto& c = costs[static_cast<std::size_t>(t)];
      const double load = others_aggregate[t] + x[t];
      g[t] = c.value(load) + x[t] * c.derivative(load);
    }
    return g - utility.gradient(x);
  };

  Vec x = warm_start ? set.project(*warm_start) : set.project(Vec::Zero(n));
  double step = 1.0;
  for (int it = 0; it < max_iters; ++it) {
    const Vec g = gradient(x);
    const Vec mapped = set.project(x - g);
    if ((x - mapped).norm() <= inner_tol) return x;

    const double fx = objective(x);
    bool moved = false;
    double progress = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      const Vec cand = set.project(x - step * g);
      const Vec d = cand - x;
      if (objective(cand) <= fx + g.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-15) {
        progress = d.norm();
        x = cand;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    const bool stalled = !moved || progress <= 1e-15 * (1.0 + x.norm());
    if (stalled) {
      if ((x - mapped).norm() <= 1e-8) return x;  // numerical floor
      throw ConvergenceError("best response line search stalled", x, (x - mapped).norm());
    }
    step = std::min(step * 2.0, 1e6);
  }
  const Vec g = gradient(x);
  throw ConvergenceError("best response iteration cap exceeded", x,
                         (x - set.project(x - g)).norm());
}

namespace detail {

inline Mat initial_profile(const AtomicInstance& game, const SolverConfig& cfg) {
  const Eigen::Index players = game.num_players(), n = game.num_links();
  if (cfg.init == InitKind::Supplied) {
    if (!cfg.supplied_init || cfg.supplied_init->rows() != players ||
        cfg.supplied_init->cols() != n)
      throw std::invalid_argument("supplied init has wrong shape");
    Mat loads = *cfg.supplied_init;
    for (Eigen::Index i = 0; i < players; ++i)
      loads.row(i) = game.player(i).strategy_set.project(loads.row(i).transpose()).transpose();
    return loads;
  }
  Mat loads(players, n);
  for (Eigen::Index i = 0; i < players; ++i) {
    const AtomicPlayer& p = game.player(i);
    Vec target = Vec::Zero(n);
    const bool want_preferred = cfg.init == InitKind::PreferredProfile &&
                                p.utility.kind() == UtilitySpec::Kind::QuadPref;
    if (want_preferred) {
      target = p.utility.scale() * p.utility.preferred();
    } else if (cfg.init != InitKind::ZerosProjected) {
      // uniform split of the class's own scale across links
      Vec e = Vec::Ones(n);
      target = Vec::Constant(n, p.strategy_set.support_value(e) / static_cast<double>(n));
    }
    loads.row(i) = p.strategy_set.project(target).transpose();
  }
  return loads;
}

}  // namespace detail

/// Sequential (Gauss-Seidel) best-response dynamics, fixed ascending player
/// order, until the equilibrium gap drops below kkt_tol. Non-convergence is
/// reported in the result, never thrown.
inline EquilibriumResult solve_ne(const AtomicInstance& game, const SolverConfig& cfg = {}) {
  cfg.check();
  const Eigen::Index players = game.num_players();

  Mat loads = detail::initial_profile(game, cfg);
  Vec aggregate = loads.colwise().sum().transpose();

  EquilibriumResult result;
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (Eigen::Index i = 0; i < players; ++i) {
      const AtomicPlayer& p = game.player(i);
      const Vec x_old = loads.row(i).transpose();
      const Vec others = (aggregate - x_old).cwiseMax(0.0);
      const Vec x_new = best_response(game.costs(), others, p.strategy_set, p.utility,
                                      cfg.br_inner_tol, cfg.br_max_iters, &x_old);
      loads.row(i) = x_new.transpose();
      aggregate += x_new - x_old;
      max_move = std::max(max_move, (x_new - x_old).lpNorm<Eigen::Infinity>());
    }
    aggregate = loads.colwise().sum().transpose();  // kill incremental drift

    Profile profile = Profile::from_loads(loads);
    const double residual = ne_vi_residual(game, profile);
    result.residual_history.push_back(residual);
    result.sweeps = sweep;
    if (residual <= cfg.kkt_tol && max_move <= cfg.sweep_move_tol) {
      result.profile = std::move(profile);
      result.residual = residual;
      result.converged = true;
      return result;
    }
  }
  result.profile = Profile::from_loads(loads);
  result.residual = result.residual_history.empty() ? std::nan("") : result.residual_history.back();
  // the sweep cap can hit after the gap condition held but before the profile
  // settled; the equilibrium certificate is the residual alone
  result.converged = result.residual <= cfg.kkt_tol;
  return result;
}

/// Aggregate Wardrop load of a no-utility instance, via the equivalent convex
/// program: minimize Phi(X) = sum_t int_0^{X_t} c_t over the aggregate
/// feasibility set. Projected gradient with backtracking, certified by the
/// exact first-order gap <c(X), X - argmin_Z <c(X), Z>>.
inline Vec wardrop_aggregate_beckmann(const NonatomicInstance& inst, double gap_tol = 1e-13,
                                      int max_iters = 100000,
                                      std::string* warning = nullptr) {
  if (inst.has_utilities())
    throw std::invalid_argument("aggregate potential applies to no-utility instances");
  if (!inst.all_box())
    throw std::invalid_argument("aggregate potential needs box-simplex segments");
  for (const CostFunction& c : inst.costs())
    if (c.derivative_lower() <= 0.0 && warning)
      *warning = "costs are not strictly increasing; the aggregate may not be unique";

  const Eigen::Index n = inst.num_links();
  double total = 0.0;
  Vec lower = Vec::Zero(n), upper = Vec::Zero(n);
  for (const Segment& s : inst.segments()) {
    const auto& box = std::get<BoxSegmentSets>(s.sets);
    total += adaptive_simpson([&](double th) { return box.demand.eval(th); }, s.lo, s.hi);
    for (Eigen::Index t = 0; t < n; ++t) {
      auto bound_at = [&](const std::vector<ParamFn>& fns, double th, double fallback) {
        if (fns.empty()) return fallback;
        return fns[static_cast<std::size_t>(t)].eval(th, box.demand.eval(th));
      };
      lower[t] += adaptive_simpson(
          [&](double th) { return bound_at(box.lower, th, 0.0); }, s.lo, s.hi);
      upper[t] += adaptive_simpson(
          [&](double th) { return bound_at(box.upper, th, box.demand.eval(th)); }, s.lo,
          s.hi);
    }
  }
  const FeasibleSet aggregate_set = FeasibleSet::box_simplex(total, lower, upper);

  auto potential = [&](const Vec& x) {
    double phi = 0.0;
    for (Eigen::Index t = 0; t < n; ++t)
      phi += inst.costs()[static_cast<std::size_t>(t)].integral(x[t]);
    return phi;
  };

  Vec x = aggregate_set.project(Vec::Zero(n));
  double step = 1.0;
  for (int it = 0; it < max_iters; ++it) {
    const Vec g = eval_network_cost(inst.costs(), x);
    const double gap = g.dot(x - aggregate_set.linear_minimizer(g));
    if (gap <= gap_tol) return x;

    const double fx = potential(x);
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      const Vec cand = aggregate_set.project(x - step * g);
      const Vec d = cand - x;
      if (potential(cand) <= fx + g.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-15) {
        x = cand;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      if (gap <= 1e-8) return x;  // numerical floor, still certified loosely
      throw ConvergenceError("aggregate potential line search stalled", x, gap);
    }
    step = std::min(step * 2.0, 1e6);
  }
  const Vec g = eval_network_cost(inst.costs(), x);
  throw ConvergenceError("aggregate potential iteration cap exceeded", x,
                         g.dot(x - aggregate_set.linear_minimizer(g)));
}

/// Per-capita profile of an atomic equilibrium: x_theta = x_i / mu_i on each
/// class piece. Checks that disaggregated values sit within delta_i of the
/// local strategy sets.
inline PiecewiseProfile disaggregate(const EquilibriumResult& result,
                                     const AasElement& element,
                                     const NonatomicInstance& inst) {
  if (!result.converged)
    throw std::invalid_argument("disaggregation needs a converged equilibrium");
  std::vector<PiecewiseProfile::Cell> cells;
  for (Eigen::Index i = 0; i < element.game.num_players(); ++i) {
    const AtomicPlayer& p = element.game.players()[static_cast<std::size_t>(i)];
    const Vec value = result.profile.player(i) / p.measure;
    const double slack =
        element.per_class[static_cast<std::size_t>(i)].set_gap + 1e-6;
    for (const auto& [lo, hi] : p.pieces) {
      for (double th : detail::theta_grid(lo, hi, 3))
        if (distance_to(inst.feasible_at(th), value) > slack)
          throw DomainError("disaggregated value escapes X_theta at theta=" +
                            std::to_string(th));
      cells.push_back({lo, hi, value});
    }
  }
  return PiecewiseProfile(std::move(cells));
}

/// Fine-grid reference approximation of the Wardrop equilibrium.
struct WardropReference {
  AasElement element;
  EquilibriumResult ne;
  PiecewiseProfile profile;
  double we_residual = 0.0;
};

inline WardropReference wardrop_reference(const NonatomicInstance& inst, int nu_ref = 1000,
                                          double tol = 1e-5, int max_sweeps = 20000) {
  AasElement element = build_uniform_aas(inst, nu_ref);
  SolverConfig cfg;
  cfg.kkt_tol = tol;
  cfg.max_sweeps = max_sweeps;
  EquilibriumResult ne = solve_ne(element.game, cfg);
  if (!ne.converged)
    throw ConvergenceError("reference equilibrium did not converge",
                           ne.profile.aggregate, ne.residual);
  PiecewiseProfile profile = disaggregate(ne, element, inst);
  WardropReference ref{std::move(element), std::move(ne), std::move(profile), 0.0};
  ref.we_residual = we_vi_residual(inst, ref.profile);
  return ref;
}

}  // namespace wardrop
