#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "wardrop/instance.hpp"

namespace wardrop {

/// Per-link latencies c_t(X_t) at an aggregate load. Loads must stay within
/// [0, cap] for each link (up to a small slack).
inline Vec eval_network_cost(const std::vector<CostFunction>& costs, const Vec& aggregate) {
  if (aggregate.size() != static_cast<Eigen::Index>(costs.size()))
    throw std::invalid_argument("aggregate size does not match link count");
  Vec out(aggregate.size());
  for (Eigen::Index t = 0; t < aggregate.size(); ++t) {
    const CostFunction& c = costs[static_cast<std::size_t>(t)];
    const double slack = 1e-9 * std::max(1.0, c.domain_cap());
    if (aggregate[t] < -slack || aggregate[t] > c.domain_cap() + slack)
      throw DomainError("aggregate load " + std::to_string(aggregate[t]) + " on link " +
                        std::to_string(t) + " outside [0, " +
                        std::to_string(c.domain_cap()) + "]");
    out[t] = c.value(aggregate[t]);
  }
  return out;
}

/// Player i's cost: sum_t x_{i,t} c_t(X_t) - u_i(x_i).
inline double player_cost(const AtomicInstance& game, const Profile& profile,
                          Eigen::Index i) {
  const AtomicPlayer& p = game.player(i);
  const Vec latencies = eval_network_cost(game.costs(), profile.aggregate);
  const Vec x = profile.player(i);
  return x.dot(latencies) - p.utility.value(x);
}

/// Gradient of player i's cost in her own loads:
/// (c_t(X_t) + x_{i,t} c_t'(X_t))_t - grad u_i(x_i).
inline Vec player_cost_gradient(const AtomicInstance& game, const Profile& profile,
                                Eigen::Index i) {
  const AtomicPlayer& p = game.player(i);
  const Vec x = profile.player(i);
  Vec g(game.num_links());
  for (Eigen::Index t = 0; t < g.size(); ++t) {
    const CostFunction& c = game.costs()[static_cast<std::size_t>(t)];
    const double load = profile.aggregate[t];
    g[t] = c.value(load) + x[t] * c.derivative(load);
  }
  return g - p.utility.gradient(x);
}

/// Equilibrium gap of an atomic profile: the largest amount by which some
/// player's first-order optimality condition fails,
///   max_i [ <g_i, x_i> - min_{z in X_i} <g_i, z> ],
/// with the inner minimization solved exactly. Zero (up to tolerance) exactly
/// at Nash equilibria.
inline double ne_vi_residual(const AtomicInstance& game, const Profile& profile) {
  double residual = 0.0;
  for (Eigen::Index i = 0; i < game.num_players(); ++i) {
    const Vec g = player_cost_gradient(game, profile, i);
    const Vec x = profile.player(i);
    const Vec z = game.player(i).strategy_set.linear_minimizer(g);
    residual = std::max(residual, g.dot(x - z));
  }
  return residual;
}

/// Equilibrium gap of a disaggregated profile against the continuum game.
/// Each profile cell is intersected with the instance segments and probed at
/// `grid_per_cell` interior points theta; the per-theta gap is
/// <c(X) - grad u_theta(x_theta), x_theta - z> minimized exactly over
/// X_theta, after projecting the cell value onto X_theta.
inline double we_vi_residual(const NonatomicInstance& inst, const PiecewiseProfile& profile,
                             int grid_per_cell = 4) {
  const Vec latencies = eval_network_cost(inst.costs(), profile.aggregate());
  double residual = 0.0;
  std::vector<double> cuts = inst.discontinuities();
  for (const auto& cell : profile.cells()) {
    std::vector<double> edges = {cell.lo, cell.hi};
    for (double c : cuts)
      if (c > cell.lo + 1e-15 && c < cell.hi - 1e-15) edges.push_back(c);
    std::sort(edges.begin(), edges.end());
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
      for (int g = 0; g < grid_per_cell; ++g) {
        const double theta =
            edges[k] + (edges[k + 1] - edges[k]) * (g + 0.5) / grid_per_cell;
        const FeasibleSet set = inst.feasible_at(theta);
        const Vec x = set.project(cell.value);
        const Vec f = latencies - inst.utility_at(theta).gradient(x);
        const Vec z = set.linear_minimizer(f);
        residual = std::max(residual, f.dot(x - z));
      }
    }
  }
  return residual;
}

}  // namespace wardrop
