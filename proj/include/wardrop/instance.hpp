#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wardrop/cost.hpp"
#include "wardrop/feasible_set.hpp"
#include "wardrop/numerics.hpp"
#include "wardrop/param_fn.hpp"
#include "wardrop/utility.hpp"

namespace wardrop {

/// Closed-form description of the utility over a player segment.
struct UtilityDescriptor {
  UtilitySpec::Kind kind = UtilitySpec::Kind::None;
  ParamFn weight = ParamFn::constant(0.0);
  std::vector<ParamFn> preferred;  // per link; entries may reference the demand
};

/// Box-simplex strategy sets: sum x = E_theta, lower <= x <= upper.
/// Empty bound lists default to lower = 0 and upper = E_theta.
struct BoxSegmentSets {
  ParamFn demand = ParamFn::constant(0.0);
  std::vector<ParamFn> lower;
  std::vector<ParamFn> upper;
};

/// Polytope strategy sets {x : A x <= b_theta} with a fixed matrix A.
struct PolySegmentSets {
  Mat A;
  std::vector<ParamFn> b;
};

struct Segment {
  double lo = 0.0;
  double hi = 1.0;
  std::variant<BoxSegmentSets, PolySegmentSets> sets;
  UtilityDescriptor utility;
};

/// A population game over theta in [0,1]: shared link costs, piecewise
/// continuous per-player strategy sets and utilities.
class NonatomicInstance {
 public:
  NonatomicInstance(std::vector<CostFunction> costs, std::vector<Segment> segments,
                    std::optional<double> radius_override = std::nullopt)
      : costs_(std::move(costs)), segments_(std::move(segments)) {
    if (costs_.empty()) throw std::invalid_argument("instance needs at least one link");
    if (segments_.empty()) throw std::invalid_argument("instance needs at least one segment");
    std::sort(segments_.begin(), segments_.end(),
              [](const Segment& a, const Segment& b) { return a.lo < b.lo; });
    check_partition();
    set_aggregate_caps();
    radius_ = radius_override ? *radius_override : compute_radius();
  }

  Eigen::Index num_links() const { return static_cast<Eigen::Index>(costs_.size()); }
  const std::vector<CostFunction>& costs() const { return costs_; }
  const std::vector<Segment>& segments() const { return segments_; }

  /// Uniform strategy-set radius M: every X_theta lies in the ball B_0(M).
  double radius() const { return radius_; }

  /// Interior segment boundaries (possible parameter discontinuities).
  std::vector<double> discontinuities() const {
    std::vector<double> cuts;
    for (std::size_t k = 1; k < segments_.size(); ++k) cuts.push_back(segments_[k].lo);
    return cuts;
  }

  const Segment& segment_at(double theta) const {
    for (std::size_t k = segments_.size(); k-- > 0;)
      if (theta >= segments_[k].lo - 1e-15) return segments_[k];
    return segments_.front();
  }

  bool all_box() const {
    return std::all_of(segments_.begin(), segments_.end(), [](const Segment& s) {
      return std::holds_alternative<BoxSegmentSets>(s.sets);
    });
  }

  bool has_utilities() const {
    return std::any_of(segments_.begin(), segments_.end(), [](const Segment& s) {
      return s.utility.kind != UtilitySpec::Kind::None;
    });
  }

  double demand_at(double theta) const {
    const Segment& s = segment_at(theta);
    const auto* box = std::get_if<BoxSegmentSets>(&s.sets);
    if (!box) throw std::logic_error("demand is only defined for box-simplex segments");
    return box->demand.eval(theta);
  }

  FeasibleSet feasible_at(double theta) const {
    const Segment& s = segment_at(theta);
    if (const auto* box = std::get_if<BoxSegmentSets>(&s.sets)) {
      const Eigen::Index n = num_links();
      const double demand = box->demand.eval(theta);
      Vec lower = Vec::Zero(n);
      Vec upper = Vec::Constant(n, demand);
      for (Eigen::Index t = 0; t < n; ++t) {
        if (!box->lower.empty())
          lower[t] = box->lower[static_cast<std::size_t>(t)].eval(theta, demand);
        if (!box->upper.empty())
          upper[t] = box->upper[static_cast<std::size_t>(t)].eval(theta, demand);
      }
      return FeasibleSet::box_simplex(demand, std::move(lower), std::move(upper));
    }
    const auto& poly = std::get<PolySegmentSets>(s.sets);
    Vec b(static_cast<Eigen::Index>(poly.b.size()));
    for (Eigen::Index k = 0; k < b.size(); ++k)
      b[k] = poly.b[static_cast<std::size_t>(k)].eval(theta);
    return FeasibleSet::polytope(poly.A, std::move(b));
  }

  UtilitySpec utility_at(double theta) const {
    const Segment& s = segment_at(theta);
    return make_utility(s, theta);
  }

  /// Utility parameter vector s_theta of the segment (weight, then preferred
  /// components), used as meshgrid dimensions.
  Vec utility_params_at(double theta) const {
    const Segment& s = segment_at(theta);
    if (s.utility.kind == UtilitySpec::Kind::None) return Vec(0);
    const double demand = std::holds_alternative<BoxSegmentSets>(s.sets)
                              ? std::get<BoxSegmentSets>(s.sets).demand.eval(theta)
                              : std::nan("");
    Vec p(1 + static_cast<Eigen::Index>(s.utility.preferred.size()));
    p[0] = s.utility.weight.eval(theta, demand);
    for (std::size_t t = 0; t < s.utility.preferred.size(); ++t)
      p[static_cast<Eigen::Index>(t) + 1] = s.utility.preferred[t].eval(theta, demand);
    return p;
  }

  /// Per-link aggregate load caps: sup over theta of the per-player upper
  /// bound of the link. The aggregate of the nonatomic game and of every
  /// approximating atomic game is a sub-probability mixture of per-player
  /// bounds, so it stays below this cap. Cost shape constants (Lipschitz,
  /// strong monotonicity) are reported on [0, cap].
  const Vec& aggregate_caps() const { return caps_; }

  /// Integral of the demand over [0,1] (box segments only).
  double total_demand() const {
    double total = 0.0;
    for (const Segment& s : segments_) {
      const auto* box = std::get_if<BoxSegmentSets>(&s.sets);
      if (!box) throw std::logic_error("total demand needs box-simplex segments");
      total += adaptive_simpson([&](double th) { return box->demand.eval(th); }, s.lo, s.hi);
    }
    return total;
  }

  /// Sample-checks the structural invariants: nonempty nonnegative sets inside
  /// the ball of radius M, valid cost shapes on the aggregate caps.
  void validate(int grid_per_segment = 33) const {
    for (const CostFunction& c : costs_) c.validate();
    for (const Segment& s : segments_) {
      for (int g = 0; g <= grid_per_segment; ++g) {
        const double theta = sample_theta(s, g, grid_per_segment);
        const FeasibleSet set = feasible_at(theta);  // throws if empty
        if (set.is_box_simplex() && (set.lower().array() < -1e-12).any())
          throw DomainError("negative lower bound at theta=" + std::to_string(theta));
        if (s.utility.kind == UtilitySpec::Kind::QuadPref &&
            utility_params_at(theta)[0] < -1e-12)
          throw DomainError("negative preference weight at theta=" + std::to_string(theta));
      }
    }
  }

  static double sample_theta(const Segment& s, int g, int grid) {
    const double w = s.hi - s.lo;
    double theta = s.lo + w * static_cast<double>(g) / grid;
    // stay inside the half-open class so segment lookup is unambiguous
    if (g == grid) theta = s.hi - 1e-12 * std::max(1.0, std::abs(s.hi));
    return theta;
  }

 private:
  UtilitySpec make_utility(const Segment& s, double theta) const {
    switch (s.utility.kind) {
      case UtilitySpec::Kind::None:
        return UtilitySpec::none();
      case UtilitySpec::Kind::QuadPref: {
        const double demand = std::holds_alternative<BoxSegmentSets>(s.sets)
                                  ? std::get<BoxSegmentSets>(s.sets).demand.eval(theta)
                                  : std::nan("");
        const double w = s.utility.weight.eval(theta, demand);
        Vec y(num_links());
        if (s.utility.preferred.size() != static_cast<std::size_t>(num_links()))
          throw std::invalid_argument("preferred profile needs one entry per link");
        for (Eigen::Index t = 0; t < y.size(); ++t)
          y[t] = s.utility.preferred[static_cast<std::size_t>(t)].eval(theta, demand);
        return UtilitySpec::quad_pref(w, std::move(y));
      }
      case UtilitySpec::Kind::LogBenefit:
        return UtilitySpec::log_benefit(s.utility.weight.eval(theta));
    }
    return UtilitySpec::none();
  }

  void check_partition() const {
    if (std::abs(segments_.front().lo) > 1e-12)
      throw std::invalid_argument("segments must start at 0");
    if (std::abs(segments_.back().hi - 1.0) > 1e-12)
      throw std::invalid_argument("segments must end at 1");
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      if (!(segments_[k].hi > segments_[k].lo))
        throw std::invalid_argument("empty segment interval");
      if (k > 0 && std::abs(segments_[k].lo - segments_[k - 1].hi) > 1e-12)
        throw std::invalid_argument("segments must partition [0,1]");
    }
  }

  void set_aggregate_caps() {
    const Eigen::Index n = num_links();
    caps_ = Vec::Zero(n);
    for (const Segment& s : segments_) {
      for (Eigen::Index t = 0; t < n; ++t) {
        double cap_t = 0.0;
        if (const auto* box = std::get_if<BoxSegmentSets>(&s.sets)) {
          const auto demand_range = box->demand.range_on(s.lo, s.hi);
          if (box->upper.empty()) {
            cap_t = demand_range.second;
          } else {
            const ParamFn& up = box->upper[static_cast<std::size_t>(t)];
            if (up.references_demand()) {
              const double sc = up.constant_value();
              cap_t = sc >= 0.0 ? sc * demand_range.second : sc * demand_range.first;
            } else {
              cap_t = up.range_on(s.lo, s.hi).second;
            }
          }
        } else {
          // per-link upper bound of a polytope via its sampled support function
          for (int g = 0; g <= 128; ++g) {
            Vec e = Vec::Zero(n);
            e[t] = 1.0;
            cap_t = std::max(cap_t, feasible_at(sample_theta(s, g, 128)).support_value(e));
          }
          cap_t *= 1.0 + 1e-6;
        }
        caps_[t] = std::max(caps_[t], cap_t);
      }
    }
    for (Eigen::Index t = 0; t < n; ++t)
      costs_[static_cast<std::size_t>(t)].set_domain_cap(caps_[t]);
  }

  double compute_radius() const {
    double m = 0.0;
    for (const Segment& s : segments_) {
      if (const auto* box = std::get_if<BoxSegmentSets>(&s.sets)) {
        if (box->lower.empty() && box->upper.empty()) {
          // plain simplex: ||x||_2 <= sum x = E, attained at a vertex
          m = std::max(m, box->demand.range_on(s.lo, s.hi).second);
          continue;
        }
      }
      for (int g = 0; g <= 128; ++g)
        m = std::max(m, feasible_at(sample_theta(s, g, 128)).radius());
    }
    return m;
  }

  std::vector<CostFunction> costs_;
  std::vector<Segment> segments_;
  Vec caps_;
  double radius_ = 0.0;
};

/// One atomic player: a measure-mu class with its own strategy set and
/// utility. `base_set` is the unscaled set (1/mu) * strategy_set, kept exactly
/// so discretization metrics do not accumulate scaling error. `pieces` is the
/// class as a union of theta intervals (a single interval for uniform splits).
struct AtomicPlayer {
  double measure = 1.0;
  FeasibleSet strategy_set;
  UtilitySpec utility;
  FeasibleSet base_set;
  std::vector<std::pair<double, double>> pieces;
};

/// Finite splittable game: players share the link costs.
class AtomicInstance {
 public:
  AtomicInstance(std::vector<AtomicPlayer> players, std::vector<CostFunction> costs,
                 double radius)
      : players_(std::move(players)), costs_(std::move(costs)), radius_(radius) {
    if (players_.empty()) throw std::invalid_argument("atomic game needs players");
    // per-link aggregate caps: sum of the players' largest loads on the link
    const Eigen::Index n = num_links();
    caps_ = Vec::Zero(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      Vec e = Vec::Zero(n);
      e[t] = 1.0;
      for (const AtomicPlayer& p : players_) caps_[t] += p.strategy_set.support_value(e);
      costs_[static_cast<std::size_t>(t)].set_domain_cap(std::max(caps_[t], 0.0));
    }
  }

  Eigen::Index num_players() const { return static_cast<Eigen::Index>(players_.size()); }
  Eigen::Index num_links() const { return static_cast<Eigen::Index>(costs_.size()); }
  const std::vector<AtomicPlayer>& players() const { return players_; }
  const AtomicPlayer& player(Eigen::Index i) const {
    if (i < 0 || i >= num_players()) throw std::out_of_range("player index");
    return players_[static_cast<std::size_t>(i)];
  }
  const std::vector<CostFunction>& costs() const { return costs_; }
  double radius() const { return radius_; }
  const Vec& aggregate_caps() const { return caps_; }

 private:
  std::vector<AtomicPlayer> players_;
  std::vector<CostFunction> costs_;
  Vec caps_;
  double radius_ = 0.0;
};

/// Joint strategy profile of an atomic game: row i is player i's load vector.
struct Profile {
  Mat loads;      // I x T
  Vec aggregate;  // column sums

  static Profile from_loads(Mat loads) {
    Profile p;
    p.aggregate = loads.colwise().sum().transpose();
    p.loads = std::move(loads);
    return p;
  }

  Vec player(Eigen::Index i) const { return loads.row(i).transpose(); }
};

/// Piecewise-constant map [0,1] -> R^T (a disaggregated profile).
class PiecewiseProfile {
 public:
  struct Cell {
    double lo, hi;
    Vec value;
  };

  PiecewiseProfile() = default;
  explicit PiecewiseProfile(std::vector<Cell> cells) : cells_(std::move(cells)) {
    std::sort(cells_.begin(), cells_.end(),
              [](const Cell& a, const Cell& b) { return a.lo < b.lo; });
  }

  const std::vector<Cell>& cells() const { return cells_; }
  bool empty() const { return cells_.empty(); }

  const Vec& value_at(double theta) const {
    for (std::size_t k = cells_.size(); k-- > 0;)
      if (theta >= cells_[k].lo - 1e-15) return cells_[k].value;
    return cells_.front().value;
  }

  /// Integral of the map: the aggregate load profile.
  Vec aggregate() const {
    Vec agg = Vec::Zero(cells_.front().value.size());
    for (const Cell& c : cells_) agg += (c.hi - c.lo) * c.value;
    return agg;
  }

  std::vector<double> breakpoints() const {
    std::vector<double> bp;
    bp.push_back(cells_.front().lo);
    for (const Cell& c : cells_) bp.push_back(c.hi);
    return bp;
  }

 private:
  std::vector<Cell> cells_;
};

}  // namespace wardrop
