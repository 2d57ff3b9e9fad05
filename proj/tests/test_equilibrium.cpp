#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "test_instances.hpp"
#include "wardrop/analysis.hpp"
#include "wardrop/equilibrium.hpp"

using namespace wardrop;
using wardrop::testing::constant_instance;
using wardrop::testing::section4_instance;

namespace {

std::vector<CostFunction> section4_costs() {
  return {CostFunction::affine(1.0, 0.0), CostFunction::affine(2.0, 1.0)};
}

AtomicInstance two_player_half_demand() {
  AtomicPlayer p;
  p.measure = 0.5;
  p.strategy_set = FeasibleSet::box_simplex(0.5, Vec::Zero(2), Vec::Constant(2, 0.5));
  p.base_set = FeasibleSet::box_simplex(1.0, Vec::Zero(2), Vec::Ones(2));
  p.pieces = {{0.0, 0.5}};
  AtomicPlayer q = p;
  q.pieces = {{0.5, 1.0}};
  return AtomicInstance({p, q}, section4_costs(), 1.0);
}

}  // namespace

TEST_CASE("best response of the lone unit-demand player") {
  // minimize x^2 + (1-x)(1+2(1-x)) = 3x^2 - 5x + 3 on [0,1]: x = 5/6
  const FeasibleSet set = FeasibleSet::box_simplex(1.0, Vec::Zero(2), Vec::Ones(2));
  const Vec x = best_response(section4_costs(), Vec::Zero(2), set, UtilitySpec::none());
  CHECK(x[0] == Catch::Approx(5.0 / 6.0).margin(1e-12));
  CHECK(x[1] == Catch::Approx(1.0 / 6.0).margin(1e-12));
}

TEST_CASE("an overwhelming preference pins the best response to it") {
  Vec y(2);
  y << 0.3, 0.7;
  const FeasibleSet set = FeasibleSet::box_simplex(1.0, Vec::Zero(2), Vec::Ones(2));
  const Vec x =
      best_response(section4_costs(), Vec::Zero(2), set, UtilitySpec::quad_pref(1e6, y));
  CHECK((x - y).lpNorm<Eigen::Infinity>() <= 1e-3);
}

TEST_CASE("flat objectives return a zero-gap point") {
  std::vector<CostFunction> flat = {CostFunction::affine(0.0, 1.0),
                                    CostFunction::affine(0.0, 1.0)};
  const FeasibleSet set = FeasibleSet::box_simplex(1.0, Vec::Zero(2), Vec::Ones(2));
  const Vec x = best_response(flat, Vec::Zero(2), set, UtilitySpec::none());
  const Vec g = Vec::Ones(2);  // both latencies constant 1
  const Vec z = set.linear_minimizer(g);
  CHECK(g.dot(x - z) <= 1e-12);
}

TEST_CASE("projected-gradient path agrees with the exact quadratic path") {
  // polynomial kind forces the iterative path onto an affine-shaped cost
  std::vector<CostFunction> poly_costs = {CostFunction::polynomial({0.0, 1.0}),
                                          CostFunction::polynomial({1.0, 2.0})};
  for (auto& c : poly_costs) c.set_domain_cap(2.0);
  const FeasibleSet set = FeasibleSet::box_simplex(1.0, Vec::Zero(2), Vec::Ones(2));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 0.5);
  for (int rep = 0; rep < 10; ++rep) {
    Vec others(2);
    others << unif(rng), unif(rng);
    const Vec a = best_response(section4_costs(), others, set, UtilitySpec::none());
    const Vec b = best_response(poly_costs, others, set, UtilitySpec::none());
    CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("best response rejects a negative opponent aggregate") {
  const FeasibleSet set = FeasibleSet::box_simplex(1.0, Vec::Zero(2), Vec::Ones(2));
  CHECK_THROWS_AS(
      best_response(section4_costs(), Vec::Constant(2, -0.5), set, UtilitySpec::none()),
      std::invalid_argument);
}

TEST_CASE("best response beats random feasible points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-0.5, 1.5);
  Vec y(2);
  y << 0.1, 0.6;
  const UtilitySpec u = UtilitySpec::quad_pref(0.8, y);
  const FeasibleSet set = FeasibleSet::box_simplex(0.9, Vec::Zero(2), Vec::Constant(2, 0.7));
  Vec others(2);
  others << 0.4, 0.2;
  const auto costs = section4_costs();
  const Vec x = best_response(costs, others, set, u);
  auto objective = [&](const Vec& z) {
    double f = 0.0;
    for (Eigen::Index t = 0; t < 2; ++t)
      f += z[t] * costs[static_cast<std::size_t>(t)].value(others[t] + z[t]);
    return f - u.value(z);
  };
  const double fx = objective(x);
  for (int rep = 0; rep < 1000; ++rep) {
    Vec p(2);
    p << unif(rng), unif(rng);
    CHECK(fx <= objective(set.project(p)) + 1e-9);
  }
}

TEST_CASE("single-player dynamics terminate at once with zero gap") {
  AtomicPlayer p;
  p.measure = 1.0;
  p.strategy_set = FeasibleSet::box_simplex(1.0, Vec::Zero(2), Vec::Ones(2));
  p.base_set = p.strategy_set;
  p.pieces = {{0.0, 1.0}};
  const AtomicInstance game({p}, section4_costs(), 1.0);
  const EquilibriumResult r = solve_ne(game);
  CHECK(r.converged);
  CHECK(r.residual <= 1e-12);
  CHECK(r.sweeps <= 2);
  CHECK(r.profile.player(0)[0] == Catch::Approx(5.0 / 6.0).margin(1e-10));
}

TEST_CASE("symmetric two-player split lands on the symmetric equilibrium") {
  // stationarity of either half-demand player: 9x - 4 = 0, so each plays
  // (4/9, 1/18) and the aggregate is (8/9, 1/9)
  const AtomicInstance game = two_player_half_demand();
  SolverConfig cfg;
  cfg.kkt_tol = 1e-10;
  const EquilibriumResult r = solve_ne(game, cfg);
  REQUIRE(r.converged);
  CHECK((r.profile.player(0) - r.profile.player(1)).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK(r.profile.aggregate[0] == Catch::Approx(8.0 / 9.0).margin(1e-8));
  CHECK(r.profile.aggregate[1] == Catch::Approx(1.0 / 9.0).margin(1e-8));

  // the aggregate stays within the coarse-discretization bound of the
  // continuum aggregate (1, 0)
  Vec we(2);
  we << 1.0, 0.0;
  const double dist_sq = (r.profile.aggregate - we).squaredNorm();
  BoundInputs in;
  in.c_min = 1.0;
  in.lipschitz = 2.0;
  in.radius = 1.0;
  in.cost_norm = std::sqrt(1.0 + 9.0);
  in.mu_bar = 0.5;
  in.delta_bar = 0.0;
  CHECK(dist_sq <= bound_no_utility(in));
}

TEST_CASE("section-4 dynamics converge in a few sweeps at the working tolerance") {
  const NonatomicInstance inst = section4_instance();
  const AasElement e5 = build_uniform_aas(inst, 5);
  const EquilibriumResult r = solve_ne(e5.game);
  REQUIRE(r.converged);
  CHECK(r.residual <= 1e-3);
  CHECK(r.sweeps <= 300);
}

TEST_CASE("non-convergence is reported, not thrown") {
  const NonatomicInstance inst = section4_instance();
  const AasElement e = build_uniform_aas(inst, 5);
  SolverConfig cfg;
  cfg.kkt_tol = 1e-14;  // unreachable
  cfg.max_sweeps = 3;
  const EquilibriumResult r = solve_ne(e.game, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.sweeps == 3);
  CHECK(r.residual_history.size() == 3);
}

TEST_CASE("aggregate oracle equalizes latencies") {
  const NonatomicInstance unit = constant_instance(1.0);
  const Vec x = wardrop_aggregate_beckmann(unit);
  CHECK(x[0] == Catch::Approx(1.0).margin(1e-6));
  CHECK(x[1] == Catch::Approx(0.0).margin(1e-6));

  Segment seg;
  seg.lo = 0.0;
  seg.hi = 1.0;
  BoxSegmentSets sets;
  sets.demand = ParamFn::constant(1.0);
  seg.sets = sets;
  const NonatomicInstance identical(
      {CostFunction::affine(1.0, 0.0), CostFunction::affine(1.0, 0.0)}, {seg});
  const Vec y = wardrop_aggregate_beckmann(identical);
  CHECK(y[0] == Catch::Approx(0.5).margin(1e-9));
  CHECK(y[1] == Catch::Approx(0.5).margin(1e-9));

  const NonatomicInstance empty = constant_instance(0.0);
  const Vec z = wardrop_aggregate_beckmann(empty);
  CHECK(z.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("aggregate oracle satisfies the first-order certificate on vertices") {
  const NonatomicInstance inst = section4_instance(false);
  const Vec x = wardrop_aggregate_beckmann(inst);
  const Vec lat = eval_network_cost(inst.costs(), x);
  // rebuild the aggregate set to probe its vertices
  const double total = inst.total_demand();
  const FeasibleSet agg =
      FeasibleSet::box_simplex(total, Vec::Zero(2), Vec::Constant(2, total));
  for (const Vec& v : agg.vertices()) CHECK(lat.dot(v - x) >= -1e-8);
}

TEST_CASE("aggregate oracle refuses instances with utilities") {
  CHECK_THROWS_AS(wardrop_aggregate_beckmann(section4_instance(true)),
                  std::invalid_argument);
}

TEST_CASE("disaggregation rescales by the class measure") {
  const NonatomicInstance inst = constant_instance(1.0, 0.5);
  const AasElement e = build_uniform_aas(inst, 2);
  REQUIRE(e.game.num_players() == 2);
  SolverConfig cfg;
  cfg.kkt_tol = 1e-9;
  const EquilibriumResult r = solve_ne(e.game, cfg);
  REQUIRE(r.converged);
  const PiecewiseProfile d = disaggregate(r, e, inst);
  REQUIRE(d.cells().size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    const Vec expect = r.profile.player(static_cast<Eigen::Index>(k)) /
                       e.game.players()[k].measure;
    CHECK((d.cells()[k].value - expect).lpNorm<Eigen::Infinity>() <= 1e-12);
  }

  // measure-one class: disaggregation is the identity
  const AasElement e1 = build_uniform_aas(inst, 1);
  const EquilibriumResult r1 = solve_ne(e1.game, cfg);
  REQUIRE(r1.converged);
  const PiecewiseProfile d1 = disaggregate(r1, e1, inst);
  CHECK((d1.cells().front().value - r1.profile.player(0)).lpNorm<Eigen::Infinity>() <=
        1e-12);

  CHECK_THROWS_AS(disaggregate(EquilibriumResult{}, e, inst), std::invalid_argument);
}

TEST_CASE("fine-grid reference approaches the aggregate oracle") {
  const NonatomicInstance inst = section4_instance(false);
  const WardropReference ref = wardrop_reference(inst, 200, 1e-6);
  const Vec oracle = wardrop_aggregate_beckmann(inst);
  const AasElement& e = ref.element;
  const BoundInputs in = make_bound_inputs(inst, e);
  const double bound = bound_no_utility(in);
  CHECK((ref.profile.aggregate() - oracle).squaredNorm() <= bound);
  CHECK(ref.we_residual <= 0.05);  // discretization-level gap only
}

TEST_CASE("constant strongly-concave instances give a constant reference") {
  // identical classes share one best response at the fixed point; the spread
  // is pure solver slack
  const NonatomicInstance inst = constant_instance(1.0, 1.0);
  const WardropReference ref = wardrop_reference(inst, 50, 1e-8);
  const Vec first = ref.profile.cells().front().value;
  for (const auto& cell : ref.profile.cells())
    CHECK((cell.value - first).lpNorm<Eigen::Infinity>() <= 1e-4);
}

TEST_CASE("different initializations meet at the same aggregate") {
  const NonatomicInstance inst = section4_instance();
  for (int nu : {4, 12}) {
    const AasElement e = build_uniform_aas(inst, nu);
    SolverConfig a;
    a.init = InitKind::ZerosProjected;
    SolverConfig b;
    b.init = InitKind::Supplied;
    Mat extreme(e.game.num_players(), 2);
    for (Eigen::Index i = 0; i < e.game.num_players(); ++i) {
      Vec dir(2);
      dir << 0.0, -1.0;  // push everything onto the peak link
      extreme.row(i) = e.game.player(i).strategy_set.linear_minimizer(dir).transpose();
    }
    b.supplied_init = extreme;
    const EquilibriumResult ra = solve_ne(e.game, a);
    const EquilibriumResult rb = solve_ne(e.game, b);
    REQUIRE(ra.converged);
    REQUIRE(rb.converged);
    const double bound = bound_with_utility(make_bound_inputs(inst, e));
    CHECK((ra.profile.aggregate - rb.profile.aggregate).norm() <= 2.0 * std::sqrt(bound));
    // the two runs agree far more tightly than the bound requires
    CHECK((ra.profile.aggregate - rb.profile.aggregate).norm() <= 1e-4);
  }
}
