#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "wardrop/feasible_set.hpp"
#include "wardrop/simplex.hpp"

using namespace wardrop;

namespace {

// Brute-force grid minimizer of |z - p|^2 over the box simplex (T = 2 or 3),
// independent of the breakpoint solver.
Vec grid_projection_oracle(const Vec& p, double total, const Vec& lower, const Vec& upper,
                           double step = 1e-4) {
  const Eigen::Index n = p.size();
  Vec best;
  double best_d = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vec& z) {
    const double d = (z - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = z;
    }
  };
  if (n == 2) {
    const double lo = std::max(lower[0], total - upper[1]);
    const double hi = std::min(upper[0], total - lower[1]);
    for (double x = lo; x <= hi + 1e-12; x += step) {
      Vec z(2);
      z << std::min(x, hi), total - std::min(x, hi);
      consider(z);
    }
  } else if (n == 3) {
    for (double x = lower[0]; x <= upper[0] + 1e-12; x += step) {
      const double lo2 = std::max(lower[1], total - x - upper[2]);
      const double hi2 = std::min(upper[1], total - x - lower[2]);
      for (double y = lo2; y <= hi2 + 1e-12; y += step) {
        Vec z(3);
        z << x, std::min(y, hi2), total - x - std::min(y, hi2);
        if (z[2] < lower[2] - 1e-9 || z[2] > upper[2] + 1e-9) continue;
        consider(z);
      }
    }
  }
  REQUIRE(best_d < std::numeric_limits<double>::infinity());
  return best;
}

// Recovers the KKT shift: z = clamp(p + shift) with the sum pinned. Returns
// the feasible shift interval [lo, hi]; empty means no valid shift exists.
std::pair<double, double> kkt_shift_interval(const Vec& p, const Vec& z, const Vec& lower,
                                             const Vec& upper) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < p.size(); ++t) {
    const double shift = z[t] - p[t];
    if (z[t] <= lower[t] + 1e-12) {
      hi = std::min(hi, shift);  // clamped from below: p + s <= lower
    } else if (z[t] >= upper[t] - 1e-12) {
      lo = std::max(lo, shift);  // clamped from above
    } else {
      lo = std::max(lo, shift - 1e-9);
      hi = std::min(hi, shift + 1e-9);
    }
  }
  return {lo, hi};
}

}  // namespace

TEST_CASE("box-simplex projection matches the stated examples") {
  Vec p(2), l2 = Vec::Zero(2), u2 = Vec::Ones(2);
  p << 0.8, 0.8;
  Vec z = project_box_simplex(p, 1.0, l2, u2);
  CHECK(z[0] == Catch::Approx(0.5).margin(1e-12));
  CHECK(z[1] == Catch::Approx(0.5).margin(1e-12));

  p << 2.0, 0.0;
  z = project_box_simplex(p, 1.0, l2, u2);
  // frozen from the grid oracle at step 1e-4: the corner (1, 0)
  const Vec oracle = grid_projection_oracle(p, 1.0, l2, u2);
  CHECK((z - oracle).lpNorm<Eigen::Infinity>() <= 2e-4);
  CHECK(z[0] == Catch::Approx(1.0).margin(1e-12));
  CHECK(z[1] == Catch::Approx(0.0).margin(1e-12));

  Vec p3(3);
  p3 << 0.3, 0.3, 0.3;
  const Vec z3 = project_box_simplex(p3, 1.0, Vec::Zero(3), Vec::Ones(3));
  for (int t = 0; t < 3; ++t) CHECK(z3[t] == Catch::Approx(1.0 / 3).margin(1e-12));
}

TEST_CASE("box-simplex projection carries the clamped-shift KKT structure") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 3);
    Vec p(n), lower(n), upper(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      p[t] = unif(rng);
      lower[t] = std::min(unif(rng), 0.0);
      upper[t] = lower[t] + std::abs(unif(rng)) + 0.05;
    }
    std::uniform_real_distribution<double> td(lower.sum(), upper.sum());
    const double total = td(rng);

    const Vec z = project_box_simplex(p, total, lower, upper);
    REQUIRE(std::abs(z.sum() - total) <= 1e-12 * std::max(1.0, std::abs(total)));
    REQUIRE(((z - lower).array() >= -1e-12).all());
    REQUIRE(((upper - z).array() >= -1e-12).all());
    const auto [lo, hi] = kkt_shift_interval(p, z, lower, upper);
    CHECK(lo <= hi + 1e-9);
  }
}

TEST_CASE("box-simplex projection agrees with the brute-force grid oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  for (int rep = 0; rep < 40; ++rep) {
    const Eigen::Index n = rep % 2 == 0 ? 2 : 3;
    Vec p(n), lower(n), upper(n);
    for (Eigen::Index t = 0; t < n; ++t) {
      p[t] = unif(rng);
      lower[t] = 0.0;
      upper[t] = 0.3 + std::abs(unif(rng));
    }
    std::uniform_real_distribution<double> td(0.0, upper.sum());
    const double total = td(rng);
    const Vec z = project_box_simplex(p, total, lower, upper);
    const Vec oracle = grid_projection_oracle(p, total, lower, upper);
    CHECK((z - oracle).lpNorm<Eigen::Infinity>() <= 2e-4);
  }
}

TEST_CASE("projection is idempotent and nonexpansive") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  Vec lower = Vec::Zero(3);
  Vec upper(3);
  upper << 0.8, 0.6, 0.9;
  const double total = 1.1;
  for (int rep = 0; rep < 100; ++rep) {
    Vec p(3), q(3);
    for (int t = 0; t < 3; ++t) {
      p[t] = unif(rng);
      q[t] = unif(rng);
    }
    const Vec zp = project_box_simplex(p, total, lower, upper);
    const Vec zq = project_box_simplex(q, total, lower, upper);
    CHECK((project_box_simplex(zp, total, lower, upper) - zp).lpNorm<Eigen::Infinity>() <=
          1e-12);
    CHECK((zp - zq).norm() <= (p - q).norm() + 1e-12);
  }
}

TEST_CASE("box-simplex projection agrees with the polytope projection") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(-1.0, 2.0);
  Vec lower(2), upper(2);
  lower << 0.0, 0.1;
  upper << 0.7, 1.0;
  const double total = 0.9;
  const FeasibleSet box = FeasibleSet::box_simplex(total, lower, upper);
  const Polytope& poly = box.as_polytope();
  for (int rep = 0; rep < 50; ++rep) {
    Vec p(2);
    p << unif(rng), unif(rng);
    const Vec a = project_box_simplex(p, total, lower, upper);
    const Vec b = poly.project(p);
    CHECK((a - b).norm() <= 1e-8);
  }
}

TEST_CASE("projection rejects bad inputs") {
  Vec lower = Vec::Zero(2), upper = Vec::Ones(2);
  CHECK_THROWS_AS(project_box_simplex(Vec::Constant(2, std::nan("")), 1.0, lower, upper),
                  std::invalid_argument);
  CHECK_THROWS_AS(project_box_simplex(Vec::Zero(2), 3.0, lower, upper),
                  std::invalid_argument);  // total above sum of uppers
  Vec bad_lower(2);
  bad_lower << 0.8, 0.8;
  CHECK_THROWS_AS(project_box_simplex(Vec::Zero(2), 1.0, bad_lower, Vec::Constant(2, 0.5)),
                  std::invalid_argument);
}

TEST_CASE("greedy linear minimization solves the LP exactly on vertices") {
  Vec lower = Vec::Zero(3), upper(3);
  upper << 0.5, 0.5, 0.5;
  Vec cost(3);
  cost << 3.0, 1.0, 2.0;
  const Vec z = box_simplex_linear_min(cost, 1.0, lower, upper);
  Vec expected(3);
  expected << 0.0, 0.5, 0.5;
  CHECK((z - expected).lpNorm<Eigen::Infinity>() <= 1e-14);

  // cross-check against vertex enumeration on random costs
  const FeasibleSet set = FeasibleSet::box_simplex(1.0, lower, upper);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    Vec c(3);
    c << unif(rng), unif(rng), unif(rng);
    const Vec greedy = set.linear_minimizer(c);
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& v : set.vertices()) best = std::min(best, c.dot(v));
    CHECK(c.dot(greedy) == Catch::Approx(best).margin(1e-10));
  }
}

TEST_CASE("quadratic knapsack handles degenerate flat coordinates") {
  // one quadratic coordinate, one linear (step) coordinate
  Vec quad(2), lin(2);
  quad << 1.0, 0.0;
  lin << 0.0, 0.5;
  const Vec lower = Vec::Zero(2), upper = Vec::Ones(2);
  const Vec z = solve_quadratic_knapsack(quad, lin, 1.2, lower, upper);
  CHECK(std::abs(z.sum() - 1.2) <= 1e-12);
  // optimality against dense enumeration
  double best = std::numeric_limits<double>::infinity();
  Vec arg(2);
  for (double x = std::max(0.0, 0.2); x <= 1.0 + 1e-12; x += 1e-4) {
    Vec c(2);
    c << x, 1.2 - x;
    if (c[1] < 0.0 || c[1] > 1.0) continue;
    const double f = quad[0] * c[0] * c[0] + lin.dot(c);
    if (f < best) {
      best = f;
      arg = c;
    }
  }
  const double fz = quad[0] * z[0] * z[0] + lin.dot(z);
  CHECK(fz <= best + 1e-7);
}
