#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wardrop/analysis.hpp"
#include "wardrop/config.hpp"

namespace wardrop {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

}  // namespace detail

/// Writes the report in the fixed schema
///   nu,players,mu_bar,delta_bar,d_bar,agg_dist_sq,profile_dist_sq,
///   bound_no_u,bound_with_u,residual,sweeps,seconds
/// one row per nu in ascending order, floats at 12 significant digits.
inline void emit_csv(const ConvergenceReport& report, const std::string& path) {
  std::vector<const ReportRow*> rows;
  for (const ReportRow& r : report.rows) rows.push_back(&r);
  std::sort(rows.begin(), rows.end(),
            [](const ReportRow* a, const ReportRow* b) { return a->nu < b->nu; });

  auto out = detail::open_out(path);
  out << "nu,players,mu_bar,delta_bar,d_bar,agg_dist_sq,profile_dist_sq,"
         "bound_no_u,bound_with_u,residual,sweeps,seconds\n";
  for (const ReportRow* r : rows) {
    out << r->nu << ',' << r->players << ',' << detail::fmt_double(r->mu_bar) << ','
        << detail::fmt_double(r->delta_bar) << ',' << detail::fmt_double(r->d_bar) << ','
        << detail::fmt_double(r->agg_dist_sq) << ','
        << detail::fmt_double(r->profile_dist_sq) << ','
        << detail::fmt_double(r->bound_no_u) << ','
        << detail::fmt_double(r->bound_with_u) << ','
        << detail::fmt_double(r->residual) << ',' << r->sweeps << ','
        << detail::fmt_double(r->seconds) << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

inline ConvergenceReport parse_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty report " + path);
  ConvergenceReport report;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 12) throw IoError("malformed row in " + path);
    ReportRow r;
    r.nu = std::stoi(fields[0]);
    r.players = std::stol(fields[1]);
    r.mu_bar = std::strtod(fields[2].c_str(), nullptr);
    r.delta_bar = std::strtod(fields[3].c_str(), nullptr);
    r.d_bar = std::strtod(fields[4].c_str(), nullptr);
    r.agg_dist_sq = std::strtod(fields[5].c_str(), nullptr);
    r.profile_dist_sq = std::strtod(fields[6].c_str(), nullptr);
    r.bound_no_u = std::strtod(fields[7].c_str(), nullptr);
    r.bound_with_u = std::strtod(fields[8].c_str(), nullptr);
    r.residual = std::strtod(fields[9].c_str(), nullptr);
    r.sweeps = std::stol(fields[10]);
    r.seconds = std::strtod(fields[11].c_str(), nullptr);
    report.rows.push_back(r);
  }
  return report;
}

struct RunOptions {
  std::string out_dir;  // empty: keep everything in memory
  std::optional<double> tol_override;
  std::optional<int> nu_ref_override;
  std::optional<unsigned long> seed_override;
  bool include_timing = false;  // real wall time in the CSV (not reproducible)
};

struct ExperimentOutcome {
  ConvergenceReport report;
  bool all_converged = true;
  PiecewiseProfile reference_profile;
  double reference_residual = 0.0;
  Vec beckmann_aggregate;  // size 0 unless the no-utility oracle ran
  std::string beckmann_warning;
  std::vector<std::pair<int, double>> wall_times;  // (nu, seconds), -1 = reference
};

namespace detail {

inline void dump_profile(const PiecewiseProfile& profile, const std::string& path) {
  auto out = open_out(path);
  out << "theta_lo,theta_hi";
  for (Eigen::Index t = 0; t < profile.cells().front().value.size(); ++t)
    out << ",x_" << (t + 1);
  out << '\n';
  for (const auto& cell : profile.cells()) {
    out << fmt_double(cell.lo) << ',' << fmt_double(cell.hi);
    for (Eigen::Index t = 0; t < cell.value.size(); ++t)
      out << ',' << fmt_double(cell.value[t]);
    out << '\n';
  }
}

}  // namespace detail

/// Full reproduction pipeline: reference solve, then per-nu build/solve/
/// disaggregate/measure/bound. Artifacts (report.csv, profile dumps,
/// plot-ready series, timings) land in opts.out_dir when set.
///
/// Solver non-convergence at some nu is recorded in that row (distances stay
/// NaN) and the run continues.
inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                        const RunOptions& opts = {}) {
  using clock = std::chrono::steady_clock;
  const NonatomicInstance inst = cfg.build_instance();
  inst.validate();

  const int nu_ref = opts.nu_ref_override.value_or(cfg.nu_ref);
  const double tol = opts.tol_override.value_or(cfg.solver.kkt_tol);

  ExperimentOutcome outcome;
  if (!opts.out_dir.empty()) std::filesystem::create_directories(opts.out_dir);

  const auto t_ref0 = clock::now();
  const WardropReference reference =
      wardrop_reference(inst, nu_ref, std::min(1e-5, tol));
  outcome.wall_times.emplace_back(-1, std::chrono::duration<double>(clock::now() - t_ref0).count());
  outcome.reference_profile = reference.profile;
  outcome.reference_residual = reference.we_residual;

  Vec target_aggregate = reference.profile.aggregate();
  if (!inst.has_utilities() && inst.all_box()) {
    outcome.beckmann_aggregate =
        wardrop_aggregate_beckmann(inst, 1e-13, 100000, &outcome.beckmann_warning);
    target_aggregate = outcome.beckmann_aggregate;
  }

  std::vector<std::pair<int, PiecewiseProfile>> series;  // converged per-nu profiles
  for (int nu : cfg.nu_list) {
    const auto t0 = clock::now();
    AasElement element =
        cfg.meshgrid ? build_meshgrid_aas(inst, nu) : build_uniform_aas(inst, nu);

    SolverConfig solver = cfg.solver;
    solver.kkt_tol = tol;
    const EquilibriumResult ne = solve_ne(element.game, solver);

    ReportRow row;
    row.nu = nu;
    row.players = static_cast<long>(element.game.num_players());
    row.mu_bar = element.mu_bar;
    row.delta_bar = element.delta_bar;
    row.d_bar = element.d_bar;
    row.residual = ne.residual;
    row.sweeps = ne.sweeps;
    row.converged = ne.converged;

    const BoundInputs inputs = make_bound_inputs(inst, element);
    if (inputs.c_min > 0.0) row.bound_no_u = bound_no_utility(inputs);
    if (inputs.alpha > 0.0) {
      row.bound_with_u = bound_with_utility(inputs);
      row.bound_with_u_proof = bound_with_utility_proof_form(inputs);
    }

    if (ne.converged) {
      PiecewiseProfile disagg = disaggregate(ne, element, inst);
      row.profile_dist_sq = profile_distance(disagg, reference.profile);
      row.agg_dist_sq = (ne.profile.aggregate - target_aggregate).squaredNorm();
      if (!opts.out_dir.empty())
        detail::dump_profile(disagg,
                             opts.out_dir + "/profile_nu" + std::to_string(nu) + ".csv");
      series.emplace_back(nu, std::move(disagg));
    } else {
      outcome.all_converged = false;
    }

    const double seconds = std::chrono::duration<double>(clock::now() - t0).count();
    outcome.wall_times.emplace_back(nu, seconds);
    row.seconds = opts.include_timing ? seconds : 0.0;
    outcome.report.rows.push_back(row);
  }

  if (!opts.out_dir.empty()) {
    emit_csv(outcome.report, opts.out_dir + "/report.csv");
    detail::dump_profile(reference.profile, opts.out_dir + "/profile_ref.csv");

    // plot-ready series: theta against the load on one link, reference plus
    // one column per converged nu, sampled at the reference cell midpoints
    const Eigen::Index link = cfg.plot_link >= 0 ? cfg.plot_link : inst.num_links() - 1;
    auto plot = detail::open_out(opts.out_dir + "/plot_link_load.csv");
    plot << "theta,ref";
    for (const auto& [nu, profile] : series) plot << ",nu_" << nu;
    plot << '\n';
    for (const auto& cell : reference.profile.cells()) {
      const double mid = 0.5 * (cell.lo + cell.hi);
      plot << detail::fmt_double(mid) << ',' << detail::fmt_double(cell.value[link]);
      for (const auto& [nu, profile] : series) {
        (void)nu;
        plot << ',' << detail::fmt_double(profile.value_at(mid)[link]);
      }
      plot << '\n';
    }

    if (outcome.beckmann_aggregate.size() > 0) {
      auto bk = detail::open_out(opts.out_dir + "/beckmann.csv");
      bk << "link,aggregate\n";
      for (Eigen::Index t = 0; t < outcome.beckmann_aggregate.size(); ++t)
        bk << (t + 1) << ',' << detail::fmt_double(outcome.beckmann_aggregate[t]) << '\n';
    }

    auto timings = detail::open_out(opts.out_dir + "/timings.txt");
    for (const auto& [nu, seconds] : outcome.wall_times)
      timings << (nu < 0 ? std::string("reference") : "nu=" + std::to_string(nu)) << ' '
              << seconds << "s\n";
  }
  return outcome;
}

}  // namespace wardrop
