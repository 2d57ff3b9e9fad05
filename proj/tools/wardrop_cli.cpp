#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "wardrop/wardrop.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNonConvergence = 2;
constexpr int kExitIo = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw wardrop::IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

wardrop::ParseResult load_config(const std::string& path) {
  return wardrop::parse_config(read_file(path));
}

void print_errors(const std::vector<wardrop::ConfigError>& errors) {
  for (const auto& e : errors)
    std::cerr << "config error at " << (e.path.empty() ? "<document>" : e.path) << ": "
              << e.message << "\n";
}

int run_validate(const std::string& config_path) {
  const auto parsed = load_config(config_path);
  if (!parsed.ok()) {
    print_errors(parsed.errors);
    return kExitValidation;
  }
  const auto inst = parsed.config->build_instance();
  std::cout << "OK: " << inst.num_links() << " links, " << inst.segments().size()
            << " segments, M=" << inst.radius() << ", nu_list size "
            << parsed.config->nu_list.size() << ", nu_ref " << parsed.config->nu_ref
            << "\n";
  return kExitOk;
}

int run_bounds(const std::string& config_path, int nu) {
  const auto parsed = load_config(config_path);
  if (!parsed.ok()) {
    print_errors(parsed.errors);
    return kExitValidation;
  }
  const auto inst = parsed.config->build_instance();
  const wardrop::AasElement element = parsed.config->meshgrid
                                          ? wardrop::build_meshgrid_aas(inst, nu)
                                          : wardrop::build_uniform_aas(inst, nu);
  const wardrop::BoundInputs in = wardrop::make_bound_inputs(inst, element);
  std::cout << "nu          " << nu << "  (" << element.game.num_players()
            << " players)\n"
            << "c_min       " << in.c_min << "\n"
            << "C           " << in.lipschitz << "\n"
            << "M           " << in.radius << "\n"
            << "B_c         " << in.cost_norm << "\n"
            << "Gamma       " << in.gamma << "\n"
            << "alpha       " << in.alpha << "\n"
            << "mu_bar      " << in.mu_bar << "\n"
            << "delta_bar   " << in.delta_bar << "\n"
            << "d_bar       " << in.d_bar << "\n";
  if (in.c_min > 0.0)
    std::cout << "aggregate bound (no utilities)  " << wardrop::bound_no_utility(in) << "\n";
  if (in.alpha > 0.0) {
    std::cout << "profile bound                   " << wardrop::bound_with_utility(in)
              << "\n"
              << "profile bound (proof constants) "
              << wardrop::bound_with_utility_proof_form(in) << "\n";
  } else {
    std::cout << "profile bound                   n/a (alpha = 0)\n";
  }
  return kExitOk;
}

int run_solve(const std::string& config_path, const std::string& out_dir,
              std::optional<unsigned long> seed, std::optional<double> tol,
              std::optional<int> nu_ref, bool timing) {
  const auto parsed = load_config(config_path);
  if (!parsed.ok()) {
    print_errors(parsed.errors);
    return kExitValidation;
  }
  wardrop::RunOptions opts;
  opts.out_dir = out_dir;
  opts.tol_override = tol;
  opts.nu_ref_override = nu_ref;
  opts.seed_override = seed;
  opts.include_timing = timing;
  const auto outcome = wardrop::run_experiment(*parsed.config, opts);

  std::cout << "nu      players  profile_dist^2  agg_dist^2      bound_with_u    "
               "residual      sweeps\n";
  for (const auto& row : outcome.report.rows) {
    std::printf("%-7d %-8ld %-15.6g %-15.6g %-15.6g %-13.6g %ld%s\n", row.nu,
                row.players, row.profile_dist_sq, row.agg_dist_sq, row.bound_with_u,
                row.residual, row.sweeps, row.converged ? "" : "  [not converged]");
    if (std::isfinite(row.bound_with_u_proof) &&
        row.bound_with_u_proof != row.bound_with_u)
      std::printf("        proof-form profile bound: %.6g\n", row.bound_with_u_proof);
  }
  std::cout << "reference equilibrium gap: " << outcome.reference_residual << "\n";
  if (outcome.beckmann_aggregate.size() > 0) {
    std::cout << "aggregate oracle: (";
    for (Eigen::Index t = 0; t < outcome.beckmann_aggregate.size(); ++t)
      std::cout << (t ? ", " : "") << outcome.beckmann_aggregate[t];
    std::cout << ")\n";
  }
  if (!outcome.beckmann_warning.empty())
    std::cerr << "warning: " << outcome.beckmann_warning << "\n";
  for (const auto& [nu, seconds] : outcome.wall_times)
    std::cout << (nu < 0 ? std::string("reference") : "nu=" + std::to_string(nu)) << " took "
              << seconds << "s\n";
  if (!out_dir.empty()) std::cout << "artifacts written to " << out_dir << "\n";
  return outcome.all_converged ? kExitOk : kExitNonConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wardrop equilibrium approximation via atomic best-response dynamics"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::optional<unsigned long> seed;
  std::optional<double> tol;
  std::optional<int> nu_ref;
  bool timing = false;
  int nu = 10;

  auto* solve = app.add_subcommand("solve", "run the full experiment pipeline");
  solve->add_option("--config", config_path, "configuration file")->required();
  solve->add_option("--out", out_dir, "artifact directory");
  solve->add_option("--seed", seed, "seed for sampling-based diagnostics");
  solve->add_option("--tol", tol, "equilibrium tolerance override");
  solve->add_option("--nu-ref", nu_ref, "reference grid size override");
  solve->add_flag("--timing", timing, "record real wall time in report.csv");

  auto* validate = app.add_subcommand("validate", "parse and validate a configuration");
  validate->add_option("--config", config_path, "configuration file")->required();

  auto* bounds = app.add_subcommand("bounds", "print bound inputs and both bounds");
  bounds->add_option("--config", config_path, "configuration file")->required();
  bounds->add_option("--nu", nu, "number of uniform classes")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return run_solve(config_path, out_dir, seed, tol, nu_ref, timing);
    if (validate->parsed()) return run_validate(config_path);
    if (bounds->parsed()) return run_bounds(config_path, nu);
  } catch (const wardrop::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const wardrop::ConvergenceError& e) {
    std::cerr << "solver error: " << e.what() << " (residual " << e.residual << ")\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
