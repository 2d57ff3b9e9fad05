#pragma once

#include <json.hpp>

#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wardrop/equilibrium.hpp"
#include "wardrop/instance.hpp"

namespace wardrop {

struct ConfigError {
  std::string path;     // JSON-pointer-ish location
  std::string message;
};

/// Validated experiment description: the instance, the nu schedule, solver
/// settings and output options. `canonical` is the normalized JSON document;
/// serialization dumps it, so parse(serialize(cfg)) == cfg.
struct ExperimentConfig {
  std::vector<CostFunction> costs;
  std::vector<Segment> segments;
  std::optional<double> radius_override;
  bool meshgrid = false;
  std::vector<int> nu_list;
  int nu_ref = 1000;
  SolverConfig solver;
  unsigned long seed = 0;
  int plot_link = -1;  // -1: last link
  nlohmann::json canonical;

  NonatomicInstance build_instance() const {
    return NonatomicInstance(costs, segments, radius_override);
  }
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<ConfigError> errors;
  bool ok() const { return errors.empty() && config.has_value(); }
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(std::vector<ConfigError>& errors) : errors_(errors) {}

  void error(const std::string& path, const std::string& message) {
    errors_.push_back({path, message});
  }

  ParamFn param(const nlohmann::json& j, const std::string& path, bool allow_demand) {
    if (j.is_number()) return ParamFn::constant(j.get<double>());
    if (!j.is_object()) {
      error(path, "expected a number or a parameter object");
      return ParamFn::constant(0.0);
    }
    const std::string kind = j.value("kind", "");
    try {
      if (kind == "constant") return ParamFn::constant(j.at("value").get<double>());
      if (kind == "linear")
        return ParamFn::linear(j.value("intercept", 0.0), j.value("slope", 0.0));
      if (kind == "sine")
        return ParamFn::sine(j.value("amplitude", 1.0), j.value("pi_coeff", 1.0),
                             j.value("phase", 0.0), j.value("offset", 0.0));
      if (kind == "table") {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : j.at("points"))
          pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        return ParamFn::table(std::move(pts));
      }
      if (kind == "demand") {
        if (!allow_demand) error(path, "demand reference not allowed here");
        return ParamFn::demand_reference(j.value("scale", 1.0));
      }
      error(path, "unknown parameter kind '" + kind + "'");
    } catch (const std::exception& e) {
      error(path, e.what());
    }
    return ParamFn::constant(0.0);
  }

  CostFunction cost(const nlohmann::json& j, const std::string& path) {
    const std::string kind = j.value("kind", "");
    try {
      if (kind == "affine")
        return CostFunction::affine(j.value("slope", 1.0), j.value("intercept", 0.0));
      if (kind == "polynomial")
        return CostFunction::polynomial(j.at("coefficients").get<std::vector<double>>());
      error(path + "/kind", "unknown cost kind '" + kind + "'");
    } catch (const std::exception& e) {
      error(path, e.what());
    }
    return CostFunction::affine(1.0, 0.0);
  }

 private:
  std::vector<ConfigError>& errors_;
};

inline std::vector<ParamFn> param_list(ConfigReader& r, const nlohmann::json& j,
                                       const std::string& path, std::size_t expect,
                                       bool allow_demand) {
  std::vector<ParamFn> fns;
  if (!j.is_array()) {
    r.error(path, "expected an array of parameters");
    return fns;
  }
  if (j.size() != expect)
    r.error(path, "expected " + std::to_string(expect) + " entries, got " +
                      std::to_string(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k)
    fns.push_back(r.param(j[k], path + "/" + std::to_string(k), allow_demand));
  return fns;
}

}  // namespace detail

/// Parses and validates a configuration document. All detectable problems are
/// collected (not first-error-only); `config` is only set when none occurred.
inline ParseResult parse_config(const std::string& text) {
  ParseResult result;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    result.errors.push_back({"", e.what()});
    return result;
  }

  detail::ConfigReader r(result.errors);
  ExperimentConfig cfg;

  // links
  if (!doc.contains("links") || !doc["links"].is_array() || doc["links"].empty()) {
    r.error("/links", "at least one link with a cost is required");
  } else {
    for (std::size_t t = 0; t < doc["links"].size(); ++t) {
      const auto& link = doc["links"][t];
      const std::string path = "/links/" + std::to_string(t);
      if (!link.contains("cost"))
        r.error(path, "missing cost");
      else
        cfg.costs.push_back(r.cost(link["cost"], path + "/cost"));
    }
  }
  const std::size_t links = cfg.costs.size();

  // segments
  if (!doc.contains("segments") || !doc["segments"].is_array() || doc["segments"].empty()) {
    r.error("/segments", "at least one segment is required");
  } else {
    for (std::size_t k = 0; k < doc["segments"].size(); ++k) {
      const auto& js = doc["segments"][k];
      const std::string path = "/segments/" + std::to_string(k);
      Segment seg;
      if (js.contains("interval") && js["interval"].is_array() &&
          js["interval"].size() == 2) {
        seg.lo = js["interval"][0].get<double>();
        seg.hi = js["interval"][1].get<double>();
        if (!(seg.hi > seg.lo)) r.error(path + "/interval", "empty interval");
      } else {
        r.error(path + "/interval", "expected [lo, hi]");
      }

      if (js.contains("polytope")) {
        PolySegmentSets poly;
        const auto& jp = js["polytope"];
        if (jp.contains("A") && jp["A"].is_array() && !jp["A"].empty()) {
          const std::size_t rows = jp["A"].size();
          poly.A = Mat(rows, links);
          for (std::size_t i = 0; i < rows; ++i) {
            if (jp["A"][i].size() != links) {
              r.error(path + "/polytope/A", "row " + std::to_string(i) +
                                                " must have one entry per link");
              break;
            }
            for (std::size_t t = 0; t < links; ++t)
              poly.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) =
                  jp["A"][i][t].get<double>();
          }
          poly.b = detail::param_list(r, jp.value("b", nlohmann::json::array()),
                                      path + "/polytope/b", rows, false);
        } else {
          r.error(path + "/polytope/A", "expected a nonempty matrix");
        }
        seg.sets = std::move(poly);
      } else if (js.contains("demand")) {
        BoxSegmentSets box;
        box.demand = r.param(js["demand"], path + "/demand", false);
        if (js.contains("lower"))
          box.lower = detail::param_list(r, js["lower"], path + "/lower", links, true);
        if (js.contains("upper"))
          box.upper = detail::param_list(r, js["upper"], path + "/upper", links, true);
        seg.sets = std::move(box);
      } else {
        r.error(path, "segment needs either demand (box simplex) or polytope sets");
      }

      if (js.contains("utility")) {
        const auto& ju = js["utility"];
        const std::string ukind = ju.value("kind", "none");
        if (ukind == "none") {
          seg.utility.kind = UtilitySpec::Kind::None;
        } else if (ukind == "quad_pref" || ukind == "log_benefit") {
          seg.utility.kind = ukind == "quad_pref" ? UtilitySpec::Kind::QuadPref
                                                  : UtilitySpec::Kind::LogBenefit;
          if (!ju.contains("weight"))
            r.error(path + "/utility", "missing weight");
          else
            seg.utility.weight = r.param(ju["weight"], path + "/utility/weight", false);
          if (seg.utility.kind == UtilitySpec::Kind::QuadPref) {
            if (!ju.contains("preferred"))
              r.error(path + "/utility", "quad_pref needs a preferred profile");
            else
              seg.utility.preferred = detail::param_list(
                  r, ju["preferred"], path + "/utility/preferred", links, true);
          }
        } else {
          r.error(path + "/utility/kind", "unknown utility kind '" + ukind + "'");
        }
      }
      cfg.segments.push_back(std::move(seg));
    }

    // overlap / partition diagnostics (the instance constructor re-checks)
    for (std::size_t k = 1; k < cfg.segments.size(); ++k) {
      if (cfg.segments[k].lo < cfg.segments[k - 1].hi - 1e-12)
        r.error("/segments/" + std::to_string(k) + "/interval", "segments overlap");
      if (cfg.segments[k].lo > cfg.segments[k - 1].hi + 1e-12)
        r.error("/segments/" + std::to_string(k) + "/interval", "gap between segments");
    }
  }

  if (doc.contains("radius")) cfg.radius_override = doc["radius"].get<double>();
  cfg.meshgrid = doc.value("aas", "uniform") == "meshgrid";
  if (doc.contains("aas") && doc["aas"] != "uniform" && doc["aas"] != "meshgrid")
    r.error("/aas", "expected 'uniform' or 'meshgrid'");

  if (!doc.contains("nu_list") || !doc["nu_list"].is_array() || doc["nu_list"].empty()) {
    r.error("/nu_list", "a nonempty list of nu values is required");
  } else {
    for (const auto& v : doc["nu_list"]) {
      const int nu = v.get<int>();
      if (nu < 1) r.error("/nu_list", "nu values must be >= 1");
      cfg.nu_list.push_back(nu);
    }
    std::sort(cfg.nu_list.begin(), cfg.nu_list.end());
  }
  cfg.nu_ref = doc.value("nu_ref", 1000);
  if (!cfg.nu_list.empty() && cfg.nu_ref <= cfg.nu_list.back())
    r.error("/nu_ref", "reference grid must exceed every nu in nu_list");

  if (doc.contains("solver")) {
    const auto& jsv = doc["solver"];
    cfg.solver.kkt_tol = jsv.value("kkt_tol", cfg.solver.kkt_tol);
    cfg.solver.max_sweeps = jsv.value("max_sweeps", cfg.solver.max_sweeps);
    cfg.solver.br_inner_tol = jsv.value("br_inner_tol", cfg.solver.br_inner_tol);
    const std::string init = jsv.value("init", "preferred");
    if (init == "preferred")
      cfg.solver.init = InitKind::PreferredProfile;
    else if (init == "zeros")
      cfg.solver.init = InitKind::ZerosProjected;
    else if (init == "uniform")
      cfg.solver.init = InitKind::UniformSplit;
    else
      r.error("/solver/init", "unknown init '" + init + "'");
    if (!(cfg.solver.kkt_tol > 0.0)) r.error("/solver/kkt_tol", "must be > 0");
    if (!(cfg.solver.br_inner_tol > 0.0)) r.error("/solver/br_inner_tol", "must be > 0");
    if (cfg.solver.max_sweeps < 1) r.error("/solver/max_sweeps", "must be >= 1");
  }
  cfg.seed = doc.value("seed", 0UL);
  cfg.plot_link = doc.value("plot_link", -1);
  if (cfg.plot_link >= static_cast<int>(links))
    r.error("/plot_link", "link index out of range");

  // Construction-level validation (feasibility at sampled theta, cost shape).
  if (result.errors.empty()) {
    try {
      cfg.build_instance().validate();
    } catch (const std::exception& e) {
      r.error("/", e.what());
    }
  }

  if (result.errors.empty()) {
    cfg.canonical = doc;
    result.config = std::move(cfg);
  }
  return result;
}

inline std::string serialize_config(const ExperimentConfig& cfg) {
  return cfg.canonical.dump(2);
}

}  // namespace wardrop
