#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "vortexlab/background.hpp"
#include "vortexlab/diagnostics.hpp"
#include "vortexlab/error.hpp"
#include "vortexlab/io.hpp"
#include "vortexlab/model.hpp"
#include "vortexlab/radial.hpp"
#include "vortexlab/solver.hpp"

namespace vortexlab {

enum class RunMode { Check, Solve, OracleCompare };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::Check: return "check";
    case RunMode::Solve: return "solve";
    case RunMode::OracleCompare: return "oracle-compare";
  }
  return "?";
}

inline RunMode parse_mode(const std::string& s) {
  if (s == "check") return RunMode::Check;
  if (s == "solve") return RunMode::Solve;
  if (s == "oracle-compare") return RunMode::OracleCompare;
  throw Error(ErrorCode::InvalidConfig, "unknown mode '" + s + "'");
}

struct SolverSettings {
  double tol_residual = 1e-10;
  int max_newton = 50;
  double cg_tol = 1e-3;
  double armijo_c = 1e-4;
  double armijo_backtrack = 0.5;
  int max_cg = 1000;
};

struct OracleSettings {
  int mesh = 40000;
  double Rmax = 0.0;  // resolved to max(R, 20/sqrt(2 min lambda))
};

/// Validated run description with every default resolved.
struct RunConfig {
  RunMode mode = RunMode::Solve;
  PhysicalParams params;
  CouplingMatrix K;
  DomainSpec domain;
  std::optional<Grid2D> grid;
  VortexSet vortices;
  double mu = 0.0;
  SolverSettings solver;
  OracleSettings oracle;
  std::string output_dir = ".";
  bool emit_fields = false;
  bool emit_profiles = false;
};

namespace detail {

// Walks one JSON object, remembers which keys were read and rejects the rest.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorCode::InvalidConfig, where() + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const Json& raw(const std::string& key) {
    if (!has(key)) throw Error(ErrorCode::InvalidConfig, "missing key '" + name(key) + "'");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number()) throw Error(ErrorCode::InvalidConfig, "key '" + name(key) + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw Error(ErrorCode::InvalidConfig, "key '" + name(key) + "' must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  int integer(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number_integer() && !(v.is_number_float() && std::floor(v.get<double>()) == v.get<double>())) {
      throw Error(ErrorCode::InvalidConfig, "key '" + name(key) + "' must be an integer");
    }
    const double d = v.get<double>();
    if (std::abs(d) > 1e9) throw Error(ErrorCode::InvalidConfig, "key '" + name(key) + "' is out of range");
    return static_cast<int>(d);
  }
  int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) throw Error(ErrorCode::InvalidConfig, "key '" + name(key) + "' must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_string()) throw Error(ErrorCode::InvalidConfig, "key '" + name(key) + "' must be a string");
    return v.get<std::string>();
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw Error(ErrorCode::InvalidConfig, "unknown key '" + name(it.key()) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline std::vector<Vortex> parse_vortex_list(const Json& j, const std::string& path) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidConfig, "key '" + path + "' must be an array");
  std::vector<Vortex> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    ObjectReader r(j[k], path + "[" + std::to_string(k) + "]");
    Vortex v;
    v.x = r.number("x");
    v.y = r.number("y");
    v.multiplicity = r.integer("multiplicity", 1);
    r.finish();
    out.push_back(v);
  }
  return merge_coincident(out);
}

}  // namespace detail

/// SolveConfig for the run; throws on inconsistent settings.
inline SolveConfig make_solve_config(const RunConfig& rc) {
  if (!rc.grid) throw Error(ErrorCode::InvalidConfig, "missing key 'grid'");
  SolveConfig cfg;
  cfg.K = rc.K;
  cfg.vortices = rc.vortices;
  cfg.domain = rc.domain;
  cfg.grid = *rc.grid;
  cfg.mu = rc.mu;
  cfg.tol_residual = rc.solver.tol_residual;
  cfg.max_newton = rc.solver.max_newton;
  cfg.cg_tol = rc.solver.cg_tol;
  cfg.armijo_c = rc.solver.armijo_c;
  cfg.armijo_backtrack = rc.solver.armijo_backtrack;
  cfg.max_cg = rc.solver.max_cg;
  cfg.validate();
  return cfg;
}

/// Parses and validates a run config. Every problem is an Error; config
/// mistakes carry InvalidConfig with the offending key in the message.
inline RunConfig parse_run_config(const Json& j, RunMode mode) {
  detail::ObjectReader top(j, "");
  RunConfig rc;
  rc.mode = mode;
  if (top.has("mode") && parse_mode(top.string("mode")) != mode) {
    throw Error(ErrorCode::InvalidConfig, "key 'mode' is '" + top.string("mode") + "' but the command is '" +
                                              to_string(mode) + "'");
  }

  {
    detail::ObjectReader r(top.raw("params"), "params");
    rc.params.p = r.number("p");
    rc.params.q = r.number("q");
    rc.params.rho_bar = r.number("rho_bar", 1.0);
    r.finish();
  }
  rc.K = coupling_from(rc.params);

  if (top.has("vortices")) {
    detail::ObjectReader r(top.raw("vortices"), "vortices");
    if (r.has("up")) rc.vortices.up = detail::parse_vortex_list(r.raw("up"), "vortices.up");
    if (r.has("down")) rc.vortices.down = detail::parse_vortex_list(r.raw("down"), "vortices.down");
    r.finish();
  }

  {
    detail::ObjectReader r(top.raw("domain"), "domain");
    const std::string kind = r.string("kind");
    if (kind == "torus") {
      rc.domain = DomainSpec::torus(r.number("L1"), r.number("L2"));
    } else if (kind == "plane") {
      rc.domain = DomainSpec::plane(r.has("R") ? r.number("R") : default_plane_radius(rc.K, rc.vortices));
    } else {
      throw Error(ErrorCode::InvalidConfig, "key 'domain.kind' must be \"torus\" or \"plane\"");
    }
    r.finish();
  }
  validate_vortices(rc.vortices, rc.domain);

  if (top.has("grid")) {
    detail::ObjectReader r(top.raw("grid"), "grid");
    if (rc.domain.is_torus()) {
      rc.grid = Grid2D::periodic(rc.domain.L1, rc.domain.L2, r.integer("nx"), r.integer("ny"));
    } else {
      rc.grid = Grid2D::dirichlet_square(rc.domain.R, r.integer("n"));
    }
    r.finish();
  } else if (mode != RunMode::Check) {
    throw Error(ErrorCode::InvalidConfig, "missing key 'grid'");
  }

  if (top.has("mu")) {
    if (rc.domain.is_torus()) throw Error(ErrorCode::InvalidConfig, "key 'mu' applies to plane domains only");
    rc.mu = top.number("mu");
    if (!(rc.mu > 0.0)) throw Error(ErrorCode::NonPositiveMu, "key 'mu' must be positive");
  } else if (!rc.domain.is_torus()) {
    rc.mu = default_mu(rc.vortices);
  }

  if (top.has("solver")) {
    detail::ObjectReader r(top.raw("solver"), "solver");
    auto& s = rc.solver;
    s.tol_residual = r.number("tol_residual", s.tol_residual);
    s.max_newton = r.integer("max_newton", s.max_newton);
    s.cg_tol = r.number("cg_tol", s.cg_tol);
    s.armijo_c = r.number("armijo_c", s.armijo_c);
    s.armijo_backtrack = r.number("armijo_backtrack", s.armijo_backtrack);
    s.max_cg = r.integer("max_cg", s.max_cg);
    r.finish();
  }

  if (top.has("oracle")) {
    detail::ObjectReader r(top.raw("oracle"), "oracle");
    rc.oracle.mesh = r.integer("mesh", rc.oracle.mesh);
    rc.oracle.Rmax = r.number("Rmax", 0.0);
    r.finish();
  }
  if (mode == RunMode::OracleCompare) {
    if (rc.domain.is_torus()) throw Error(ErrorCode::WrongDomainKind, "oracle-compare needs a plane domain");
    if (rc.oracle.Rmax == 0.0) rc.oracle.Rmax = std::max(rc.domain.R, min_oracle_radius(rc.K));
    if (rc.oracle.Rmax < min_oracle_radius(rc.K) || rc.oracle.Rmax < 0.8 * rc.domain.R) {
      throw Error(ErrorCode::InvalidConfig, "key 'oracle.Rmax' must reach 20/sqrt(2 min lambda) and 0.8 R");
    }
    if (rc.oracle.mesh < 4) throw Error(ErrorCode::InvalidConfig, "key 'oracle.mesh' must be at least 4");
  }
  if (mode == RunMode::Check && !rc.domain.is_torus()) {
    throw Error(ErrorCode::WrongDomainKind, "check applies to torus domains");
  }

  if (top.has("output_dir")) rc.output_dir = top.string("output_dir");
  rc.emit_fields = top.boolean("emit_fields", false);
  rc.emit_profiles = top.boolean("emit_profiles", false);
  top.finish();

  if (rc.grid) (void)make_solve_config(rc);
  return rc;
}

/// The resolved config as JSON; feeding it back reproduces the run. The
/// output directory is left out: it names where results go, not what they are.
inline Json resolved_json(const RunConfig& rc) {
  Json j;
  j["mode"] = to_string(rc.mode);
  j["params"] = {{"p", rc.params.p}, {"q", rc.params.q}, {"rho_bar", rc.params.rho_bar}};
  if (rc.domain.is_torus()) {
    j["domain"] = {{"kind", "torus"}, {"L1", rc.domain.L1}, {"L2", rc.domain.L2}};
  } else {
    j["domain"] = {{"kind", "plane"}, {"R", rc.domain.R}};
    j["mu"] = rc.mu;
  }
  if (rc.grid) {
    if (rc.domain.is_torus()) {
      j["grid"] = {{"nx", rc.grid->nx}, {"ny", rc.grid->ny}};
    } else {
      j["grid"] = {{"n", rc.grid->nx}};
    }
  }
  auto list = [](const std::vector<Vortex>& vs) {
    Json a = Json::array();
    for (const auto& v : vs) a.push_back({{"x", v.x}, {"y", v.y}, {"multiplicity", v.multiplicity}});
    return a;
  };
  j["vortices"] = {{"up", list(rc.vortices.up)}, {"down", list(rc.vortices.down)}};
  const auto& s = rc.solver;
  j["solver"] = {{"tol_residual", s.tol_residual}, {"max_newton", s.max_newton}, {"cg_tol", s.cg_tol},
                 {"armijo_c", s.armijo_c},         {"armijo_backtrack", s.armijo_backtrack}, {"max_cg", s.max_cg}};
  if (rc.mode == RunMode::OracleCompare) j["oracle"] = {{"mesh", rc.oracle.mesh}, {"Rmax", rc.oracle.Rmax}};
  j["emit_fields"] = rc.emit_fields;
  j["emit_profiles"] = rc.emit_profiles;
  return j;
}

/// Exit status for a failure: 1 invalid input, 2 infeasible, 3 no convergence.
inline int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::InfeasibleDomain:
      return 2;
    case ErrorCode::Overflow:
    case ErrorCode::MaxIterationsExceeded:
    case ErrorCode::LineSearchStalled:
    case ErrorCode::NegativeCurvature:
    case ErrorCode::ConvergenceFailure:
      return 3;
    default:
      return 1;
  }
}

namespace detail {

inline Json pair_json(double a, double b) { return Json::array({a, b}); }

inline Json admissibility_json(const AdmissibilityReport& a) {
  return {{"threshold", a.threshold}, {"eta1", a.eta1}, {"eta2", a.eta2}, {"feasible", a.feasible}};
}

inline Json solve_json(const Solution& sol) {
  Json hist = Json::array();
  for (const auto& h : sol.history) {
    hist.push_back({{"iteration", h.iteration},
                    {"functional", h.functional},
                    {"residual", h.residual},
                    {"step", h.step},
                    {"cg_iterations", h.cg_iterations},
                    {"energy_decrease", h.energy_decrease}});
  }
  return {{"newton_iterations", sol.newton_iterations},
          {"final_residual", sol.final_residual},
          {"functional_value", sol.functional_value},
          {"history", hist}};
}

inline Json diagnostics_json(const DiagnosticsReport& d, const PhysicalParams& pp) {
  Json j;
  j["flux"] = pair_json(d.flux.flux1, d.flux.flux2);
  j["flux_expected"] = pair_json(d.expected_flux.flux1, d.expected_flux.flux2);
  j["physical_flux"] = pair_json(d.physical.flux1, d.physical.flux2);
  const auto pe = physical_flux(d.expected_flux, pp);
  j["physical_flux_expected"] = pair_json(pe.flux1, pe.flux2);
  j["energy_integral"] = d.energy;
  j["energy_expected"] = d.expected_energy;
  j["residual_inf"] = d.residual_inf;
  if (d.eta) {
    j["eta_measured"] = pair_json(d.eta->first, d.eta->second);
    j["eta_expected"] = pair_json(d.admissibility->eta1, d.admissibility->eta2);
    j["admissibility"] = admissibility_json(*d.admissibility);
  }
  if (d.decay) {
    j["decay"] = {{"rate", d.decay->rate},
                  {"r2", d.decay->r2},
                  {"gradient_rate", d.decay->gradient_rate},
                  {"gradient_r2", d.decay->gradient_r2},
                  {"bound", d.decay_bound},
                  {"bound_satisfied", d.decay->rate >= d.decay_bound && d.decay->gradient_rate >= d.decay_bound}};
  } else if (d.decay_error) {
    j["decay"] = {{"error", d.decay_error->what()}, {"bound", d.decay_bound}};
  }
  return j;
}

inline void prepare_output_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::InvalidConfig, "cannot create output directory " + dir + ": " + ec.message());
}

inline std::string join(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void emit_solution_files(const RunConfig& rc, const Solution& sol) {
  if (rc.emit_fields) {
    write_fld(join(rc.output_dir, "u1.fld"), sol.u1);
    write_fld(join(rc.output_dir, "u2.fld"), sol.u2);
    write_fld(join(rc.output_dir, "B12.fld"), field_maps(sol, rc.params).B12);
  }
  if (rc.emit_profiles) {
    write_text_file(join(rc.output_dir, "radial_profile.csv"), profile_csv(radial_profile(sol, rc.domain)));
  }
}

inline Json failure_report(const RunConfig& rc, const Error& e) {
  return {{"config", resolved_json(rc)}, {"status", to_string(e.code())}, {"error", e.what()}};
}

}  // namespace detail

/// Writes admissibility.json. Exit 0 when feasible, 2 otherwise.
inline int run_check(const RunConfig& rc) {
  const auto a = check_admissibility(rc.K, rc.vortices.N1(), rc.vortices.N2(), rc.domain.area());
  detail::prepare_output_dir(rc.output_dir);
  write_text_file(detail::join(rc.output_dir, "admissibility.json"), to_report_json(detail::admissibility_json(a)));
  return a.feasible ? 0 : 2;
}

/// Writes report.json and the optional dumps. Exit 0, 2 (infeasible) or 3.
inline int run_solve(const RunConfig& rc) {
  const SolveConfig cfg = make_solve_config(rc);
  detail::prepare_output_dir(rc.output_dir);
  const std::string report = detail::join(rc.output_dir, "report.json");
  if (cfg.domain.is_torus()) {
    const auto a = check_admissibility(cfg.K, cfg.vortices.N1(), cfg.vortices.N2(), cfg.domain.area());
    if (!a.feasible) {
      write_text_file(detail::join(rc.output_dir, "admissibility.json"), to_report_json(detail::admissibility_json(a)));
      const Error e(ErrorCode::InfeasibleDomain, "cell area " + format_g17(cfg.domain.area()) +
                                                     " does not exceed the threshold " + format_g17(a.threshold));
      write_text_file(report, to_report_json(detail::failure_report(rc, e)));
      throw e;
    }
  }
  const BackgroundData bg = make_background(cfg);
  Solution sol;
  try {
    sol = newton_solve(cfg, bg);
  } catch (const Error& e) {
    write_text_file(report, to_report_json(detail::failure_report(rc, e)));
    throw;
  }
  const auto d = diagnose(sol, cfg, bg, rc.params);
  Json j;
  j["config"] = resolved_json(rc);
  j["status"] = "ok";
  j["solve"] = detail::solve_json(sol);
  j["diagnostics"] = detail::diagnostics_json(d, rc.params);
  write_text_file(report, to_report_json(j));
  detail::emit_solution_files(rc, sol);
  return 0;
}

/// 2D solve against the radial oracle; writes report.json with an "oracle"
/// section. Exit codes as for run_solve.
inline int run_oracle_compare(const RunConfig& rc) {
  const auto [n1, n2] = radial_multiplicities(rc.vortices);
  const SolveConfig cfg = make_solve_config(rc);
  detail::prepare_output_dir(rc.output_dir);
  const std::string report = detail::join(rc.output_dir, "report.json");
  const BackgroundData bg = make_background(cfg);
  Solution sol;
  RadialProfile prof;
  try {
    sol = newton_solve(cfg, bg);
    prof = radial_oracle(cfg.K, n1, n2, rc.oracle.Rmax, rc.oracle.mesh);
  } catch (const Error& e) {
    write_text_file(report, to_report_json(detail::failure_report(rc, e)));
    throw;
  }
  const auto d = diagnose(sol, cfg, bg, rc.params);
  const auto cmp = compare_with_oracle(sol, cfg.domain, prof);
  const auto [rf1, rf2] = radial_flux(cfg.K, prof);
  Json j;
  j["config"] = resolved_json(rc);
  j["status"] = "ok";
  j["solve"] = detail::solve_json(sol);
  j["diagnostics"] = detail::diagnostics_json(d, rc.params);
  j["oracle"] = {{"max_ring_diff", cmp.max_ring_diff},
                 {"mean_ring_diff", cmp.mean_ring_diff},
                 {"rings", cmp.rings},
                 {"r_window", detail::pair_json(0.5, 0.8 * cfg.domain.R)},
                 {"Rmax", rc.oracle.Rmax},
                 {"mesh", rc.oracle.mesh},
                 {"newton_iterations_1d", cmp.newton_iterations_1d},
                 {"flux_1d", detail::pair_json(rf1, rf2)},
                 {"tolerance", 1e-3},
                 {"within_tolerance", cmp.max_ring_diff <= 1e-3}};
  write_text_file(report, to_report_json(j));
  detail::emit_solution_files(rc, sol);
  return 0;
}

/// Full command: read, validate, run. Diagnostics go to `err`; the return
/// value is the process exit status.
inline int run_command(RunMode mode, const std::string& config_path, const std::optional<std::string>& out_dir,
                       bool emit_fields, bool emit_profiles, std::ostream& err) {
  try {
    std::ifstream in(config_path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config file " + config_path);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::InvalidConfig, std::string("malformed JSON in ") + config_path + ": " + e.what());
    }
    RunConfig rc = parse_run_config(j, mode);
    if (out_dir) rc.output_dir = *out_dir;
    rc.emit_fields = rc.emit_fields || emit_fields;
    rc.emit_profiles = rc.emit_profiles || emit_profiles;
    switch (mode) {
      case RunMode::Check: {
        const int code = run_check(rc);
        if (code == 2) err << "vortexlab: infeasible: cell area is not above the existence threshold\n";
        return code;
      }
      case RunMode::Solve: return run_solve(rc);
      case RunMode::OracleCompare: return run_oracle_compare(rc);
    }
    return 1;
  } catch (const Error& e) {
    err << "vortexlab: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "vortexlab: InvalidConfig: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace vortexlab
