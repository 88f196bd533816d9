#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "algmech/dynamics.hpp"

namespace algmech {

/// File-level description of a system: expression strings plus run settings.
/// Mirrors the JSON layout one-to-one so that load/save round-trips.
struct SystemSpec {
  // algebroid
  int n = 0;
  int m = 0;
  std::vector<std::vector<std::string>> rho, sigma;
  std::vector<std::vector<std::vector<std::string>>> c;  // [k][i][j]

  // lagrangian
  std::string lagrangian;
  std::map<std::string, double> params;

  // optional force covector components
  std::vector<std::string> force;

  // optional constraint
  std::string constraint_type;  // "", "nonlinear" or "affine"
  std::vector<std::string> phi;
  std::vector<std::string> e0;
  std::vector<std::vector<std::string>> basis;

  std::string mode = "free";  // free | nonholonomic | vakonomic | affine_reduced

  // initial state
  double t0 = 0.0;
  std::vector<double> x0, y0, mu0;
  bool project_initial = false;

  // integrator
  double h = 1e-3;
  double t1 = 1.0;
  double cond_max = 1e8;
  double drift_tol = 1e-6;
  int project_every = 0;

  // output files
  std::string trajectory_csv = "trajectory.csv";
  std::string report_json = "report.json";
  std::string plot_script;  // empty = skip

  // checks
  std::string expect;  // "", "lie", "quasi_lie", "general"
  std::uint64_t seed = 0;
  int check_samples = 100;
  int check_probes = 10;
};

nlohmann::json spec_to_json(const SystemSpec& spec);
SystemSpec spec_from_json(const nlohmann::json& j);
SystemSpec load_spec(const std::string& path);
void save_spec(const SystemSpec& spec, const std::string& path);

/// Parse the expression strings and assemble the runnable system.
/// Throws SpecError / ParseError / DimensionMismatch on bad input.
System build_system(const SystemSpec& spec);

/// Initial state from the spec; projects onto the constraint when
/// project_initial is set, otherwise rejects inconsistent starts.
SystemState initial_state(const SystemSpec& spec, const System& sys);

/// Serialize a named scenario into an equivalent file spec.
SystemSpec scenario_spec(const std::string& name,
                         const std::map<std::string, double>& params);

/// Axiom check. "matches_expectation" is present when the spec declares one.
nlohmann::json run_check(const SystemSpec& spec);

/// Integrate and write the CSV/report/plot files into out_dir. Returns the
/// report; also hands back the trajectory when requested.
nlohmann::json run_simulate(const SystemSpec& spec, const std::string& out_dir,
                            Trajectory* trajectory_out = nullptr);

/// Mode-dependent variational diagnostics (runs a fresh simulation).
nlohmann::json run_variation_test(const SystemSpec& spec, int probes);

}  // namespace algmech
