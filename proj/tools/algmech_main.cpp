// File-driven front end: load a system spec (or a named scenario), run axiom
// checks, simulations and variational diagnostics, and emit CSV trajectories,
// JSON reports and gnuplot scripts.
//
// Exit codes: 0 success, 1 expectation failure, 2 input error,
// 3 numeric failure (singularity, drift, divergence).

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>
#include <map>
#include <string>

#include "algmech/system_spec.hpp"

using namespace algmech;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string spec_path;
  std::string scenario;
  std::vector<std::string> params;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("spec", args.spec_path, "system spec JSON file");
  cmd->add_option("--scenario", args.scenario,
                  "built-in scenario (oscillator, euler_top, free_sphere, rolling_ball)");
  cmd->add_option("--param", args.params, "scenario parameter, k=v")->take_all();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "seed for random probes")
      ->each([&](const std::string&) { args.seed_set = true; });
}

SystemSpec resolve_spec(const CommonArgs& args) {
  if (!args.scenario.empty()) {
    std::map<std::string, double> params;
    for (const auto& kv : args.params) {
      auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw SpecError("--param expects k=v, got '" + kv + "'");
      params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    }
    return scenario_spec(args.scenario, params);
  }
  if (args.spec_path.empty())
    throw SpecError("either a spec file or --scenario is required");
  return load_spec(args.spec_path);
}

bool verbose() {
  const char* v = std::getenv("ALGMECH_VERBOSE");
  return v != nullptr && std::string(v) != "0";
}

void note(const std::string& msg) {
  if (verbose()) std::cerr << "algmech: " << msg << "\n";
}

int classify_failure(const std::exception& e) {
  if (dynamic_cast<const SingularLagrangian*>(&e) || dynamic_cast<const SingularSaddle*>(&e) ||
      dynamic_cast<const SingularReducedHessian*>(&e) ||
      dynamic_cast<const ConstraintDrift*>(&e) || dynamic_cast<const NonFiniteState*>(&e) ||
      dynamic_cast<const NoConvergence*>(&e))
    return 3;
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variational mechanics on general algebroids"};
  app.require_subcommand(1);

  CommonArgs check_args, sim_args, var_args;
  int probes = 20;

  CLI::App* check = app.add_subcommand("check", "verify the algebroid axioms");
  add_common(check, check_args);
  CLI::App* simulate = app.add_subcommand("simulate", "integrate the dynamics");
  add_common(simulate, sim_args);
  CLI::App* variation =
      app.add_subcommand("variation-test", "variational and constraint diagnostics");
  add_common(variation, var_args);
  variation->add_option("--probes", probes, "number of random probes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) {
      SystemSpec spec = resolve_spec(check_args);
      if (check_args.seed_set) spec.seed = check_args.seed;
      note("checking axioms at " + std::to_string(spec.check_samples) + " sample points");
      json report = run_check(spec);
      std::cout << report.dump(2) << "\n";
      if (report.contains("matches_expectation") &&
          !report["matches_expectation"].get<bool>())
        return 1;
      return 0;
    }
    if (simulate->parsed()) {
      SystemSpec spec = resolve_spec(sim_args);
      if (sim_args.seed_set) spec.seed = sim_args.seed;
      note("integrating mode '" + spec.mode + "' to t1 = " + std::to_string(spec.t1));
      json report = run_simulate(spec, sim_args.out_dir);
      note("wrote " + spec.trajectory_csv + " and " + spec.report_json);
      std::cout << report.dump(2) << "\n";
      return 0;
    }
    SystemSpec spec = resolve_spec(var_args);
    if (var_args.seed_set) spec.seed = var_args.seed;
    note("running variational diagnostics with " + std::to_string(probes) + " probes");
    json report = run_variation_test(spec, probes);
    std::cout << report.dump(2) << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify_failure(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
