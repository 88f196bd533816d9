#include "algmech/system_spec.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "algmech/scenarios.hpp"

namespace algmech {

using nlohmann::json;

namespace {

json grid_to_json(const std::vector<std::vector<std::string>>& g) {
  json out = json::array();
  for (const auto& row : g) out.push_back(row);
  return out;
}

std::vector<std::vector<std::string>> grid_from_json(const json& j) {
  std::vector<std::vector<std::string>> out;
  for (const auto& row : j) out.push_back(row.get<std::vector<std::string>>());
  return out;
}

RhsMode mode_from_string(const std::string& mode) {
  if (mode == "free") return RhsMode::Free;
  if (mode == "nonholonomic") return RhsMode::Nonholonomic;
  if (mode == "vakonomic") return RhsMode::Vakonomic;
  if (mode == "affine_reduced") return RhsMode::AffineReduced;
  throw SpecError("unknown mode '" + mode + "'");
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(i) = v[i];
  return out;
}

Eigen::MatrixXd sine_probe(std::mt19937_64& rng, int samples, int m, double span,
                           double h) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const double pi = 3.14159265358979323846;
  Eigen::MatrixXd f(samples, m);
  for (int j = 0; j < m; ++j) {
    double a1 = coef(rng), a2 = coef(rng), a3 = coef(rng);
    for (int i = 0; i < samples; ++i) {
      double s = i * h / span;
      f(i, j) = a1 * std::sin(pi * s) + a2 * std::sin(2 * pi * s) +
                a3 * std::sin(3 * pi * s);
    }
  }
  return f;
}

json axiom_to_json(const AxiomReport& r) {
  return json{{"is_quasi_lie", r.is_quasi_lie},
              {"is_lie", r.is_lie},
              {"anchor_hom_residual", r.anchor_hom_residual},
              {"jacobiator_residual", r.jacobiator_residual},
              {"skew_residual", r.skew_residual},
              {"rho_sigma_residual", r.rho_sigma_residual},
              {"samples_used", r.samples_used}};
}

AxiomReport check_spec_axioms(const SystemSpec& spec, const System& sys) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < spec.check_samples; ++i) {
    Eigen::VectorXd x(sys.chart.n());
    for (int a = 0; a < sys.chart.n(); ++a) x(a) = u(rng);
    pts.push_back(std::move(x));
  }
  return check_axioms(sys.chart, pts, spec.check_probes, spec.seed);
}

}  // namespace

json spec_to_json(const SystemSpec& spec) {
  json j;
  j["algebroid"] = {{"n", spec.n}, {"m", spec.m}, {"rho", grid_to_json(spec.rho)},
                    {"sigma", grid_to_json(spec.sigma)}};
  json c = json::array();
  for (const auto& slice : spec.c) c.push_back(grid_to_json(slice));
  j["algebroid"]["c"] = c;

  j["lagrangian"] = {{"expr", spec.lagrangian}, {"params", spec.params}};
  if (!spec.force.empty()) j["force"] = spec.force;
  if (!spec.constraint_type.empty()) {
    json cj{{"type", spec.constraint_type}};
    if (spec.constraint_type == "nonlinear") cj["phi"] = spec.phi;
    if (spec.constraint_type == "affine") {
      cj["e0"] = spec.e0;
      cj["basis"] = grid_to_json(spec.basis);
    }
    j["constraint"] = cj;
  }
  j["mode"] = spec.mode;
  j["initial"] = {{"t0", spec.t0}, {"x", spec.x0}, {"y", spec.y0}};
  if (!spec.mu0.empty()) j["initial"]["mu"] = spec.mu0;
  if (spec.project_initial) j["initial"]["project"] = true;
  j["integrator"] = {{"h", spec.h},
                     {"t1", spec.t1},
                     {"cond_max", spec.cond_max},
                     {"drift_tol", spec.drift_tol},
                     {"project_every", spec.project_every}};
  j["output"] = {{"trajectory_csv", spec.trajectory_csv}, {"report_json", spec.report_json}};
  if (!spec.plot_script.empty()) j["output"]["plot_script"] = spec.plot_script;
  if (!spec.expect.empty()) j["expect"] = spec.expect;
  j["seed"] = spec.seed;
  j["check"] = {{"samples", spec.check_samples}, {"probes", spec.check_probes}};
  return j;
}

SystemSpec spec_from_json(const json& j) {
  try {
    SystemSpec spec;
    const json& alg = j.at("algebroid");
    spec.n = alg.at("n").get<int>();
    spec.m = alg.at("m").get<int>();
    spec.rho = grid_from_json(alg.at("rho"));
    spec.sigma = grid_from_json(alg.at("sigma"));
    for (const auto& slice : alg.at("c")) spec.c.push_back(grid_from_json(slice));

    const json& lj = j.at("lagrangian");
    spec.lagrangian = lj.at("expr").get<std::string>();
    if (lj.contains("params"))
      spec.params = lj.at("params").get<std::map<std::string, double>>();

    if (j.contains("force")) spec.force = j.at("force").get<std::vector<std::string>>();
    if (j.contains("constraint")) {
      const json& cj = j.at("constraint");
      spec.constraint_type = cj.at("type").get<std::string>();
      if (spec.constraint_type == "nonlinear")
        spec.phi = cj.at("phi").get<std::vector<std::string>>();
      else if (spec.constraint_type == "affine") {
        spec.e0 = cj.at("e0").get<std::vector<std::string>>();
        spec.basis = grid_from_json(cj.at("basis"));
      } else {
        throw SpecError("constraint type must be 'nonlinear' or 'affine'");
      }
    }
    spec.mode = j.value("mode", std::string("free"));

    const json& init = j.at("initial");
    spec.t0 = init.value("t0", 0.0);
    spec.x0 = init.at("x").get<std::vector<double>>();
    spec.y0 = init.at("y").get<std::vector<double>>();
    if (init.contains("mu")) spec.mu0 = init.at("mu").get<std::vector<double>>();
    spec.project_initial = init.value("project", false);

    const json& integ = j.at("integrator");
    spec.h = integ.at("h").get<double>();
    spec.t1 = integ.at("t1").get<double>();
    spec.cond_max = integ.value("cond_max", 1e8);
    spec.drift_tol = integ.value("drift_tol", 1e-6);
    spec.project_every = integ.value("project_every", 0);

    if (j.contains("output")) {
      const json& out = j.at("output");
      spec.trajectory_csv = out.value("trajectory_csv", std::string("trajectory.csv"));
      spec.report_json = out.value("report_json", std::string("report.json"));
      spec.plot_script = out.value("plot_script", std::string());
    }
    spec.expect = j.value("expect", std::string());
    spec.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("check")) {
      spec.check_samples = j.at("check").value("samples", 100);
      spec.check_probes = j.at("check").value("probes", 10);
    }
    return spec;
  } catch (const json::exception& e) {
    throw SpecError(std::string("invalid system spec: ") + e.what());
  }
}

SystemSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SpecError("cannot parse '" + path + "': " + e.what());
  }
  return spec_from_json(j);
}

void save_spec(const SystemSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SpecError("cannot write spec file '" + path + "'");
  out << spec_to_json(spec).dump(2) << "\n";
}

System build_system(const SystemSpec& spec) {
  if (spec.n < 1 || spec.m < 1) throw SpecError("spec: need n >= 1 and m >= 1");

  auto parse_grid = [](const std::vector<std::vector<std::string>>& g) {
    std::vector<std::vector<Expr>> out;
    for (const auto& row : g) {
      std::vector<Expr> r;
      for (const auto& src : row) r.push_back(Expr::parse(src));
      out.push_back(std::move(r));
    }
    return out;
  };
  std::vector<std::vector<std::vector<Expr>>> c;
  for (const auto& slice : spec.c) c.push_back(parse_grid(slice));
  AlgebroidChart chart(spec.n, spec.m, parse_grid(spec.rho), parse_grid(spec.sigma),
                       std::move(c));
  Lagrangian lag(Expr::parse(spec.lagrangian), spec.n, spec.m, spec.params);

  std::optional<ForceField> force;
  if (!spec.force.empty()) {
    if (static_cast<int>(spec.force.size()) != spec.m)
      throw SpecError("spec: force must have m components");
    ForceField f;
    for (const auto& src : spec.force) f.F.push_back(Expr::parse(src));
    force = std::move(f);
  }

  std::optional<GeometricConstraint> constraint;
  std::optional<AffineConstraint> affine;
  if (spec.constraint_type == "nonlinear") {
    std::vector<Expr> phi;
    for (const auto& src : spec.phi) phi.push_back(Expr::parse(src));
    constraint = GeometricConstraint(std::move(phi), spec.n, spec.m);
  } else if (spec.constraint_type == "affine") {
    std::vector<Expr> e0;
    for (const auto& src : spec.e0) e0.push_back(Expr::parse(src));
    affine = AffineConstraint(std::move(e0), parse_grid(spec.basis), spec.n, spec.m);
  }

  RhsMode mode = mode_from_string(spec.mode);
  if ((mode == RhsMode::Nonholonomic || mode == RhsMode::Vakonomic) && !constraint)
    throw SpecError("spec: mode '" + spec.mode + "' requires a nonlinear constraint");
  if (mode == RhsMode::AffineReduced && !affine)
    throw SpecError("spec: mode 'affine_reduced' requires an affine constraint");
  if (mode == RhsMode::Free && (constraint || affine))
    throw SpecError("spec: free mode must not declare a constraint");
  if (mode == RhsMode::Vakonomic && constraint &&
      spec.mu0.size() != static_cast<std::size_t>(constraint->K()))
    throw SpecError("spec: vakonomic mode needs K initial multipliers");

  return System{std::move(chart), std::move(lag), std::move(force), std::move(constraint),
                std::move(affine), mode};
}

SystemState initial_state(const SystemSpec& spec, const System& sys) {
  SystemState s;
  s.t = spec.t0;
  s.x = to_vector(spec.x0);
  s.y = to_vector(spec.y0);
  if (!spec.mu0.empty()) s.mu = to_vector(spec.mu0);
  int fiber = sys.mode == RhsMode::AffineReduced ? sys.affine->r() : sys.chart.m();
  if (s.x.size() != sys.chart.n() || s.y.size() != fiber)
    throw SpecError("spec: initial state dimensions do not match the chart");

  if (sys.constraint && sys.mode != RhsMode::Free) {
    double drift = sys.constraint->phi_at(s.x, s.y).cwiseAbs().maxCoeff();
    if (drift > spec.drift_tol) {
      if (!spec.project_initial)
        throw SpecError("spec: initial state violates the constraint (|Phi| = " +
                        std::to_string(drift) + "); set initial.project to fix it");
      s.y = consistency_project(*sys.constraint, s.x, s.y);
    }
  }
  return s;
}

SystemSpec scenario_spec(const std::string& name,
                         const std::map<std::string, double>& params) {
  scenarios::NamedScenario sc = scenarios::make_scenario(name, params);
  SystemSpec spec;
  spec.n = sc.system.chart.n();
  spec.m = sc.system.chart.m();
  auto render_grid = [](const std::vector<std::vector<Expr>>& g) {
    std::vector<std::vector<std::string>> out;
    for (const auto& row : g) {
      std::vector<std::string> r;
      for (const auto& e : row) r.push_back(e.to_string());
      out.push_back(std::move(r));
    }
    return out;
  };
  spec.rho = render_grid(sc.system.chart.rho());
  spec.sigma = render_grid(sc.system.chart.sigma());
  for (const auto& slice : sc.system.chart.c()) spec.c.push_back(render_grid(slice));
  spec.lagrangian = sc.system.lag.expr().to_string();
  spec.params = sc.system.lag.params();
  if (sc.system.constraint) {
    spec.constraint_type = "nonlinear";
    for (const auto& e : sc.system.constraint->phi()) spec.phi.push_back(e.to_string());
  }
  switch (sc.system.mode) {
    case RhsMode::Free: spec.mode = "free"; break;
    case RhsMode::Nonholonomic: spec.mode = "nonholonomic"; break;
    case RhsMode::Vakonomic: spec.mode = "vakonomic"; break;
    case RhsMode::AffineReduced: spec.mode = "affine_reduced"; break;
  }
  spec.t0 = sc.initial.t;
  spec.x0.assign(sc.initial.x.data(), sc.initial.x.data() + sc.initial.x.size());
  spec.y0.assign(sc.initial.y.data(), sc.initial.y.data() + sc.initial.y.size());
  spec.h = sc.config.h;
  spec.t1 = sc.t1;
  spec.cond_max = sc.config.cond_max;
  spec.drift_tol = sc.config.drift_tol;
  spec.project_every = sc.config.project_every;
  spec.trajectory_csv = name + "_trajectory.csv";
  spec.report_json = name + "_report.json";
  spec.expect = "lie";
  return spec;
}

json run_check(const SystemSpec& spec) {
  System sys = build_system(spec);
  AxiomReport report = check_spec_axioms(spec, sys);
  json out{{"axiom", axiom_to_json(report)}};
  if (!spec.expect.empty()) {
    bool match = false;
    if (spec.expect == "lie") match = report.is_lie;
    else if (spec.expect == "quasi_lie") match = report.is_quasi_lie;
    else if (spec.expect == "general") match = true;
    else throw SpecError("spec: expect must be lie, quasi_lie or general");
    out["expect"] = spec.expect;
    out["matches_expectation"] = match;
  }
  return out;
}

json run_simulate(const SystemSpec& spec, const std::string& out_dir,
                  Trajectory* trajectory_out) {
  namespace fs = std::filesystem;
  System sys = build_system(spec);
  SystemState s0 = initial_state(spec, sys);
  IntegratorConfig cfg{spec.h, spec.cond_max, spec.drift_tol, spec.project_every};

  auto start = std::chrono::steady_clock::now();
  Trajectory tr = integrate(sys, s0, cfg, spec.t1);
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  double max_dl = 0.0, max_drift = 0.0, max_cond = 0.0;
  for (const auto& d : tr.diagnostics) {
    max_dl = std::max(max_dl, d.delta_l_residual);
    max_drift = std::max(max_drift, d.constraint_residual);
    max_cond = std::max(max_cond, d.condition_estimate);
  }

  json report{{"mode", spec.mode},
              {"axiom", axiom_to_json(check_spec_axioms(spec, sys))},
              {"diagnostics",
               {{"max_delta_l_residual", max_dl},
                {"max_constraint_drift", max_drift},
                {"max_condition_estimate", max_cond},
                {"samples", tr.size()},
                {"wall_time_s", wall}}}};

  fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  fs::create_directories(dir);
  int K = sys.mode == RhsMode::Nonholonomic || sys.mode == RhsMode::Vakonomic
              ? sys.constraint->K()
              : 0;
  int fiber = sys.mode == RhsMode::AffineReduced ? sys.affine->r() : sys.chart.m();
  {
    std::ofstream csv(dir / spec.trajectory_csv);
    if (!csv) throw SpecError("cannot write trajectory CSV");
    write_trajectory_csv(tr, sys.chart.n(), fiber, K, csv);
  }
  {
    std::ofstream rep(dir / spec.report_json);
    rep << report.dump(2) << "\n";
  }
  if (!spec.plot_script.empty()) {
    std::ofstream plot(dir / spec.plot_script);
    plot << "set datafile separator ','\n";
    plot << "set key autotitle columnhead\n";
    plot << "set xlabel 't'\n";
    plot << "plot \\\n";
    for (int a = 0; a < sys.chart.n(); ++a)
      plot << "  '" << spec.trajectory_csv << "' using 1:" << (a + 2) << " with lines, \\\n";
    for (int i = 0; i < fiber; ++i)
      plot << "  '" << spec.trajectory_csv << "' using 1:" << (sys.chart.n() + i + 2)
           << " with lines" << (i + 1 < fiber ? ", \\" : "") << "\n";
  }
  if (trajectory_out) *trajectory_out = std::move(tr);
  return report;
}

json run_variation_test(const SystemSpec& spec, int probes) {
  System sys = build_system(spec);
  SystemState s0 = initial_state(spec, sys);
  IntegratorConfig cfg{spec.h, spec.cond_max, spec.drift_tol, spec.project_every};
  Trajectory tr = integrate(sys, s0, cfg, spec.t1);

  const ForceField* force = sys.force ? &*sys.force : nullptr;
  std::mt19937_64 rng(spec.seed);
  json out{{"mode", spec.mode}, {"probes", probes}};

  switch (sys.mode) {
    case RhsMode::Free: {
      double span = spec.t1 - spec.t0;
      double max_total = 0.0, max_route_diff = 0.0;
      for (int p = 0; p < probes; ++p) {
        Eigen::MatrixXd f = sine_probe(rng, tr.size(), sys.chart.m(), span, spec.h);
        DWPairing dw = dw_pairing(sys.chart, sys.lag, tr, f);
        double direct = dw_direct(sys.chart, sys.lag, tr, f);
        max_total = std::max(max_total, std::abs(dw.total));
        max_route_diff = std::max(max_route_diff, std::abs(dw.total - direct));
      }
      out["max_dW_on_probes"] = max_total;
      out["max_route_difference"] = max_route_diff;
      break;
    }
    case RhsMode::Nonholonomic: {
      out["dalembert_residual"] =
          dalembert_residual(sys.chart, sys.lag, *sys.constraint, force, tr, spec.drift_tol);
      double drift = 0.0, chetaev = 0.0;
      for (const auto& d : tr.diagnostics) {
        drift = std::max(drift, d.constraint_residual);
        chetaev = std::max(chetaev, d.delta_l_residual);
      }
      out["max_constraint_drift"] = drift;
      out["max_chetaev_residual"] = chetaev;
      break;
    }
    case RhsMode::Vakonomic: {
      out["lift_residual"] = vakonomic_lift_residual(sys.chart, sys.lag, *sys.constraint, tr);
      out["equation_residual"] =
          vakonomic_equation_residual(sys.chart, sys.lag, *sys.constraint, force, tr);
      double drift = 0.0;
      for (const auto& d : tr.diagnostics) drift = std::max(drift, d.constraint_residual);
      out["max_constraint_drift"] = drift;
      break;
    }
    case RhsMode::AffineReduced: {
      std::vector<Eigen::VectorXd> pts;
      for (int i = 0; i < tr.size(); i += std::max(1, tr.size() / 16))
        pts.push_back(tr.states[i].x);
      HolonomicityReport rep = is_holonomic(sys.chart, *sys.affine, pts);
      out["holonomicity"] = json{{"is_holonomic", rep.is_holonomic},
                                 {"max_offspan_residual", rep.max_offspan_residual},
                                 {"samples", rep.samples}};
      break;
    }
  }
  return out;
}

}  // namespace algmech
