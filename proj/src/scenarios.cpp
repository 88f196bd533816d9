#include "algmech/scenarios.hpp"

#include <cmath>

namespace algmech {
namespace scenarios {

namespace {

Expr zero() { return Expr::number(0.0); }
Expr one() { return Expr::number(1.0); }

std::vector<std::vector<Expr>> zero_anchor(int n, int m) {
  return std::vector<std::vector<Expr>>(n, std::vector<Expr>(m, zero()));
}

std::vector<std::vector<std::vector<Expr>>> zero_c(int m) {
  return std::vector<std::vector<std::vector<Expr>>>(
      m, std::vector<std::vector<Expr>>(m, std::vector<Expr>(m, zero())));
}

int levi_civita(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0;
  if ((i == 0 && j == 1 && k == 2) || (i == 1 && j == 2 && k == 0) ||
      (i == 2 && j == 0 && k == 1))
    return 1;
  return -1;
}

Expr var(const std::string& prefix, int idx1) { return Expr::variable(prefix + std::to_string(idx1)); }

// sum of coef * expr over entries with non-negligible coefficients
Expr lin_combo(const std::vector<std::pair<double, Expr>>& terms) {
  Expr acc = zero();
  bool first = true;
  for (const auto& [coef, e] : terms) {
    if (coef == 0.0) continue;
    Expr t = (coef == 1.0) ? e : Expr::number(coef) * e;
    acc = first ? t : acc + t;
    first = false;
  }
  return acc;
}

}  // namespace

ChartLag canonical_tm(const Expr& V, int n) {
  for (const auto& v : V.free_vars())
    if (!v.empty() && v[0] == 'y')
      throw DimensionMismatch("canonical_tm: potential must not depend on fiber variables");
  auto anchor = zero_anchor(n, n);
  for (int a = 0; a < n; ++a) anchor[a][a] = one();
  AlgebroidChart chart(n, n, anchor, anchor, zero_c(n));

  Expr L = zero();
  for (int i = 1; i <= n; ++i) {
    Expr term = Expr::number(0.5) * var("y", i) * var("y", i);
    L = (i == 1) ? term : L + term;
  }
  L = L - V;
  return {chart, Lagrangian(L, n, n)};
}

ChartLag lie_algebra_so3(double I1, double I2, double I3) {
  if (I1 <= 0 || I2 <= 0 || I3 <= 0)
    throw SpecError("lie_algebra_so3: inertias must be positive");
  auto c = zero_c(3);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        int s = levi_civita(i, j, k);  // c^k_{ij} = epsilon_{ijk}
        if (s != 0) c[k][i][j] = Expr::number(static_cast<double>(s));
      }
  AlgebroidChart chart(1, 3, zero_anchor(1, 3), zero_anchor(1, 3), std::move(c));

  Expr L = Expr::parse("0.5*(I1*y1^2 + I2*y2^2 + I3*y3^2)");
  return {chart, Lagrangian(L, 1, 3, {{"I1", I1}, {"I2", I2}, {"I3", I3}})};
}

ChartLag free_sphere(double mass, double r, double k2) {
  if (mass <= 0 || r <= 0 || k2 <= 0)
    throw SpecError("free_sphere: mass, radius and inertia must be positive");
  const int n = 2, m = 5;
  auto anchor = zero_anchor(n, m);
  anchor[0][0] = one();
  anchor[1][1] = one();
  auto c = zero_c(m);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        int s = levi_civita(i, j, k);
        if (s != 0) c[k + 2][i + 2][j + 2] = Expr::number(static_cast<double>(s));
      }
  AlgebroidChart chart(n, m, anchor, anchor, std::move(c));

  Expr L = Expr::parse("0.5*m*(y1^2 + y2^2) + 0.5*m*k2*(y3^2 + y4^2 + y5^2)");
  return {chart, Lagrangian(L, n, m, {{"m", mass}, {"k2", k2}, {"r", r}})};
}

RollingBall rolling_ball(double mass, double r, double k2, double Omega) {
  ChartLag base = free_sphere(mass, r, k2);
  // y1 - r y4 + Omega x2 = 0 and y2 + r y3 - Omega x1 = 0
  std::vector<Expr> phi;
  phi.push_back(var("y", 1) - Expr::number(r) * var("y", 4) +
                Expr::number(Omega) * var("x", 2));
  phi.push_back(var("y", 2) + Expr::number(r) * var("y", 3) -
                Expr::number(Omega) * var("x", 1));
  GeometricConstraint constraint(std::move(phi), 2, 5);
  double alpha = k2 * Omega / (r * r + k2);
  return {base.chart, base.lag, std::move(constraint), alpha};
}

AlgebroidChart projected_algebroid(const AlgebroidChart& A, const Eigen::MatrixXd& metric,
                                   const Eigen::MatrixXd& frame) {
  const int m = A.m(), s = static_cast<int>(frame.rows());
  if (metric.rows() != m || metric.cols() != m)
    throw DimensionMismatch("projected_algebroid: metric must be m x m");
  if (frame.cols() != m || s < 1 || s > m)
    throw DimensionMismatch("projected_algebroid: frame rows must have m entries");
  Eigen::LLT<Eigen::MatrixXd> llt(metric);
  if (llt.info() != Eigen::Success)
    throw SpecError("projected_algebroid: metric is not positive definite");

  // Gram-Schmidt under the metric.
  Eigen::MatrixXd ortho(s, m);
  for (int a = 0; a < s; ++a) {
    Eigen::VectorXd v = frame.row(a).transpose();
    for (int b = 0; b < a; ++b) {
      Eigen::VectorXd u = ortho.row(b).transpose();
      v -= (u.transpose() * metric * v).value() * u;
    }
    double norm = std::sqrt((v.transpose() * metric * v).value());
    if (norm < 1e-12)
      throw FrameDegenerate("projected_algebroid: frame rows are dependent");
    ortho.row(a) = v.transpose() / norm;
  }

  const int n = A.n();
  std::vector<std::vector<Expr>> rho_p(n, std::vector<Expr>(s, zero()));
  std::vector<std::vector<Expr>> sigma_p(n, std::vector<Expr>(s, zero()));
  for (int a = 0; a < n; ++a)
    for (int al = 0; al < s; ++al) {
      std::vector<std::pair<double, Expr>> rterms, sterms;
      for (int i = 0; i < m; ++i) {
        rterms.emplace_back(ortho(al, i), A.rho()[a][i]);
        sterms.emplace_back(ortho(al, i), A.sigma()[a][i]);
      }
      rho_p[a][al] = lin_combo(rterms);
      sigma_p[a][al] = lin_combo(sterms);
    }

  // c'^gamma_{alpha beta} = <[e_alpha, e_beta]-coefficients, g e_gamma>
  Eigen::MatrixXd dual = ortho * metric;  // dual(gamma, k)
  auto c_p = zero_c(s);
  for (int g = 0; g < s; ++g)
    for (int al = 0; al < s; ++al)
      for (int be = 0; be < s; ++be) {
        std::vector<std::pair<double, Expr>> terms;
        for (int k = 0; k < m; ++k)
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
              double coef = dual(g, k) * ortho(al, i) * ortho(be, j);
              if (std::abs(coef) > 1e-15) terms.emplace_back(coef, A.c()[k][i][j]);
            }
        c_p[g][al][be] = lin_combo(terms);
      }
  return AlgebroidChart(n, s, std::move(rho_p), std::move(sigma_p), std::move(c_p));
}

// ---------------------------------------------------------------------------
// Optimal control
// ---------------------------------------------------------------------------

PontryaginScenario pontryagin_control(const AlgebroidChart& E, std::vector<Expr> f,
                                      Expr l_base, int nU) {
  const int nE = E.n(), mE = E.m();
  if (static_cast<int>(f.size()) != mE)
    throw DimensionMismatch("pontryagin_control: f must have one component per E fiber");
  if (nU < 1) throw DimensionMismatch("pontryagin_control: need at least one control");

  std::map<std::string, std::string> remap;
  for (int a = 1; a <= nU; ++a)
    remap["u" + std::to_string(a)] = "x" + std::to_string(nE + a);
  for (auto& e : f) e = e.renamed(remap);
  Expr l = l_base.renamed(remap);

  const int n = nE + nU, m = mE + nU;
  auto rho = zero_anchor(n, m);
  auto sigma = zero_anchor(n, m);
  for (int a = 0; a < nE; ++a)
    for (int i = 0; i < mE; ++i) {
      rho[a][i] = E.rho()[a][i];
      sigma[a][i] = E.sigma()[a][i];
    }
  for (int a = 0; a < nU; ++a) {
    rho[nE + a][mE + a] = one();
    sigma[nE + a][mE + a] = one();
  }
  auto c = zero_c(m);
  for (int k = 0; k < mE; ++k)
    for (int i = 0; i < mE; ++i)
      for (int j = 0; j < mE; ++j) c[k][i][j] = E.c()[k][i][j];
  AlgebroidChart product(n, m, std::move(rho), std::move(sigma), std::move(c));

  std::vector<Expr> phi;
  phi.reserve(mE);
  for (int i = 0; i < mE; ++i) phi.push_back(var("y", i + 1) - f[i]);
  GeometricConstraint constraint(std::move(phi), n, m);

  Lagrangian lag(l, n, m);
  return {std::move(product), std::move(lag), std::move(constraint), E,
          std::move(f),       std::move(l),   nE,                    mE, nU};
}

namespace {

struct ControlJets {
  // values and derivatives of f and l_base over the product base coordinates
  Eigen::VectorXd f;          // mE
  Eigen::MatrixXd f_x;        // mE x nE
  Eigen::MatrixXd f_u;        // mE x nU
  std::vector<Eigen::MatrixXd> f_uu;  // per i: nU x nU
  double l = 0.0;
  Eigen::VectorXd l_x;        // nE
  Eigen::VectorXd l_u;        // nU
  Eigen::MatrixXd l_uu;       // nU x nU
};

ControlJets control_jets(const PontryaginScenario& scn, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u) {
  EvalContext ctx;
  for (int a = 0; a < scn.nE; ++a) ctx.bindings["x" + std::to_string(a + 1)] = x(a);
  for (int a = 0; a < scn.nU; ++a)
    ctx.bindings["x" + std::to_string(scn.nE + a + 1)] = u(a);
  for (int a = 0; a < scn.nE + scn.nU; ++a)
    ctx.seed_vars.push_back("x" + std::to_string(a + 1));

  ControlJets out;
  out.f.resize(scn.mE);
  out.f_x.resize(scn.mE, scn.nE);
  out.f_u.resize(scn.mE, scn.nU);
  out.f_uu.assign(scn.mE, Eigen::MatrixXd());
  for (int i = 0; i < scn.mE; ++i) {
    SecondOrderJet j = eval_jet(scn.f[i], ctx);
    out.f(i) = j.value;
    out.f_x.row(i) = j.grad.head(scn.nE);
    out.f_u.row(i) = j.grad.tail(scn.nU);
    out.f_uu[i] = j.hess.block(scn.nE, scn.nE, scn.nU, scn.nU);
  }
  SecondOrderJet j = eval_jet(scn.l_base, ctx);
  out.l = j.value;
  out.l_x = j.grad.head(scn.nE);
  out.l_u = j.grad.tail(scn.nU);
  out.l_uu = j.hess.block(scn.nE, scn.nE, scn.nU, scn.nU);
  return out;
}

Eigen::VectorXd solve_control(const PontryaginScenario& scn, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& xi, Eigen::VectorXd u) {
  for (int it = 0; it < 50; ++it) {
    ControlJets cj = control_jets(scn, x, u);
    Eigen::VectorXd g = cj.l_u - cj.f_u.transpose() * xi;
    if (g.cwiseAbs().maxCoeff() <= 1e-12) return u;
    Eigen::MatrixXd J = cj.l_uu;
    for (int i = 0; i < scn.mE; ++i) J -= xi(i) * cj.f_uu[i];
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    if (lu.rcond() < 1e-14)
      throw SingularSaddle("pontryagin control solve: stationarity Jacobian singular");
    u -= lu.solve(g);
  }
  throw NoConvergence("pontryagin control solve: Newton did not converge");
}

}  // namespace

PontryaginTrajectory integrate_pontryagin(const PontryaginScenario& scn,
                                          const PontryaginState& s0, double t0, double h,
                                          double t1) {
  if (h <= 0.0) throw SpecError("integrate_pontryagin: h must be positive");
  double steps_d = (t1 - t0) / h;
  long steps = std::lround(steps_d);
  if (steps < 1 || std::abs(steps_d - static_cast<double>(steps)) > 1e-9 * (1.0 + steps_d))
    throw SpecError("integrate_pontryagin: (t1 - t0) / h must be a positive integer");

  Eigen::VectorXd u = s0.u;
  auto rhs = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
    u = solve_control(scn, x, xi, u);
    ControlJets cj = control_jets(scn, x, u);
    Eigen::MatrixXd rho_x = scn.e_chart.rho_at(x);
    Eigen::MatrixXd sigma_x = scn.e_chart.sigma_at(x);
    auto c_x = scn.e_chart.c_at(x);
    Eigen::VectorXd xdot = rho_x * cj.f;
    Eigen::VectorXd xidot = sigma_x.transpose() * (cj.l_x - cj.f_x.transpose() * xi);
    for (int jj = 0; jj < scn.mE; ++jj)
      for (int k = 0; k < scn.mE; ++k)
        for (int i = 0; i < scn.mE; ++i) xidot(jj) += c_x[k](i, jj) * cj.f(i) * xi(k);
    return std::make_pair(xdot, xidot);
  };

  PontryaginTrajectory out;
  out.t0 = t0;
  out.h = h;
  out.states.reserve(steps + 1);

  Eigen::VectorXd x = s0.x, xi = s0.xi;
  u = solve_control(scn, x, xi, s0.u);
  out.states.push_back({x, u, xi});
  for (long step = 1; step <= steps; ++step) {
    auto [k1x, k1xi] = rhs(x, xi);
    auto [k2x, k2xi] = rhs(x + 0.5 * h * k1x, xi + 0.5 * h * k1xi);
    auto [k3x, k3xi] = rhs(x + 0.5 * h * k2x, xi + 0.5 * h * k2xi);
    auto [k4x, k4xi] = rhs(x + h * k3x, xi + h * k3xi);
    x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    xi += h / 6.0 * (k1xi + 2.0 * k2xi + 2.0 * k3xi + k4xi);
    if (!x.allFinite() || !xi.allFinite())
      throw NonFiniteState("pontryagin state became non-finite");
    u = solve_control(scn, x, xi, u);
    out.states.push_back({x, u, xi});
  }
  return out;
}

double stationarity_residual(const PontryaginScenario& scn, const PontryaginTrajectory& tr) {
  double worst = 0.0;
  for (const auto& st : tr.states) {
    ControlJets cj = control_jets(scn, st.x, st.u);
    Eigen::VectorXd g = cj.l_u - cj.f_u.transpose() * st.xi;
    worst = std::max(worst, g.cwiseAbs().maxCoeff());
  }
  return worst;
}

Trajectory lifted_product_trajectory(const PontryaginScenario& scn,
                                     const PontryaginTrajectory& tr) {
  const int N = tr.size();
  if (N < 3) throw TooFewSamples("lifted_product_trajectory: need at least 3 samples");
  Eigen::MatrixXd us(N, scn.nU);
  for (int i = 0; i < N; ++i) us.row(i) = tr.states[i].u;
  Eigen::MatrixXd udots = time_derivative(us, tr.h);

  Trajectory out;
  out.t0 = tr.t0;
  out.h = tr.h;
  out.states.reserve(N);
  out.diagnostics.assign(N, {});
  for (int i = 0; i < N; ++i) {
    const auto& st = tr.states[i];
    ControlJets cj = control_jets(scn, st.x, st.u);
    SystemState s;
    s.t = tr.time_at(i);
    s.x.resize(scn.nE + scn.nU);
    s.x << st.x, st.u;
    s.y.resize(scn.mE + scn.nU);
    s.y << cj.f, udots.row(i).transpose();
    s.mu = -st.xi;
    out.states.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CLI registry
// ---------------------------------------------------------------------------

namespace {

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, double>& params,
                    std::initializer_list<const char*> known) {
  for (const auto& [k, v] : params) {
    bool ok = false;
    for (const char* name : known)
      if (k == name) ok = true;
    if (!ok) throw SpecError("scenario: unknown parameter '" + k + "'");
  }
}

}  // namespace

NamedScenario make_scenario(const std::string& name,
                            const std::map<std::string, double>& params) {
  IntegratorConfig cfg{1e-3, 1e8, 1e-6, 0};
  if (name == "oscillator") {
    reject_unknown(params, {});
    ChartLag cl = canonical_tm(Expr::parse("0.5*x1^2"), 1);
    return {System{cl.chart, cl.lag, {}, {}, {}, RhsMode::Free},
            SystemState{0.0, Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Zero(1), {}},
            cfg, 6.283};
  }
  if (name == "euler_top") {
    reject_unknown(params, {"I1", "I2", "I3"});
    ChartLag cl = lie_algebra_so3(param_or(params, "I1", 1.0), param_or(params, "I2", 2.0),
                                  param_or(params, "I3", 3.0));
    Eigen::VectorXd omega(3);
    omega << 0.3, 1.0, 0.2;
    return {System{cl.chart, cl.lag, {}, {}, {}, RhsMode::Free},
            SystemState{0.0, Eigen::VectorXd::Zero(1), omega, {}}, cfg, 10.0};
  }
  if (name == "free_sphere") {
    reject_unknown(params, {"m", "r", "k2"});
    ChartLag cl = free_sphere(param_or(params, "m", 1.0), param_or(params, "r", 1.0),
                              param_or(params, "k2", 2.0));
    Eigen::VectorXd y(5);
    y << 0.3, -0.2, 0.4, 0.5, -0.1;
    return {System{cl.chart, cl.lag, {}, {}, {}, RhsMode::Free},
            SystemState{0.0, Eigen::VectorXd::Zero(2), y, {}}, cfg, 10.0};
  }
  if (name == "rolling_ball") {
    reject_unknown(params, {"m", "r", "k2", "Omega"});
    double r = param_or(params, "r", 1.0);
    double Omega = param_or(params, "Omega", 3.0);
    RollingBall rb =
        rolling_ball(param_or(params, "m", 1.0), r, param_or(params, "k2", 2.0), Omega);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd y(5);
    double w1 = 0.1, w2 = 0.2, w3 = 0.3;
    y << r * w2 - Omega * x(1), -r * w1 + Omega * x(0), w1, w2, w3;
    return {System{rb.chart, rb.lag, {}, rb.constraint, {}, RhsMode::Nonholonomic},
            SystemState{0.0, x, y, {}}, cfg, 5.0};
  }
  throw SpecError("unknown scenario '" + name + "'");
}

}  // namespace scenarios
}  // namespace algmech
