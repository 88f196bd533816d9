#include "algmech/lagrangian.hpp"

namespace algmech {

Lagrangian::Lagrangian(Expr L, int n, int m, std::map<std::string, double> params)
    : L_(std::move(L)), n_(n), m_(m), params_(std::move(params)) {
  for (const auto& v : L_.free_vars()) {
    if (v == "t" || params_.count(v)) continue;
    bool ok = false;
    for (int a = 1; a <= n_ && !ok; ++a) ok = (v == "x" + std::to_string(a));
    for (int i = 1; i <= m_ && !ok; ++i) ok = (v == "y" + std::to_string(i));
    if (!ok)
      throw DimensionMismatch("Lagrangian: variable '" + v +
                              "' is not a coordinate, 't', or a declared parameter");
  }
}

EvalContext Lagrangian::context(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                double t, bool seeded) const {
  if (x.size() != n_ || y.size() != m_)
    throw DimensionMismatch("Lagrangian: point dimensions do not match");
  EvalContext ctx;
  for (int a = 0; a < n_; ++a) ctx.bindings["x" + std::to_string(a + 1)] = x(a);
  for (int i = 0; i < m_; ++i) ctx.bindings["y" + std::to_string(i + 1)] = y(i);
  ctx.bindings["t"] = t;
  for (const auto& [k, v] : params_) ctx.bindings[k] = v;
  if (seeded) {
    for (int a = 0; a < n_; ++a) ctx.seed_vars.push_back("x" + std::to_string(a + 1));
    for (int i = 0; i < m_; ++i) ctx.seed_vars.push_back("y" + std::to_string(i + 1));
    ctx.seed_vars.push_back("t");
  }
  return ctx;
}

double Lagrangian::value(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                         double t) const {
  return eval_value(L_, context(x, y, t, false));
}

Eigen::VectorXd force_at(const ForceField& F, const Lagrangian& lag,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& y, double t) {
  if (static_cast<int>(F.F.size()) != lag.m())
    throw DimensionMismatch("force field must have m components");
  EvalContext ctx = lag.context(x, y, t, false);
  Eigen::VectorXd eta(lag.m());
  for (int j = 0; j < lag.m(); ++j) eta(j) = eval_value(F.F[j], ctx);
  return eta;
}

LegendreJet legendre_jet(const Lagrangian& lag, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& y, double t) {
  const int n = lag.n(), m = lag.m();
  SecondOrderJet j = eval_jet(lag.expr(), lag.context(x, y, t, true));
  LegendreJet out;
  out.value = j.value;
  out.dLdx = j.grad.head(n);
  out.lam = j.grad.segment(n, m);
  out.W = j.hess.block(n, n, m, m);
  out.Wxy = j.hess.block(0, n, n, m);
  out.Wty = j.hess.row(n + m).segment(n, m).transpose();
  return out;
}

TangentEDualPoint tulczyjew_differential(const AlgebroidChart& A, const Lagrangian& lag,
                                         const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& y, double t) {
  LegendreJet lj = legendre_jet(lag, x, y, t);
  CotangentEPoint w{x, y, lj.dLdx, lj.lam};
  return epsilon_map(A, w);
}

Eigen::VectorXd delta_L(const AlgebroidChart& A, const Lagrangian& lag,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& ydot, double t) {
  if (ydot.size() != lag.m()) throw DimensionMismatch("delta_L: ydot has wrong size");
  LegendreJet lj = legendre_jet(lag, x, y, t);
  Eigen::MatrixXd rho = A.rho_at(x);
  Eigen::MatrixXd sigma = A.sigma_at(x);
  auto c = A.c_at(x);

  Eigen::VectorXd out = sigma.transpose() * lj.dLdx;
  for (int j = 0; j < A.m(); ++j)
    for (int i = 0; i < A.m(); ++i)
      for (int k = 0; k < A.m(); ++k) out(j) += y(i) * c[k](i, j) * lj.lam(k);
  out -= lj.Wxy.transpose() * (rho * y);
  out -= lj.W.transpose() * ydot;
  out -= lj.Wty;
  return out;
}

double action(const Lagrangian& lag, const Trajectory& gamma) {
  if (gamma.size() < 2) throw TooFewSamples("action: need at least 2 samples");
  Eigen::VectorXd values(gamma.size());
  for (int i = 0; i < gamma.size(); ++i)
    values(i) = lag.value(gamma.states[i].x, gamma.states[i].y, gamma.time_at(i));
  return quadrature(values, gamma.h);
}

DWPairing dw_pairing(const AlgebroidChart& A, const Lagrangian& lag,
                     const Trajectory& gamma, const Eigen::MatrixXd& f, double adm_tol) {
  if (f.rows() != gamma.size() || f.cols() != lag.m())
    throw GridMismatch("dw_pairing: f must be sampled on gamma's grid");
  auto adm = is_admissible(A, gamma, adm_tol);
  if (!adm.admissible)
    throw CompatibilityViolation("dw_pairing: gamma is not admissible, residual " +
                                 std::to_string(adm.max_residual));

  const int N = gamma.size();
  Eigen::MatrixXd ydots = time_derivative(gamma.ys(), gamma.h);

  LegendreJet first = legendre_jet(lag, gamma.states[0].x, gamma.states[0].y, gamma.time_at(0));
  LegendreJet last =
      legendre_jet(lag, gamma.states[N - 1].x, gamma.states[N - 1].y, gamma.time_at(N - 1));

  DWPairing out;
  out.boundary = f.row(N - 1).dot(last.lam) - f.row(0).dot(first.lam);

  Eigen::VectorXd integrand(N);
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd dl = delta_L(A, lag, gamma.states[i].x, gamma.states[i].y,
                                 ydots.row(i).transpose(), gamma.time_at(i));
    integrand(i) = f.row(i).dot(dl);
  }
  out.bulk = quadrature(integrand, gamma.h);
  out.total = out.boundary + out.bulk;
  return out;
}

double dw_direct(const AlgebroidChart& A, const Lagrangian& lag, const Trajectory& gamma,
                 const Eigen::MatrixXd& f) {
  auto variations = admissible_variation(A, gamma, f);
  Eigen::VectorXd integrand(gamma.size());
  for (int i = 0; i < gamma.size(); ++i) {
    LegendreJet lj =
        legendre_jet(lag, gamma.states[i].x, gamma.states[i].y, gamma.time_at(i));
    integrand(i) = variations[i].xdot.dot(lj.dLdx) + variations[i].ydot.dot(lj.lam);
  }
  return quadrature(integrand, gamma.h);
}

}  // namespace algmech
