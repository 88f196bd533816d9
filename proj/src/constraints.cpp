#include "algmech/constraints.hpp"

#include <cmath>

#include "lu_condition.hpp"

namespace algmech {

namespace {

void check_vars(const Expr& e, int n, int m, const char* what) {
  for (const auto& v : e.free_vars()) {
    bool ok = false;
    for (int a = 1; a <= n && !ok; ++a) ok = (v == "x" + std::to_string(a));
    for (int i = 1; i <= m && !ok; ++i) ok = (v == "y" + std::to_string(i));
    if (!ok)
      throw DimensionMismatch(std::string(what) + ": unexpected variable '" + v + "'");
  }
}

void check_base_vars(const Expr& e, int n, const char* what) {
  for (const auto& v : e.free_vars()) {
    bool ok = false;
    for (int a = 1; a <= n && !ok; ++a) ok = (v == "x" + std::to_string(a));
    if (!ok)
      throw DimensionMismatch(std::string(what) + ": unexpected variable '" + v +
                              "' (base coordinates only)");
  }
}

EvalContext full_context(int n, int m, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                         bool seeded) {
  EvalContext ctx;
  for (int a = 0; a < n; ++a) ctx.bindings["x" + std::to_string(a + 1)] = x(a);
  for (int i = 0; i < m; ++i) ctx.bindings["y" + std::to_string(i + 1)] = y(i);
  if (seeded) {
    for (int a = 0; a < n; ++a) ctx.seed_vars.push_back("x" + std::to_string(a + 1));
    for (int i = 0; i < m; ++i) ctx.seed_vars.push_back("y" + std::to_string(i + 1));
  }
  return ctx;
}

double condition_of(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
  return detail::lu_condition(lu);
}

// Right-hand side of the momentum equations before the ydot term:
//   b0_j = sigma^a_j dLdx_a + y^i c^k_{ij} lam_k - (Wxy^T rho y)_j - Wty_j,
// so that deltaL(x, y, ydot, t) = b0 - W^T ydot.
Eigen::VectorXd momentum_rhs(const Eigen::VectorXd& y,
                             const Eigen::MatrixXd& rho, const Eigen::MatrixXd& sigma,
                             const std::vector<Eigen::MatrixXd>& c, const LegendreJet& lj) {
  Eigen::VectorXd b0 = sigma.transpose() * lj.dLdx;
  const int m = static_cast<int>(c.size());
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) b0(j) += y(i) * c[k](i, j) * lj.lam(k);
  b0 -= lj.Wxy.transpose() * (rho * y);
  b0 -= lj.Wty;
  return b0;
}

}  // namespace

GeometricConstraint::GeometricConstraint(std::vector<Expr> phi, int n, int m)
    : phi_(std::move(phi)), n_(n), m_(m) {
  if (phi_.empty()) throw DimensionMismatch("constraint needs at least one level function");
  if (K() > m) throw DimensionMismatch("constraint count K must not exceed fiber rank m");
  for (const auto& e : phi_) check_vars(e, n, m, "constraint");
}

Eigen::VectorXd GeometricConstraint::phi_at(const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& y) const {
  EvalContext ctx = full_context(n_, m_, x, y, false);
  Eigen::VectorXd out(K());
  for (int k = 0; k < K(); ++k) out(k) = eval_value(phi_[k], ctx);
  return out;
}

GeometricConstraint::Jet GeometricConstraint::jet_at(const Eigen::VectorXd& x,
                                                     const Eigen::VectorXd& y) const {
  EvalContext ctx = full_context(n_, m_, x, y, true);
  Jet out;
  out.phi.resize(K());
  out.phi_x.resize(K(), n_);
  out.phi_y.resize(K(), m_);
  out.hess_yy.assign(K(), Eigen::MatrixXd());
  out.hess_xy.assign(K(), Eigen::MatrixXd());
  for (int k = 0; k < K(); ++k) {
    SecondOrderJet j = eval_jet(phi_[k], ctx);
    out.phi(k) = j.value;
    out.phi_x.row(k) = j.grad.head(n_);
    out.phi_y.row(k) = j.grad.tail(m_);
    out.hess_yy[k] = j.hess.block(n_, n_, m_, m_);
    out.hess_xy[k] = j.hess.block(0, n_, n_, m_);
  }
  return out;
}

AffineConstraint::AffineConstraint(std::vector<Expr> e0,
                                   std::vector<std::vector<Expr>> basis, int n, int m)
    : e0_(std::move(e0)), basis_(std::move(basis)), n_(n), m_(m) {
  if (static_cast<int>(e0_.size()) != m)
    throw DimensionMismatch("affine constraint: e0 must have m components");
  if (basis_.empty() || r() >= m)
    throw DimensionMismatch("affine constraint: need 1 <= r < m basis sections");
  for (const auto& e : e0_) check_base_vars(e, n, "affine e0");
  for (const auto& row : basis_) {
    if (static_cast<int>(row.size()) != m)
      throw DimensionMismatch("affine constraint: basis rows must have m components");
    for (const auto& e : row) check_base_vars(e, n, "affine basis");
  }
  linear_ = true;
  for (const auto& e : e0_)
    if (!e.is_zero_literal()) linear_ = false;
}

Eigen::VectorXd AffineConstraint::e0_at(const Eigen::VectorXd& x) const {
  EvalContext ctx;
  for (int a = 0; a < n_; ++a) ctx.bindings["x" + std::to_string(a + 1)] = x(a);
  Eigen::VectorXd out(m_);
  for (int i = 0; i < m_; ++i) out(i) = eval_value(e0_[i], ctx);
  return out;
}

Eigen::MatrixXd AffineConstraint::basis_at(const Eigen::VectorXd& x) const {
  EvalContext ctx;
  for (int a = 0; a < n_; ++a) ctx.bindings["x" + std::to_string(a + 1)] = x(a);
  Eigen::MatrixXd out(r(), m_);
  for (int b = 0; b < r(); ++b)
    for (int i = 0; i < m_; ++i) out(b, i) = eval_value(basis_[b][i], ctx);
  return out;
}

Eigen::VectorXd AffineConstraint::embed(const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& y_reduced) const {
  if (y_reduced.size() != r())
    throw DimensionMismatch("affine constraint: reduced state must have r components");
  return e0_at(x) + basis_at(x).transpose() * y_reduced;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd consistency_project(const GeometricConstraint& C, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& y_guess, int max_iter) {
  Eigen::VectorXd y = y_guess;
  for (int it = 0; it < max_iter; ++it) {
    auto jet = C.jet_at(x, y);
    if (jet.phi.cwiseAbs().maxCoeff() <= 1e-12) return y;
    Eigen::MatrixXd gram = jet.phi_y * jet.phi_y.transpose();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(gram);
    if (lu.rcond() < 1e-14)
      throw RankDeficientConstraint("consistency_project: dPhi/dy is rank deficient");
    y -= jet.phi_y.transpose() * lu.solve(jet.phi);
  }
  throw NoConvergence("consistency_project: no convergence after " +
                      std::to_string(max_iter) + " iterations");
}

NonholonomicRhs nonholonomic_rhs(const AlgebroidChart& A, const Lagrangian& lag,
                                 const GeometricConstraint& C, const ForceField* force,
                                 const SystemState& s, double cond_max) {
  const int m = A.m(), K = C.K();
  Eigen::MatrixXd rho = A.rho_at(s.x);
  Eigen::MatrixXd sigma = A.sigma_at(s.x);
  auto c = A.c_at(s.x);
  LegendreJet lj = legendre_jet(lag, s.x, s.y, s.t);
  auto cj = C.jet_at(s.x, s.y);

  Eigen::VectorXd b0 = momentum_rhs(s.y, rho, sigma, c, lj);
  if (force) b0 -= force_at(*force, lag, s.x, s.y, s.t);

  Eigen::VectorXd xdot = rho * s.y;
  Eigen::MatrixXd saddle = Eigen::MatrixXd::Zero(m + K, m + K);
  saddle.topLeftCorner(m, m) = lj.W;
  saddle.topRightCorner(m, K) = -cj.phi_y.transpose();
  saddle.bottomLeftCorner(K, m) = cj.phi_y;
  Eigen::VectorXd rhs(m + K);
  rhs.head(m) = b0;
  rhs.tail(K) = -cj.phi_x * xdot;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(saddle);
  double cond = condition_of(lu);
  if (!(cond <= cond_max))
    throw SingularSaddle("nonholonomic saddle is singular at t = " + std::to_string(s.t) +
                         " (condition estimate " + std::to_string(cond) + ")");
  Eigen::VectorXd sol = lu.solve(rhs);

  NonholonomicRhs out;
  out.xdot = xdot;
  out.ydot = sol.head(m);
  out.mu = sol.tail(K);
  out.condition = cond;
  out.phi_norm = cj.phi.cwiseAbs().maxCoeff();
  Eigen::VectorXd dl = delta_L(A, lag, s.x, s.y, out.ydot, s.t);
  if (force) dl -= force_at(*force, lag, s.x, s.y, s.t);
  out.chetaev_residual = (dl + cj.phi_y.transpose() * out.mu).cwiseAbs().maxCoeff();
  return out;
}

namespace {

// Legendre-type blocks of L - mu_k Phi^k with mu held constant.
LegendreJet frozen_multiplier_jet(const LegendreJet& lj, const GeometricConstraint::Jet& cj,
                                  const Eigen::VectorXd& mu) {
  LegendreJet out = lj;
  out.lam -= cj.phi_y.transpose() * mu;
  out.dLdx -= cj.phi_x.transpose() * mu;
  for (int k = 0; k < mu.size(); ++k) {
    out.W -= mu(k) * cj.hess_yy[k];
    out.Wxy -= mu(k) * cj.hess_xy[k];
  }
  return out;
}

}  // namespace

VakonomicRhs vakonomic_rhs(const AlgebroidChart& A, const Lagrangian& lag,
                           const GeometricConstraint& C, const ForceField* force,
                           const SystemState& s, double cond_max) {
  const int m = A.m(), K = C.K();
  if (s.mu.size() != K)
    throw DimensionMismatch("vakonomic_rhs: state must carry K multipliers");
  Eigen::MatrixXd rho = A.rho_at(s.x);
  Eigen::MatrixXd sigma = A.sigma_at(s.x);
  auto c = A.c_at(s.x);
  LegendreJet lj = legendre_jet(lag, s.x, s.y, s.t);
  auto cj = C.jet_at(s.x, s.y);
  LegendreJet tilde = frozen_multiplier_jet(lj, cj, s.mu);

  Eigen::VectorXd b0 = momentum_rhs(s.y, rho, sigma, c, tilde);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(m);
  if (force) eta = force_at(*force, lag, s.x, s.y, s.t);
  b0 -= eta;

  Eigen::VectorXd xdot = rho * s.y;
  Eigen::MatrixXd saddle = Eigen::MatrixXd::Zero(m + K, m + K);
  saddle.topLeftCorner(m, m) = tilde.W;
  saddle.topRightCorner(m, K) = -cj.phi_y.transpose();
  saddle.bottomLeftCorner(K, m) = cj.phi_y;
  Eigen::VectorXd rhs(m + K);
  rhs.head(m) = b0;
  rhs.tail(K) = -cj.phi_x * xdot;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(saddle);
  double cond = condition_of(lu);
  if (!(cond <= cond_max))
    throw SingularSaddle("vakonomic saddle is singular at t = " + std::to_string(s.t) +
                         " (condition estimate " + std::to_string(cond) + ")");
  Eigen::VectorXd sol = lu.solve(rhs);

  VakonomicRhs out;
  out.xdot = xdot;
  out.ydot = sol.head(m);
  out.mudot = sol.tail(K);
  out.condition = cond;
  out.phi_norm = cj.phi.cwiseAbs().maxCoeff();

  // Equation residual assembled from scratch: deltaL - sum_k mu_k deltaPhi^k
  // + Phi_y^T mudot - eta, with deltaPhi expanded like deltaL (no t-term).
  Eigen::VectorXd res = delta_L(A, lag, s.x, s.y, out.ydot, s.t);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd dphi = sigma.transpose() * cj.phi_x.row(k).transpose();
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        for (int l = 0; l < m; ++l) dphi(j) += s.y(i) * c[l](i, j) * cj.phi_y(k, l);
    dphi -= cj.hess_xy[k].transpose() * xdot;
    dphi -= cj.hess_yy[k].transpose() * out.ydot;
    res -= s.mu(k) * dphi;
  }
  res += cj.phi_y.transpose() * out.mudot;
  res -= eta;
  out.identity_residual = res.cwiseAbs().maxCoeff();
  return out;
}

double vakonomic_lift_residual(const AlgebroidChart& A, const Lagrangian& lag,
                               const GeometricConstraint& C, const Trajectory& gamma) {
  const int N = gamma.size();
  if (N < 3) throw TooFewSamples("vakonomic_lift_residual: need at least 3 samples");
  Eigen::MatrixXd xs(N, A.n()), xis(N, A.m());
  Eigen::MatrixXd xdots(N, A.n()), xidots(N, A.m());
  for (int i = 0; i < N; ++i) {
    const auto& st = gamma.states[i];
    LegendreJet lj = legendre_jet(lag, st.x, st.y, gamma.time_at(i));
    auto cj = C.jet_at(st.x, st.y);
    CotangentEPoint lifted{st.x, st.y, lj.dLdx - cj.phi_x.transpose() * st.mu,
                           lj.lam - cj.phi_y.transpose() * st.mu};
    TangentEDualPoint image = epsilon_map(A, lifted);
    xs.row(i) = st.x;
    xis.row(i) = image.xi;
    xdots.row(i) = image.xdot;
    xidots.row(i) = image.xidot;
  }
  double worst = 0.0;
  for (int i = 1; i + 1 < N; ++i) {
    Eigen::VectorXd dx = (xs.row(i + 1) - xs.row(i - 1)).transpose() / (2.0 * gamma.h);
    Eigen::VectorXd dxi = (xis.row(i + 1) - xis.row(i - 1)).transpose() / (2.0 * gamma.h);
    worst = std::max(worst, (dx - xdots.row(i).transpose()).cwiseAbs().maxCoeff());
    worst = std::max(worst, (dxi - xidots.row(i).transpose()).cwiseAbs().maxCoeff());
  }
  return worst;
}

double vakonomic_equation_residual(const AlgebroidChart& A, const Lagrangian& lag,
                                   const GeometricConstraint& C, const ForceField* force,
                                   const Trajectory& gamma) {
  const int N = gamma.size();
  if (N < 3) throw TooFewSamples("vakonomic_equation_residual: need at least 3 samples");
  Eigen::MatrixXd ydots = time_derivative(gamma.ys(), gamma.h);
  Eigen::MatrixXd mudots = time_derivative(gamma.mus(), gamma.h);
  double worst = 0.0;
  for (int i = 1; i + 1 < N; ++i) {
    const auto& st = gamma.states[i];
    double t = gamma.time_at(i);
    Eigen::MatrixXd sigma = A.sigma_at(st.x);
    auto c = A.c_at(st.x);
    Eigen::VectorXd xdot = A.rho_at(st.x) * st.y;
    Eigen::VectorXd ydot = ydots.row(i).transpose();
    auto cj = C.jet_at(st.x, st.y);

    Eigen::VectorXd res = delta_L(A, lag, st.x, st.y, ydot, t);
    for (int k = 0; k < C.K(); ++k) {
      Eigen::VectorXd dphi = sigma.transpose() * cj.phi_x.row(k).transpose();
      for (int j = 0; j < A.m(); ++j)
        for (int ii = 0; ii < A.m(); ++ii)
          for (int l = 0; l < A.m(); ++l) dphi(j) += st.y(ii) * c[l](ii, j) * cj.phi_y(k, l);
      dphi -= cj.hess_xy[k].transpose() * xdot;
      dphi -= cj.hess_yy[k].transpose() * ydot;
      res -= st.mu(k) * dphi;
    }
    res += cj.phi_y.transpose() * mudots.row(i).transpose();
    if (force) res -= force_at(*force, lag, st.x, st.y, t);
    worst = std::max(worst, res.cwiseAbs().maxCoeff());
  }
  return worst;
}

double dalembert_residual(const AlgebroidChart& A, const Lagrangian& lag,
                          const GeometricConstraint& C, const ForceField* force,
                          const Trajectory& gamma, double drift_tol) {
  const int N = gamma.size();
  if (N < 3) throw TooFewSamples("dalembert_residual: need at least 3 samples");
  Eigen::MatrixXd ydots = time_derivative(gamma.ys(), gamma.h);
  double worst = 0.0;
  for (int i = 0; i < N; ++i) {
    const auto& st = gamma.states[i];
    double t = gamma.time_at(i);
    auto cj = C.jet_at(st.x, st.y);
    if (cj.phi.cwiseAbs().maxCoeff() > drift_tol)
      throw ConstraintDrift("dalembert_residual: trajectory violates the constraint at t = " +
                            std::to_string(t));
    Eigen::VectorXd dl = delta_L(A, lag, st.x, st.y, ydots.row(i).transpose(), t);
    if (force) dl -= force_at(*force, lag, st.x, st.y, t);
    Eigen::MatrixXd gram = cj.phi_y * cj.phi_y.transpose();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(gram);
    if (lu.rcond() < 1e-14)
      throw RankDeficientConstraint("dalembert_residual: dPhi/dy rank deficient at t = " +
                                    std::to_string(t));
    Eigen::VectorXd remainder = dl - cj.phi_y.transpose() * lu.solve(cj.phi_y * dl);
    worst = std::max(worst, remainder.cwiseAbs().maxCoeff());
  }
  return worst;
}

HolonomicityReport is_holonomic(const AlgebroidChart& A, const AffineConstraint& aff,
                                const std::vector<Eigen::VectorXd>& sample_points,
                                double tol) {
  if (sample_points.empty())
    throw TooFewSamples("is_holonomic: need at least one sample point");

  // The bracket-closure criterion needs a quasi-Lie chart.
  for (const auto& x : sample_points) {
    auto c = A.c_at(x);
    double skew = 0.0;
    for (const auto& ck : c)
      skew = std::max(skew, (ck + ck.transpose()).cwiseAbs().maxCoeff());
    double rs = (A.rho_at(x) - A.sigma_at(x)).cwiseAbs().maxCoeff();
    if (skew > tol || rs > tol)
      throw NotQuasiLie("is_holonomic: chart is not quasi-Lie (skew residual " +
                        std::to_string(skew) + ", anchor residual " + std::to_string(rs) + ")");
  }

  const int r = aff.r(), m = aff.m();
  auto section_of = [&](int idx) {  // idx < 0: e0; else e0 + basis[idx]
    SectionExpr s;
    s.components.reserve(m);
    for (int i = 0; i < m; ++i) {
      if (idx < 0)
        s.components.push_back(aff.e0()[i]);
      else
        s.components.push_back(aff.e0()[i] + aff.basis()[idx][i]);
    }
    return s;
  };

  HolonomicityReport report;
  report.samples = static_cast<int>(sample_points.size());
  for (const auto& x : sample_points) {
    Eigen::MatrixXd B = aff.basis_at(x);
    Eigen::MatrixXd gram = B * B.transpose();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(gram);
    if (lu.rcond() < 1e-12)
      throw FrameDegenerate("is_holonomic: basis sections are dependent at a sample point");
    auto offspan = [&](const Eigen::VectorXd& w) {
      Eigen::VectorXd rem = w - B.transpose() * lu.solve(B * w);
      return rem.cwiseAbs().maxCoeff();
    };
    for (int a = 0; a < r; ++a) {
      for (int b = a + 1; b < r; ++b)
        report.max_offspan_residual =
            std::max(report.max_offspan_residual,
                     offspan(section_bracket(A, section_of(a), section_of(b), x)));
      report.max_offspan_residual =
          std::max(report.max_offspan_residual,
                   offspan(section_bracket(A, section_of(a), section_of(-1), x)));
    }
  }
  report.is_holonomic = report.max_offspan_residual <= tol;
  return report;
}

ReducedRhs affine_reduced_rhs(const AlgebroidChart& A, const Lagrangian& lag,
                              const AffineConstraint& aff, const SystemState& s,
                              double cond_max) {
  const int n = A.n(), m = A.m(), r = aff.r();
  if (s.y.size() != r)
    throw DimensionMismatch("affine_reduced_rhs: state fiber must be reduced (size r)");

  // Values and x-derivatives of the frame data.
  EvalContext ctx;
  for (int a = 0; a < n; ++a) ctx.bindings["x" + std::to_string(a + 1)] = s.x(a);
  for (int a = 0; a < n; ++a) ctx.seed_vars.push_back("x" + std::to_string(a + 1));
  Eigen::VectorXd e0v(m);
  Eigen::MatrixXd de0(n, m);  // de0(a, i) = d_a e0^i
  Eigen::MatrixXd B(r, m);
  std::vector<Eigen::MatrixXd> dB(n, Eigen::MatrixXd(r, m));
  for (int i = 0; i < m; ++i) {
    auto j = eval_jet(aff.e0()[i], ctx);
    e0v(i) = j.value;
    de0.col(i) = j.grad;
  }
  for (int b = 0; b < r; ++b)
    for (int i = 0; i < m; ++i) {
      auto j = eval_jet(aff.basis()[b][i], ctx);
      B(b, i) = j.value;
      for (int a = 0; a < n; ++a) dB[a](b, i) = j.grad(a);
    }
  {
    Eigen::PartialPivLU<Eigen::MatrixXd> glu(B * B.transpose());
    if (glu.rcond() < 1e-12)
      throw FrameDegenerate("affine_reduced_rhs: basis sections are dependent");
  }

  Eigen::VectorXd y_emb = e0v + B.transpose() * s.y;
  LegendreJet lj = legendre_jet(lag, s.x, y_emb, s.t);
  Eigen::MatrixXd rho = A.rho_at(s.x);
  Eigen::MatrixXd sigma = A.sigma_at(s.x);
  Eigen::VectorXd xdot = rho * y_emb;

  // d/dt of the embedded fiber at frozen reduced velocity.
  Eigen::VectorXd ydot_known = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd dframe(n, m);  // dframe(a, :) = d_a (e0 + B^T y_red)
  for (int a = 0; a < n; ++a) {
    dframe.row(a) = de0.col(a).transpose() + s.y.transpose() * dB[a];
    ydot_known += xdot(a) * dframe.row(a).transpose();
  }

  // Section u = e0 + y_red^e E_e with the reduced coordinates frozen.
  SectionExpr u;
  u.components.reserve(m);
  for (int i = 0; i < m; ++i) {
    Expr comp = aff.e0()[i];
    for (int e = 0; e < r; ++e)
      comp = comp + Expr::number(s.y(e)) * aff.basis()[e][i];
    u.components.push_back(comp);
  }

  Eigen::MatrixXd M(r, r);
  Eigen::VectorXd rhs(r);
  for (int b = 0; b < r; ++b) {
    Eigen::VectorXd Eb = B.row(b).transpose();
    SectionExpr Eb_section{aff.basis()[b]};
    Eigen::VectorXd bracket = section_bracket(A, u, Eb_section, s.x);

    double value = bracket.dot(lj.lam);
    for (int a = 0; a < n; ++a) {
      double sigma_eb = sigma.row(a).dot(Eb);
      value += sigma_eb * (lj.dLdx(a) + lj.lam.dot(dframe.row(a).transpose()));
    }
    // subtract the known part of d/dt (E_b . lam)
    for (int a = 0; a < n; ++a)
      value -= xdot(a) * dB[a].row(b).dot(lj.lam);
    value -= Eb.dot(lj.Wxy.transpose() * xdot + lj.W.transpose() * ydot_known + lj.Wty);
    rhs(b) = value;
    for (int cidx = 0; cidx < r; ++cidx)
      M(b, cidx) = B.row(b) * lj.W * B.row(cidx).transpose();
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  double cond = condition_of(lu);
  if (!(cond <= cond_max))
    throw SingularReducedHessian(
        "affine_reduced_rhs: reduced Hessian singular at t = " + std::to_string(s.t) +
        " (condition estimate " + std::to_string(cond) + ")");

  ReducedRhs out;
  out.xdot = xdot;
  out.ydot = lu.solve(rhs);
  out.condition = cond;
  return out;
}

}  // namespace algmech
