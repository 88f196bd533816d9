#include "algmech/algebroid.hpp"

#include <cmath>
#include <random>

namespace algmech {

namespace {

std::vector<std::string> coordinate_names(const char* prefix, int count) {
  std::vector<std::string> names;
  names.reserve(count);
  for (int i = 1; i <= count; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

void check_free_vars(const Expr& e, const std::vector<std::string>& allowed,
                     const char* what) {
  for (const auto& v : e.free_vars()) {
    bool ok = false;
    for (const auto& a : allowed)
      if (a == v) { ok = true; break; }
    if (!ok)
      throw DimensionMismatch(std::string(what) + ": unexpected variable '" + v +
                              "' (structure functions may depend on base coordinates only)");
  }
}

}  // namespace

AlgebroidChart::AlgebroidChart(int n, int m,
                               std::vector<std::vector<Expr>> rho,
                               std::vector<std::vector<Expr>> sigma,
                               std::vector<std::vector<std::vector<Expr>>> c)
    : n_(n), m_(m), rho_(std::move(rho)), sigma_(std::move(sigma)), c_(std::move(c)),
      x_names_(coordinate_names("x", n)), y_names_(coordinate_names("y", m)) {
  if (n < 1 || m < 1) throw DimensionMismatch("chart needs n >= 1 and m >= 1");
  auto check_anchor = [&](const std::vector<std::vector<Expr>>& a, const char* name) {
    if (static_cast<int>(a.size()) != n)
      throw DimensionMismatch(std::string(name) + " must have n rows");
    for (const auto& row : a) {
      if (static_cast<int>(row.size()) != m)
        throw DimensionMismatch(std::string(name) + " rows must have m entries");
      for (const auto& e : row) check_free_vars(e, x_names_, name);
    }
  };
  check_anchor(rho_, "rho");
  check_anchor(sigma_, "sigma");
  if (static_cast<int>(c_.size()) != m) throw DimensionMismatch("c must have m slices");
  for (const auto& slice : c_) {
    if (static_cast<int>(slice.size()) != m)
      throw DimensionMismatch("c slices must be m x m");
    for (const auto& row : slice) {
      if (static_cast<int>(row.size()) != m)
        throw DimensionMismatch("c slices must be m x m");
      for (const auto& e : row) check_free_vars(e, x_names_, "c");
    }
  }
}

EvalContext AlgebroidChart::base_context(const Eigen::VectorXd& x, bool seed_x) const {
  if (x.size() != n_) throw DimensionMismatch("base point has wrong dimension");
  EvalContext ctx;
  for (int a = 0; a < n_; ++a) ctx.bindings[x_names_[a]] = x(a);
  if (seed_x) ctx.seed_vars = x_names_;
  return ctx;
}

Eigen::MatrixXd AlgebroidChart::rho_at(const Eigen::VectorXd& x) const {
  EvalContext ctx = base_context(x, false);
  Eigen::MatrixXd out(n_, m_);
  for (int a = 0; a < n_; ++a)
    for (int i = 0; i < m_; ++i) out(a, i) = eval_value(rho_[a][i], ctx);
  return out;
}

Eigen::MatrixXd AlgebroidChart::sigma_at(const Eigen::VectorXd& x) const {
  EvalContext ctx = base_context(x, false);
  Eigen::MatrixXd out(n_, m_);
  for (int a = 0; a < n_; ++a)
    for (int i = 0; i < m_; ++i) out(a, i) = eval_value(sigma_[a][i], ctx);
  return out;
}

std::vector<Eigen::MatrixXd> AlgebroidChart::c_at(const Eigen::VectorXd& x) const {
  EvalContext ctx = base_context(x, false);
  std::vector<Eigen::MatrixXd> out(m_, Eigen::MatrixXd(m_, m_));
  for (int k = 0; k < m_; ++k)
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) out[k](i, j) = eval_value(c_[k][i][j], ctx);
  return out;
}

AlgebroidChart::StructureJet AlgebroidChart::structure_jet(const Eigen::VectorXd& x) const {
  EvalContext ctx = base_context(x, true);
  StructureJet sj;
  sj.rho.resize(n_, m_);
  sj.sigma.resize(n_, m_);
  sj.c.assign(m_, Eigen::MatrixXd(m_, m_));
  sj.d_rho.assign(n_, Eigen::MatrixXd(n_, m_));
  sj.d_sigma.assign(n_, Eigen::MatrixXd(n_, m_));
  sj.d_c.assign(n_, std::vector<Eigen::MatrixXd>(m_, Eigen::MatrixXd(m_, m_)));
  for (int a = 0; a < n_; ++a)
    for (int i = 0; i < m_; ++i) {
      auto jr = eval_jet(rho_[a][i], ctx);
      auto js = eval_jet(sigma_[a][i], ctx);
      sj.rho(a, i) = jr.value;
      sj.sigma(a, i) = js.value;
      for (int e = 0; e < n_; ++e) {
        sj.d_rho[e](a, i) = jr.grad(e);
        sj.d_sigma[e](a, i) = js.grad(e);
      }
    }
  for (int k = 0; k < m_; ++k)
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) {
        auto jc = eval_jet(c_[k][i][j], ctx);
        sj.c[k](i, j) = jc.value;
        for (int e = 0; e < n_; ++e) sj.d_c[e][k](i, j) = jc.grad(e);
      }
  return sj;
}

// ---------------------------------------------------------------------------
// Maps and pairings
// ---------------------------------------------------------------------------

TangentEDualPoint epsilon_map(const AlgebroidChart& A, const CotangentEPoint& w) {
  if (w.x.size() != A.n() || w.p.size() != A.n() || w.y.size() != A.m() ||
      w.xi.size() != A.m())
    throw DimensionMismatch("epsilon_map: point dimensions do not match chart");
  Eigen::MatrixXd rho = A.rho_at(w.x);
  Eigen::MatrixXd sigma = A.sigma_at(w.x);
  auto c = A.c_at(w.x);

  TangentEDualPoint out;
  out.x = w.x;
  out.xi = w.xi;
  out.xdot = rho * w.y;
  out.xidot = sigma.transpose() * w.p;
  for (int j = 0; j < A.m(); ++j)
    for (int k = 0; k < A.m(); ++k)
      for (int i = 0; i < A.m(); ++i) out.xidot(j) += c[k](i, j) * w.y(i) * w.xi(k);
  return out;
}

TangentEPoint kappa_apply(const AlgebroidChart& A, const TangentEPoint& v,
                          const Eigen::VectorXd& e_fiber) {
  if (v.x.size() != A.n() || v.y.size() != A.m() || v.xdot.size() != A.n() ||
      v.ydot.size() != A.m() || e_fiber.size() != A.m())
    throw DimensionMismatch("kappa_apply: point dimensions do not match chart");
  Eigen::MatrixXd rho = A.rho_at(v.x);
  Eigen::VectorXd expected = rho * e_fiber;
  double tol = 1e-8 * (1.0 + v.xdot.cwiseAbs().maxCoeff());
  double residual = (v.xdot - expected).cwiseAbs().maxCoeff();
  if (residual > tol)
    throw CompatibilityViolation(
        "kappa_apply: xdot != rho(x) e_fiber, residual " + std::to_string(residual));

  Eigen::MatrixXd sigma = A.sigma_at(v.x);
  auto c = A.c_at(v.x);
  TangentEPoint out;
  out.x = v.x;
  out.y = e_fiber;
  out.xdot = sigma * v.y;
  out.ydot = v.ydot;
  for (int j = 0; j < A.m(); ++j)
    for (int k = 0; k < A.m(); ++k)
      for (int l = 0; l < A.m(); ++l) out.ydot(j) += c[j](k, l) * e_fiber(k) * v.y(l);
  return out;
}

double tangent_pairing(const TangentEPoint& v, const TangentEDualPoint& w) {
  if (v.y.size() != w.xi.size() || v.x.size() != w.x.size())
    throw DimensionMismatch("tangent_pairing: dimension mismatch");
  double tol = 1e-8 * (1.0 + v.xdot.cwiseAbs().maxCoeff());
  if ((v.x - w.x).cwiseAbs().maxCoeff() > tol ||
      (v.xdot - w.xdot).cwiseAbs().maxCoeff() > tol)
    throw CompatibilityViolation("tangent_pairing: points lie over different base tangents");
  return v.ydot.dot(w.xi) + v.y.dot(w.xidot);
}

double kappa_duality_residual(const AlgebroidChart& A, const TangentEPoint& v,
                              const Eigen::VectorXd& e_fiber, const CotangentEPoint& w) {
  TangentEPoint flipped = kappa_apply(A, v, e_fiber);
  double tol = 1e-8 * (1.0 + e_fiber.cwiseAbs().maxCoeff());
  if ((w.x - v.x).cwiseAbs().maxCoeff() > tol ||
      (w.y - e_fiber).cwiseAbs().maxCoeff() > tol)
    throw CompatibilityViolation("kappa_duality_residual: w not based at kappa output");
  double lhs = tangent_pairing(v, epsilon_map(A, w));
  double rhs = flipped.xdot.dot(w.p) + flipped.ydot.dot(w.xi);
  return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------
// Admissibility and variations
// ---------------------------------------------------------------------------

AdmissibilityResult is_admissible(const AlgebroidChart& A, const Trajectory& gamma,
                                  double tol) {
  if (gamma.size() < 3) throw TooFewSamples("is_admissible: need at least 3 samples");
  double worst = 0.0;
  for (int i = 1; i + 1 < gamma.size(); ++i) {
    Eigen::VectorXd dx = (gamma.states[i + 1].x - gamma.states[i - 1].x) / (2.0 * gamma.h);
    Eigen::VectorXd anchor = A.rho_at(gamma.states[i].x) * gamma.states[i].y;
    worst = std::max(worst, (dx - anchor).cwiseAbs().maxCoeff());
  }
  return {worst <= tol, worst};
}

double holonomic_vector_residual(const AlgebroidChart& A, const TangentEPoint& v) {
  if (v.x.size() != A.n() || v.y.size() != A.m())
    throw DimensionMismatch("holonomic_vector_residual: dimensions do not match");
  return (v.xdot - A.rho_at(v.x) * v.y).cwiseAbs().maxCoeff();
}

std::vector<TangentEPoint> admissible_variation(const AlgebroidChart& A,
                                                const Trajectory& gamma,
                                                const Eigen::MatrixXd& f) {
  if (f.rows() != gamma.size() || f.cols() != A.m())
    throw GridMismatch("admissible_variation: f must be sampled on gamma's grid");
  Eigen::MatrixXd df = time_derivative(f, gamma.h);
  std::vector<TangentEPoint> out(gamma.size());
  for (int s = 0; s < gamma.size(); ++s) {
    const auto& st = gamma.states[s];
    Eigen::MatrixXd sigma = A.sigma_at(st.x);
    auto c = A.c_at(st.x);
    TangentEPoint p;
    p.x = st.x;
    p.y = st.y;
    p.xdot = sigma * f.row(s).transpose();
    p.ydot = df.row(s).transpose();
    for (int k = 0; k < A.m(); ++k)
      for (int i = 0; i < A.m(); ++i)
        for (int j = 0; j < A.m(); ++j) p.ydot(k) += c[k](i, j) * st.y(i) * f(s, j);
    out[s] = std::move(p);
  }
  return out;
}

Eigen::VectorXd section_bracket(const AlgebroidChart& A, const SectionExpr& X,
                                const SectionExpr& Y, const Eigen::VectorXd& x) {
  if (static_cast<int>(X.components.size()) != A.m() ||
      static_cast<int>(Y.components.size()) != A.m())
    throw DimensionMismatch("section_bracket: sections must have m components");
  EvalContext ctx = A.base_context(x, true);
  Eigen::VectorXd Xv(A.m()), Yv(A.m());
  Eigen::MatrixXd dX(A.n(), A.m()), dY(A.n(), A.m());
  for (int i = 0; i < A.m(); ++i) {
    auto jx = eval_jet(X.components[i], ctx);
    auto jy = eval_jet(Y.components[i], ctx);
    Xv(i) = jx.value;
    Yv(i) = jy.value;
    dX.col(i) = jx.grad;
    dY.col(i) = jy.grad;
  }
  Eigen::MatrixXd rho = A.rho_at(x);
  Eigen::MatrixXd sigma = A.sigma_at(x);
  auto c = A.c_at(x);

  Eigen::VectorXd out(A.m());
  Eigen::VectorXd rhoX = rho * Xv;    // rho^a_i X^i
  Eigen::VectorXd sigmaY = sigma * Yv;
  for (int k = 0; k < A.m(); ++k) {
    double v = Xv.dot(c[k] * Yv);
    v += rhoX.dot(dY.col(k));
    v -= sigmaY.dot(dX.col(k));
    out(k) = v;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Axiom checks
// ---------------------------------------------------------------------------

namespace {

// Probe function on E*, held as value/gradient/Hessian with respect to the
// n + m coordinates (x, xi).
struct ProbeJet {
  double value;
  Eigen::VectorXd grad;   // size n + m
  Eigen::MatrixXd hess;   // (n+m) x (n+m)
};

// Bracket of the linear bivector associated with the chart:
//   {P,Q} = c^k_{ij} xi_k P_{xi_i} Q_{xi_j} + rho^b_i P_{xi_i} Q_{x^b}
//           - sigma^a_j P_{x^a} Q_{xi_j}.
double bracket_value(const AlgebroidChart::StructureJet& sj, int m,
                     const Eigen::VectorXd& xi, const Eigen::VectorXd& Px,
                     const Eigen::VectorXd& Pxi, const Eigen::VectorXd& Qx,
                     const Eigen::VectorXd& Qxi) {
  double v = 0.0;
  for (int k = 0; k < m; ++k) v += xi(k) * Pxi.dot(sj.c[k] * Qxi);
  v += Pxi.dot(sj.rho.transpose() * Qx);
  v -= Px.dot(sj.sigma * Qxi);
  return v;
}

// Value and full (x, xi) gradient of {P,Q} at the evaluation point.
void bracket_with_grad(const AlgebroidChart::StructureJet& sj, int n, int m,
                       const Eigen::VectorXd& xi, const ProbeJet& P, const ProbeJet& Q,
                       double& value, Eigen::VectorXd& grad) {
  auto Px = P.grad.head(n), Pxi = P.grad.tail(m);
  auto Qx = Q.grad.head(n), Qxi = Q.grad.tail(m);
  value = bracket_value(sj, m, xi, Px, Pxi, Qx, Qxi);

  grad.setZero(n + m);
  for (int e = 0; e < n; ++e) {
    double g = 0.0;
    for (int k = 0; k < m; ++k) g += xi(k) * Pxi.dot(sj.d_c[e][k] * Qxi);
    g += Pxi.dot(sj.d_rho[e].transpose() * Qx);
    g -= Px.dot(sj.d_sigma[e] * Qxi);
    // chain rule through the probes' second derivatives
    Eigen::VectorXd dPx = P.hess.col(e).head(n), dPxi = P.hess.col(e).tail(m);
    Eigen::VectorXd dQx = Q.hess.col(e).head(n), dQxi = Q.hess.col(e).tail(m);
    g += bracket_value(sj, m, xi, dPx, dPxi, Qx, Qxi);
    g += bracket_value(sj, m, xi, Px, Pxi, dQx, dQxi);
    grad(e) = g;
  }
  for (int l = 0; l < m; ++l) {
    double g = Pxi.dot(sj.c[l] * Qxi);
    Eigen::VectorXd dPx = P.hess.col(n + l).head(n), dPxi = P.hess.col(n + l).tail(m);
    Eigen::VectorXd dQx = Q.hess.col(n + l).head(n), dQxi = Q.hess.col(n + l).tail(m);
    g += bracket_value(sj, m, xi, dPx, dPxi, Qx, Qxi);
    g += bracket_value(sj, m, xi, Px, Pxi, dQx, dQxi);
    grad(n + l) = g;
  }
}

double jacobiator(const AlgebroidChart::StructureJet& sj, int n, int m,
                  const Eigen::VectorXd& xi, const ProbeJet& f, const ProbeJet& g,
                  const ProbeJet& h) {
  auto term = [&](const ProbeJet& a, const ProbeJet& b, const ProbeJet& cc) {
    double val;
    Eigen::VectorXd grad;
    bracket_with_grad(sj, n, m, xi, a, b, val, grad);
    return bracket_value(sj, m, xi, grad.head(n), grad.tail(m),
                         cc.grad.head(n), cc.grad.tail(m));
  };
  return term(f, g, h) + term(g, h, f) + term(h, f, g);
}

}  // namespace

AxiomReport check_axioms(const AlgebroidChart& A,
                         const std::vector<Eigen::VectorXd>& sample_points,
                         int probe_count, std::uint64_t seed, double tol) {
  if (sample_points.empty())
    throw TooFewSamples("check_axioms: need at least one sample point");
  const int n = A.n(), m = A.m();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  AxiomReport report;
  report.samples_used = static_cast<int>(sample_points.size());

  // Probe functions on E*: the n + m coordinates, then random affine combos.
  std::vector<Expr> probes;
  for (int a = 0; a < n; ++a) probes.push_back(Expr::variable("x" + std::to_string(a + 1)));
  for (int i = 0; i < m; ++i) probes.push_back(Expr::variable("xi" + std::to_string(i + 1)));
  for (int p = 0; p < probe_count; ++p) {
    Expr e = Expr::number(unit(rng));
    for (int a = 0; a < n; ++a)
      e = e + Expr::number(unit(rng)) * Expr::variable("x" + std::to_string(a + 1));
    for (int i = 0; i < m; ++i)
      e = e + Expr::number(unit(rng)) * Expr::variable("xi" + std::to_string(i + 1));
    probes.push_back(e);
  }
  std::vector<std::string> star_vars;
  for (int a = 0; a < n; ++a) star_vars.push_back("x" + std::to_string(a + 1));
  for (int i = 0; i < m; ++i) star_vars.push_back("xi" + std::to_string(i + 1));

  const int coord_probes = n + m;
  std::uniform_int_distribution<int> probe_pick(0, static_cast<int>(probes.size()) - 1);

  for (const auto& x : sample_points) {
    auto sj = A.structure_jet(x);

    for (int k = 0; k < m; ++k)
      report.skew_residual =
          std::max(report.skew_residual, (sj.c[k] + sj.c[k].transpose()).cwiseAbs().maxCoeff());
    report.rho_sigma_residual =
        std::max(report.rho_sigma_residual, (sj.rho - sj.sigma).cwiseAbs().maxCoeff());

    // rho^b_k c^k_{ij} = rho^a_i d_a rho^b_j - rho^a_j d_a rho^b_i
    for (int b = 0; b < n; ++b)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          double lhs = 0.0;
          for (int k = 0; k < m; ++k) lhs += sj.rho(b, k) * sj.c[k](i, j);
          double rhs = 0.0;
          for (int a = 0; a < n; ++a)
            rhs += sj.rho(a, i) * sj.d_rho[a](b, j) - sj.rho(a, j) * sj.d_rho[a](b, i);
          report.anchor_hom_residual = std::max(report.anchor_hom_residual, std::abs(lhs - rhs));
        }

    // Jacobi identity of the bivector on probe functions at random fiber points.
    Eigen::VectorXd xi(m);
    for (int i = 0; i < m; ++i) xi(i) = unit(rng);
    EvalContext ctx;
    for (int a = 0; a < n; ++a) ctx.bindings["x" + std::to_string(a + 1)] = x(a);
    for (int i = 0; i < m; ++i) ctx.bindings["xi" + std::to_string(i + 1)] = xi(i);
    ctx.seed_vars = star_vars;

    std::vector<ProbeJet> jets(probes.size());
    for (std::size_t p = 0; p < probes.size(); ++p) {
      auto j = eval_jet(probes[p], ctx);
      // expression may not mention every coordinate; expand to full size
      ProbeJet pj;
      pj.value = j.value;
      pj.grad.setZero(n + m);
      pj.hess.setZero(n + m, n + m);
      const auto& vars = probes[p].free_vars();
      for (std::size_t a = 0; a < vars.size(); ++a) {
        int slot = -1;
        for (int s = 0; s < n + m; ++s)
          if (star_vars[s] == vars[a]) slot = s;
        pj.grad(slot) = j.grad(a);
        for (std::size_t b = 0; b < vars.size(); ++b) {
          int slot2 = -1;
          for (int s = 0; s < n + m; ++s)
            if (star_vars[s] == vars[b]) slot2 = s;
          pj.hess(slot, slot2) = j.hess(a, b);
        }
      }
      jets[p] = std::move(pj);
    }

    for (int p = 0; p < coord_probes; ++p)
      for (int q = 0; q < coord_probes; ++q)
        for (int r = 0; r < coord_probes; ++r)
          report.jacobiator_residual =
              std::max(report.jacobiator_residual,
                       std::abs(jacobiator(sj, n, m, xi, jets[p], jets[q], jets[r])));
    for (int t = 0; t < probe_count; ++t)
      report.jacobiator_residual = std::max(
          report.jacobiator_residual,
          std::abs(jacobiator(sj, n, m, xi, jets[probe_pick(rng)], jets[probe_pick(rng)],
                              jets[probe_pick(rng)])));
  }

  report.is_quasi_lie = report.skew_residual <= tol && report.rho_sigma_residual <= tol;
  report.is_lie = report.is_quasi_lie && report.jacobiator_residual <= tol &&
                  report.anchor_hom_residual <= tol;
  return report;
}

AlgebroidChart adjoint(const AlgebroidChart& A) {
  const int m = A.m();
  std::vector<std::vector<std::vector<Expr>>> c_adj(
      m, std::vector<std::vector<Expr>>(m, std::vector<Expr>(m, Expr::number(0.0))));
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) c_adj[k][i][j] = A.c()[k][j][i].negated();
  return AlgebroidChart(A.n(), m, A.sigma(), A.rho(), std::move(c_adj));
}

AlgebroidChart opposite(const AlgebroidChart& A) {
  const int n = A.n(), m = A.m();
  auto negate = [](const std::vector<std::vector<Expr>>& src) {
    auto out = src;
    for (auto& row : out)
      for (auto& e : row) e = e.negated();
    return out;
  };
  auto c_op = A.c();
  for (auto& slice : c_op)
    for (auto& row : slice)
      for (auto& e : row) e = e.negated();
  return AlgebroidChart(n, m, negate(A.rho()), negate(A.sigma()), std::move(c_op));
}

}  // namespace algmech
