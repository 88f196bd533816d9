#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>

#include "algmech/algebroid.hpp"
#include "algmech/expr.hpp"
#include "algmech/trajectory.hpp"

namespace algmech {

/// Scalar Lagrangian L(x, y, t; params) on a chart of dimensions (n, m).
class Lagrangian {
 public:
  Lagrangian(Expr L, int n, int m, std::map<std::string, double> params = {});

  const Expr& expr() const { return L_; }
  const std::map<std::string, double>& params() const { return params_; }
  int n() const { return n_; }
  int m() const { return m_; }

  double value(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double t) const;

  EvalContext context(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double t,
                      bool seeded) const;

 private:
  Expr L_;
  int n_, m_;
  std::map<std::string, double> params_;
};

/// First and second derivative blocks of L at a point: the Legendre value
/// lam = dL/dy together with everything the Euler-Lagrange expansion needs.
struct LegendreJet {
  double value = 0.0;
  Eigen::VectorXd lam;    // dL/dy            (m)
  Eigen::VectorXd dLdx;   // dL/dx            (n)
  Eigen::MatrixXd W;      // d2L/dy dy        (m x m, symmetric)
  Eigen::MatrixXd Wxy;    // d2L/dx dy        (n x m)
  Eigen::VectorXd Wty;    // d2L/dt dy        (m)
};

/// Time-dependent field of forces, valued in E* (covector components).
struct ForceField {
  std::vector<Expr> F;  // m components over {x, y, t, params}
};

Eigen::VectorXd force_at(const ForceField& F, const Lagrangian& lag,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& y, double t);

LegendreJet legendre_jet(const Lagrangian& lag, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& y, double t);

/// epsilon applied to dL: (x, lam, rho y, c-term + sigma-term). Parametrizes
/// the implicit phase dynamics in TE*.
TangentEDualPoint tulczyjew_differential(const AlgebroidChart& A, const Lagrangian& lag,
                                         const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& y, double t);

/// The Euler-Lagrange expression as a fiber of E*:
///   deltaL_j = sigma^a_j dL/dx^a + y^i c^k_{ij} dL/dy^k
///              - y^i rho^a_i d2L/dx^a dy^j - ydot^k d2L/dy^k dy^j
///              - d2L/dt dy^j.
/// deltaL = 0 along a curve is the equation of motion; deltaL = eta the
/// forced equation.
Eigen::VectorXd delta_L(const AlgebroidChart& A, const Lagrangian& lag,
                        const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& ydot, double t);

/// Action integral of L along the sampled curve.
double action(const Lagrangian& lag, const Trajectory& gamma);

struct DWPairing {
  double boundary = 0.0;
  double bulk = 0.0;
  double total = 0.0;
};

/// <dW_L(gamma), delta_zeta gamma> decomposed into the momentum boundary term
/// f.lam|_{t0}^{t1} and the bulk integral of <f, deltaL>. gamma must be
/// admissible within adm_tol.
DWPairing dw_pairing(const AlgebroidChart& A, const Lagrangian& lag,
                     const Trajectory& gamma, const Eigen::MatrixXd& f,
                     double adm_tol = 1e-3);

/// The same derivative evaluated directly as the quadrature of
/// <delta_zeta gamma, dL> — the integration-by-parts cross check.
double dw_direct(const AlgebroidChart& A, const Lagrangian& lag, const Trajectory& gamma,
                 const Eigen::MatrixXd& f);

}  // namespace algmech
