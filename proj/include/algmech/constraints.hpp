#pragma once

#include <Eigen/Dense>
#include <vector>

#include "algmech/algebroid.hpp"
#include "algmech/lagrangian.hpp"
#include "algmech/trajectory.hpp"

namespace algmech {

/// Geometric constraint S = {Phi^k(x, y) = 0}, K level functions with
/// K <= m and full row rank of dPhi/dy where the solvers need it.
class GeometricConstraint {
 public:
  GeometricConstraint(std::vector<Expr> phi, int n, int m);

  int K() const { return static_cast<int>(phi_.size()); }
  int n() const { return n_; }
  int m() const { return m_; }
  const std::vector<Expr>& phi() const { return phi_; }

  Eigen::VectorXd phi_at(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  struct Jet {
    Eigen::VectorXd phi;                  // K
    Eigen::MatrixXd phi_x;                // K x n
    Eigen::MatrixXd phi_y;                // K x m
    std::vector<Eigen::MatrixXd> hess_yy; // per k: m x m
    std::vector<Eigen::MatrixXd> hess_xy; // per k: n x m
  };
  Jet jet_at(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

 private:
  std::vector<Expr> phi_;
  int n_, m_;
};

/// Affine subbundle A = e0(x) + span{basis rows}(x) over the whole base.
/// e0 identically zero presents a linear subbundle.
class AffineConstraint {
 public:
  AffineConstraint(std::vector<Expr> e0, std::vector<std::vector<Expr>> basis,
                   int n, int m);

  int r() const { return static_cast<int>(basis_.size()); }
  int n() const { return n_; }
  int m() const { return m_; }
  const std::vector<Expr>& e0() const { return e0_; }
  const std::vector<std::vector<Expr>>& basis() const { return basis_; }
  bool linear() const { return linear_; }

  Eigen::VectorXd e0_at(const Eigen::VectorXd& x) const;      // m
  Eigen::MatrixXd basis_at(const Eigen::VectorXd& x) const;   // r x m

  /// Embedded fiber point e0(x) + y_reduced^a E_a(x).
  Eigen::VectorXd embed(const Eigen::VectorXd& x, const Eigen::VectorXd& y_reduced) const;

 private:
  std::vector<Expr> e0_;
  std::vector<std::vector<Expr>> basis_;
  int n_, m_;
  bool linear_;
};

struct HolonomicityReport {
  double max_offspan_residual = 0.0;
  bool is_holonomic = false;
  int samples = 0;
};

/// Gauss-Newton projection of y_guess onto {Phi(x, .) = 0}; minimal-norm
/// correction to first order. |Phi| <= 1e-12 on return.
Eigen::VectorXd consistency_project(const GeometricConstraint& C, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& y_guess, int max_iter = 50);

/// One evaluation of the Chetaev-constrained dynamics: the saddle system
///   [ W   -Phi_y^T ] [ydot]   [b0 - eta    ]
///   [ Phi_y   0    ] [ mu ] = [-Phi_x rho y]
/// whose first block states deltaL - eta = -Phi_y^T mu and whose second is
/// the differentiated constraint.
struct NonholonomicRhs {
  Eigen::VectorXd xdot, ydot, mu;
  double condition = 0.0;
  double chetaev_residual = 0.0;  // |deltaL - eta + Phi_y^T mu|
  double phi_norm = 0.0;
};
NonholonomicRhs nonholonomic_rhs(const AlgebroidChart& A, const Lagrangian& lag,
                                 const GeometricConstraint& C, const ForceField* force,
                                 const SystemState& s, double cond_max = 1e8);

/// One evaluation of the vakonomic dynamics: same saddle with the Lagrangian
/// replaced by L - mu_k Phi^k (mu frozen) and mudot in the multiplier slot.
struct VakonomicRhs {
  Eigen::VectorXd xdot, ydot, mudot;
  double condition = 0.0;
  double identity_residual = 0.0;  // independently assembled equation residual
  double phi_norm = 0.0;
};
VakonomicRhs vakonomic_rhs(const AlgebroidChart& A, const Lagrangian& lag,
                           const GeometricConstraint& C, const ForceField* force,
                           const SystemState& s, double cond_max = 1e8);

/// Max over interior samples of the admissibility defect of the lifted curve
/// epsilon(dL - mu_k dPhi^k) in TE*. Vakonomic solutions give O(h^2).
double vakonomic_lift_residual(const AlgebroidChart& A, const Lagrangian& lag,
                               const GeometricConstraint& C, const Trajectory& gamma);

/// Max over samples of the vakonomic equation residual along a trajectory,
/// with d/dt terms taken by finite differences (fully independent of any
/// solver internals).
double vakonomic_equation_residual(const AlgebroidChart& A, const Lagrangian& lag,
                                   const GeometricConstraint& C, const ForceField* force,
                                   const Trajectory& gamma);

/// Max over samples of the component of deltaL - eta orthogonal to
/// span{dPhi^k/dy}: zero certifies the Chetaev condition (d'Alembert's
/// principle in the linear case).
double dalembert_residual(const AlgebroidChart& A, const Lagrangian& lag,
                          const GeometricConstraint& C, const ForceField* force,
                          const Trajectory& gamma, double drift_tol = 1e-6);

/// Bracket-closure test: A is holonomic iff brackets of sections of the
/// affine subbundle stay in its model bundle. Requires a quasi-Lie chart.
HolonomicityReport is_holonomic(const AlgebroidChart& A, const AffineConstraint& aff,
                                const std::vector<Eigen::VectorXd>& sample_points,
                                double tol = kTolAxiom);

/// Momentum equations reduced to the affine constraint, solved for the
/// reduced fiber velocity. State carries y in reduced coordinates (size r).
struct ReducedRhs {
  Eigen::VectorXd xdot, ydot;
  double condition = 0.0;
};
ReducedRhs affine_reduced_rhs(const AlgebroidChart& A, const Lagrangian& lag,
                              const AffineConstraint& aff, const SystemState& s,
                              double cond_max = 1e8);

}  // namespace algmech
