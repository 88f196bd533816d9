#pragma once

#include <Eigen/Dense>
#include <optional>
#include <ostream>

#include "algmech/algebroid.hpp"
#include "algmech/constraints.hpp"
#include "algmech/lagrangian.hpp"
#include "algmech/trajectory.hpp"

namespace algmech {

struct IntegratorConfig {
  double h = 1e-3;            // fixed RK4 step
  double cond_max = 1e8;      // Hessian / saddle condition threshold
  double drift_tol = 1e-6;    // constraint drift threshold
  int project_every = 0;      // steps between re-projections, 0 = never
};

enum class RhsMode { Free, Nonholonomic, Vakonomic, AffineReduced };

/// Everything needed to evaluate one dynamics: chart, Lagrangian, optional
/// force, and the constraint matching the mode.
struct System {
  AlgebroidChart chart;
  Lagrangian lag;
  std::optional<ForceField> force;
  std::optional<GeometricConstraint> constraint;
  std::optional<AffineConstraint> affine;
  RhsMode mode = RhsMode::Free;
};

/// Free (possibly forced) Euler-Lagrange flow made explicit by solving the
/// fiber Hessian system: xdot = rho y, W ydot = rhs so that
/// deltaL(x, y, ydot, t) = eta.
struct FreeRhs {
  Eigen::VectorXd xdot, ydot;
  double condition = 0.0;
  double residual = 0.0;  // |deltaL - eta| at the solved ydot
};
FreeRhs el_rhs(const AlgebroidChart& A, const Lagrangian& lag, const ForceField* force,
               const SystemState& s, double cond_max = 1e8);

/// Fixed-step RK4 over the mode's right-hand side, sampling every step.
/// (t1 - s0.t) / cfg.h must be a positive integer.
Trajectory integrate(const System& sys, const SystemState& s0, const IntegratorConfig& cfg,
                     double t1);

/// Residual of the condition for admissible variations to be tangent to the
/// manifold of admissible paths:
///   (df^j/dt)(sigma^b_j - rho^b_j)
///   + f^j y^i (d_a sigma^b_j rho^a_i - d_a rho^b_j sigma^a_i - c^k_{ij} rho^b_k).
/// Vanishes on Lie algebroid charts; bounded away from zero when the anchors
/// differ and df/dt is active.
double variation_tangency_residual(const AlgebroidChart& A, const Trajectory& gamma,
                                   const Eigen::MatrixXd& f);

/// CSV with header t,x1..xn,y1..ym[,mu1..muK], 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, int n, int m, int K, std::ostream& os);

}  // namespace algmech
