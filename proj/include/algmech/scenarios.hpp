#pragma once

#include <map>
#include <string>

#include "algmech/dynamics.hpp"

namespace algmech {
namespace scenarios {

struct ChartLag {
  AlgebroidChart chart;
  Lagrangian lag;
};

/// Canonical tangent-bundle chart on R^n: rho = sigma = id, c = 0, with the
/// mechanical Lagrangian L = 1/2 sum y_i^2 - V(x).
ChartLag canonical_tm(const Expr& V, int n);

/// so(3) as a Lie algebra chart (one-dimensional dummy base, zero anchors,
/// Levi-Civita structure constants) with the rigid-body kinetic Lagrangian
/// L = 1/2 (I1 y1^2 + I2 y2^2 + I3 y3^2).
ChartLag lie_algebra_so3(double I1, double I2, double I3);

/// Product chart TR^2 x so(3): a homogeneous sphere of mass `mass`, radius r
/// and inertia mass*k2 about any axis, moving freely on the plane.
ChartLag free_sphere(double mass, double r, double k2);

struct RollingBall {
  AlgebroidChart chart;
  Lagrangian lag;
  GeometricConstraint constraint;
  double alpha;  // rotation rate k2*Omega/(r^2 + k2) of the planar velocity
};

/// Sphere rolling without sliding on a table rotating at constant rate Omega:
/// the free-sphere system plus the two rolling constraints
///   y1 - r y4 + Omega x2 = 0,  y2 + r y3 - Omega x1 = 0.
RollingBall rolling_ball(double mass, double r, double k2, double Omega);

/// Chart induced on a subbundle C by orthogonal projection of the linear
/// bivector: anchors restricted to a metric-orthonormalized frame of C and
/// bracket coefficients projected back onto it. The metric and the frame
/// rows must be position-independent (numeric); this covers every case the
/// scenarios need.
AlgebroidChart projected_algebroid(const AlgebroidChart& A, const Eigen::MatrixXd& metric,
                                   const Eigen::MatrixXd& frame);

/// Optimal control data on the product algebroid E x TU: the control
/// constraint y = f(x, u) and the base Lagrangian pulled back. f and l_base
/// are written over x1..x_nE and u1..u_nU.
struct PontryaginScenario {
  AlgebroidChart product_chart;   // base (x, u), fiber (y, udot)
  Lagrangian lag;                 // l_base pulled back
  GeometricConstraint constraint; // y_i - f_i(x, u)
  AlgebroidChart e_chart;
  std::vector<Expr> f;            // remapped to product base coordinates
  Expr l_base;                    // remapped likewise
  int nE, mE, nU;
};

PontryaginScenario pontryagin_control(const AlgebroidChart& E, std::vector<Expr> f,
                                      Expr l_base, int nU);

struct PontryaginState {
  Eigen::VectorXd x;   // nE
  Eigen::VectorXd u;   // nU
  Eigen::VectorXd xi;  // mE costate
};

struct PontryaginTrajectory {
  double t0 = 0.0;
  double h = 0.0;
  std::vector<PontryaginState> states;
  int size() const { return static_cast<int>(states.size()); }
  double time_at(int i) const { return t0 + i * h; }
};

/// Initial-value integration of the costate form of the maximum principle:
/// xdot = rho f, the costate equation for xi, and the control picked per
/// stage as the critical point of the Hamiltonian in u (Newton, warm start).
PontryaginTrajectory integrate_pontryagin(const PontryaginScenario& scn,
                                          const PontryaginState& s0, double t0, double h,
                                          double t1);

/// max |dL/du - xi . df/du| along the run (the Hamiltonian criticality
/// condition in the control variable).
double stationarity_residual(const PontryaginScenario& scn, const PontryaginTrajectory& tr);

/// View of a costate run as a multiplier trajectory on the product chart:
/// base (x, u), fiber (f(x, u), du/dt), multipliers mu = -xi. Feeds the
/// vakonomic validators.
Trajectory lifted_product_trajectory(const PontryaginScenario& scn,
                                     const PontryaginTrajectory& tr);

/// Ready-to-run bundles addressable from the CLI.
struct NamedScenario {
  System system;
  SystemState initial;
  IntegratorConfig config;
  double t1 = 1.0;
};

/// Names: oscillator, euler_top, free_sphere, rolling_ball. Unknown
/// parameter names throw SpecError.
NamedScenario make_scenario(const std::string& name,
                            const std::map<std::string, double>& params);

}  // namespace scenarios
}  // namespace algmech
