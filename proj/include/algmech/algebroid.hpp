#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "algmech/expr.hpp"
#include "algmech/trajectory.hpp"

namespace algmech {

/// A general algebroid on a trivial bundle R^n x R^m, given in a single
/// coordinate chart by its structure functions:
///
///   rho[a][i]  = left anchor rho^a_i(x)     (drives admissibility dx/dt = rho y)
///   sigma[a][j]= right anchor sigma^a_j(x)  (enters variations and forces)
///   c[k][i][j] = bracket coefficients c^k_{ij}(x), stored in full
///                (skewness is a property to check, not an invariant)
///
/// Base coordinates are named x1..xn, fiber coordinates y1..ym. All structure
/// functions may depend on x only.
class AlgebroidChart {
 public:
  AlgebroidChart(int n, int m,
                 std::vector<std::vector<Expr>> rho,
                 std::vector<std::vector<Expr>> sigma,
                 std::vector<std::vector<std::vector<Expr>>> c);

  int n() const { return n_; }
  int m() const { return m_; }
  const std::vector<std::vector<Expr>>& rho() const { return rho_; }
  const std::vector<std::vector<Expr>>& sigma() const { return sigma_; }
  const std::vector<std::vector<std::vector<Expr>>>& c() const { return c_; }

  const std::vector<std::string>& x_names() const { return x_names_; }
  const std::vector<std::string>& y_names() const { return y_names_; }

  Eigen::MatrixXd rho_at(const Eigen::VectorXd& x) const;    // n x m
  Eigen::MatrixXd sigma_at(const Eigen::VectorXd& x) const;  // n x m
  /// c slices per upper index: c_at(x)[k](i, j) = c^k_{ij}(x).
  std::vector<Eigen::MatrixXd> c_at(const Eigen::VectorXd& x) const;

  /// Values plus x-derivatives: d_rho[a] is the n x m matrix of
  /// partial_{x^a} rho evaluated at x. Same shapes for sigma and c.
  struct StructureJet {
    Eigen::MatrixXd rho, sigma;
    std::vector<Eigen::MatrixXd> c;
    std::vector<Eigen::MatrixXd> d_rho, d_sigma;         // [a] -> n x m
    std::vector<std::vector<Eigen::MatrixXd>> d_c;       // [a][k] -> m x m
  };
  StructureJet structure_jet(const Eigen::VectorXd& x) const;

  EvalContext base_context(const Eigen::VectorXd& x, bool seed_x) const;

 private:
  int n_, m_;
  std::vector<std::vector<Expr>> rho_, sigma_;
  std::vector<std::vector<std::vector<Expr>>> c_;
  std::vector<std::string> x_names_, y_names_;
};

/// Point of T*E in the coordinates (x, y, p, xi).
struct CotangentEPoint {
  Eigen::VectorXd x, y, p, xi;
};

/// Point of TE* in the coordinates (x, xi, xdot, xidot).
struct TangentEDualPoint {
  Eigen::VectorXd x, xi, xdot, xidot;
};

/// Point of TE in the coordinates (x, y, xdot, ydot).
struct TangentEPoint {
  Eigen::VectorXd x, y, xdot, ydot;
};

/// Section X = X^i(x) e_i given by its coefficient expressions.
struct SectionExpr {
  std::vector<Expr> components;
};

struct AxiomReport {
  bool is_quasi_lie = false;
  bool is_lie = false;
  double anchor_hom_residual = 0.0;
  double jacobiator_residual = 0.0;
  double skew_residual = 0.0;
  double rho_sigma_residual = 0.0;
  int samples_used = 0;
};

struct AdmissibilityResult {
  bool admissible = false;
  double max_residual = 0.0;
};

inline constexpr double kTolAxiom = 1e-8;

/// The algebroid morphism T*E -> TE*:
///   (x, y, p, xi) -> (x, xi, xdot^b = rho^b_k y^k,
///                     xidot_j = c^k_{ij} y^i xi_k + sigma^a_j p_a).
TangentEDualPoint epsilon_map(const AlgebroidChart& A, const CotangentEPoint& w);

/// The dual relation on TE, evaluated functionally: v = (x, Y, xdot, Ydot)
/// with xdot = rho(x) e_fiber maps to
///   (x, e_fiber, sigma(x) Y, Ydot^j + c^j_{kl} e_fiber^k Y^l).
/// Throws CompatibilityViolation if xdot is not rho(x) e_fiber within
/// 1e-8 (1 + |xdot|).
TangentEPoint kappa_apply(const AlgebroidChart& A, const TangentEPoint& v,
                          const Eigen::VectorXd& e_fiber);

/// Pairing of TE with TE* over a common base tangent vector:
/// <ydot, xi> + <y, xidot> (the t-derivative of the fiber pairing).
double tangent_pairing(const TangentEPoint& v, const TangentEDualPoint& w);

/// |<v, epsilon(w)>_{Ttau} - <kappa(v)_e, w>_{tau_E}| — zero up to rounding
/// for every valid input; this is the defining duality of kappa.
double kappa_duality_residual(const AlgebroidChart& A, const TangentEPoint& v,
                              const Eigen::VectorXd& e_fiber,
                              const CotangentEPoint& w);

/// dx/dt = rho(x) y along the samples, via central differences.
AdmissibilityResult is_admissible(const AlgebroidChart& A, const Trajectory& gamma,
                                  double tol);

/// sup-norm of xdot - rho(x) y; zero exactly on holonomic vectors.
double holonomic_vector_residual(const AlgebroidChart& A, const TangentEPoint& v);

/// Admissible variation generated by the vertical variation f(t) along an
/// admissible gamma:
///   base  component f^j(t) sigma^b_j(x(t))
///   fiber component df^k/dt + c^k_{ij} y^i f^j.
/// f has one row per sample and m columns.
std::vector<TangentEPoint> admissible_variation(const AlgebroidChart& A,
                                                const Trajectory& gamma,
                                                const Eigen::MatrixXd& f);

/// [X,Y]^k = c^k_{ij} X^i Y^j + rho^a_i X^i dY^k/dx^a - sigma^a_j Y^j dX^k/dx^a.
Eigen::VectorXd section_bracket(const AlgebroidChart& A, const SectionExpr& X,
                                const SectionExpr& Y, const Eigen::VectorXd& x);

/// Numeric classification of the chart: skewness of c, rho = sigma, the
/// anchor/bracket compatibility, and the Jacobi identity of the associated
/// linear bivector checked on coordinate and random affine probe functions.
AxiomReport check_axioms(const AlgebroidChart& A,
                         const std::vector<Eigen::VectorXd>& sample_points,
                         int probe_count, std::uint64_t seed = 0,
                         double tol = kTolAxiom);

/// Adjoint structure: anchors swapped, bracket coefficients negative-
/// transposed (c^k_{ij} -> -c^k_{ji}). Involutive; its kappa relation is the
/// inverse of the original one, and quasi-Lie charts are self-adjoint.
AlgebroidChart adjoint(const AlgebroidChart& A);

/// Opposite structure: all structure functions negated.
AlgebroidChart opposite(const AlgebroidChart& A);

}  // namespace algmech
