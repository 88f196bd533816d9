#include "algmech/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "lu_condition.hpp"

namespace algmech {

FreeRhs el_rhs(const AlgebroidChart& A, const Lagrangian& lag, const ForceField* force,
               const SystemState& s, double cond_max) {
  Eigen::MatrixXd rho = A.rho_at(s.x);
  Eigen::MatrixXd sigma = A.sigma_at(s.x);
  auto c = A.c_at(s.x);
  LegendreJet lj = legendre_jet(lag, s.x, s.y, s.t);

  Eigen::VectorXd b0 = sigma.transpose() * lj.dLdx;
  for (int j = 0; j < A.m(); ++j)
    for (int i = 0; i < A.m(); ++i)
      for (int k = 0; k < A.m(); ++k) b0(j) += s.y(i) * c[k](i, j) * lj.lam(k);
  b0 -= lj.Wxy.transpose() * (rho * s.y);
  b0 -= lj.Wty;
  if (force) b0 -= force_at(*force, lag, s.x, s.y, s.t);

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(lj.W);
  double cond = detail::lu_condition(lu);
  if (!(cond <= cond_max))
    throw SingularLagrangian("fiber Hessian singular at t = " + std::to_string(s.t) +
                             " (condition estimate " + std::to_string(cond) +
                             "); the dynamics is implicit here");

  FreeRhs out;
  out.xdot = rho * s.y;
  out.ydot = lu.solve(b0);
  out.condition = cond;
  out.residual = (lj.W * out.ydot - b0).cwiseAbs().maxCoeff();
  return out;
}

namespace {

int step_count(double t0, double t1, double h) {
  if (h <= 0.0) throw SpecError("integrator: h must be positive");
  double steps = (t1 - t0) / h;
  long rounded = std::lround(steps);
  if (rounded < 1 || std::abs(steps - static_cast<double>(rounded)) > 1e-9 * (1.0 + steps))
    throw SpecError("integrator: (t1 - t0) / h must be a positive integer");
  return static_cast<int>(rounded);
}

void require_finite(const Eigen::VectorXd& z, double t) {
  if (!z.allFinite())
    throw NonFiniteState("state became non-finite at t = " + std::to_string(t));
}

}  // namespace

Trajectory integrate(const System& sys, const SystemState& s0, const IntegratorConfig& cfg,
                     double t1) {
  const int n = sys.chart.n();
  const int m = sys.chart.m();
  if (cfg.cond_max <= 1.0) throw SpecError("integrator: cond_max must exceed 1");
  if (cfg.drift_tol <= 0.0) throw SpecError("integrator: drift_tol must be positive");
  if (s0.x.size() != n) throw DimensionMismatch("integrate: initial x has wrong size");

  if ((sys.mode == RhsMode::Nonholonomic || sys.mode == RhsMode::Vakonomic) &&
      !sys.constraint)
    throw SpecError("integrate: mode requires a geometric constraint");
  if (sys.mode == RhsMode::AffineReduced && !sys.affine)
    throw SpecError("integrate: mode requires an affine constraint");
  const ForceField* force = sys.force ? &*sys.force : nullptr;

  int fiber = m;
  if (sys.mode == RhsMode::AffineReduced) fiber = sys.affine->r();
  if (s0.y.size() != fiber) throw DimensionMismatch("integrate: initial y has wrong size");
  int K = 0;
  if (sys.mode == RhsMode::Vakonomic) {
    K = sys.constraint->K();
    if (s0.mu.size() != K)
      throw DimensionMismatch("integrate: vakonomic initial state must carry K multipliers");
  }

  const int steps = step_count(s0.t, t1, cfg.h);

  // Packed state: [x; y(;mu)].
  auto pack = [&](const SystemState& s) {
    Eigen::VectorXd z(n + fiber + K);
    z.head(n) = s.x;
    z.segment(n, fiber) = s.y;
    if (K > 0) z.tail(K) = s.mu;
    return z;
  };
  auto unpack = [&](const Eigen::VectorXd& z, double t) {
    SystemState s;
    s.t = t;
    s.x = z.head(n);
    s.y = z.segment(n, fiber);
    if (K > 0) s.mu = z.tail(K);
    return s;
  };

  auto rhs = [&](const Eigen::VectorXd& z, double t) {
    SystemState s = unpack(z, t);
    Eigen::VectorXd dz(z.size());
    switch (sys.mode) {
      case RhsMode::Free: {
        FreeRhs r = el_rhs(sys.chart, sys.lag, force, s, cfg.cond_max);
        dz.head(n) = r.xdot;
        dz.tail(m) = r.ydot;
        break;
      }
      case RhsMode::Nonholonomic: {
        NonholonomicRhs r =
            nonholonomic_rhs(sys.chart, sys.lag, *sys.constraint, force, s, cfg.cond_max);
        dz.head(n) = r.xdot;
        dz.tail(m) = r.ydot;
        break;
      }
      case RhsMode::Vakonomic: {
        VakonomicRhs r =
            vakonomic_rhs(sys.chart, sys.lag, *sys.constraint, force, s, cfg.cond_max);
        dz.head(n) = r.xdot;
        dz.segment(n, m) = r.ydot;
        dz.tail(K) = r.mudot;
        break;
      }
      case RhsMode::AffineReduced: {
        ReducedRhs r = affine_reduced_rhs(sys.chart, sys.lag, *sys.affine, s, cfg.cond_max);
        dz.head(n) = r.xdot;
        dz.tail(fiber) = r.ydot;
        break;
      }
    }
    return dz;
  };

  auto diagnose = [&](const SystemState& s) {
    SampleDiagnostics d;
    switch (sys.mode) {
      case RhsMode::Free: {
        FreeRhs r = el_rhs(sys.chart, sys.lag, force, s, cfg.cond_max);
        d.condition_estimate = r.condition;
        d.delta_l_residual = r.residual;
        break;
      }
      case RhsMode::Nonholonomic: {
        NonholonomicRhs r =
            nonholonomic_rhs(sys.chart, sys.lag, *sys.constraint, force, s, cfg.cond_max);
        d.condition_estimate = r.condition;
        d.delta_l_residual = r.chetaev_residual;
        d.constraint_residual = r.phi_norm;
        break;
      }
      case RhsMode::Vakonomic: {
        VakonomicRhs r =
            vakonomic_rhs(sys.chart, sys.lag, *sys.constraint, force, s, cfg.cond_max);
        d.condition_estimate = r.condition;
        d.delta_l_residual = r.identity_residual;
        d.constraint_residual = r.phi_norm;
        break;
      }
      case RhsMode::AffineReduced: {
        ReducedRhs r = affine_reduced_rhs(sys.chart, sys.lag, *sys.affine, s, cfg.cond_max);
        d.condition_estimate = r.condition;
        break;
      }
    }
    return d;
  };

  // Nonholonomic samples carry the algebraic multipliers for the CSV.
  auto with_multipliers = [&](SystemState s) {
    if (sys.mode == RhsMode::Nonholonomic) {
      NonholonomicRhs r =
          nonholonomic_rhs(sys.chart, sys.lag, *sys.constraint, force, s, cfg.cond_max);
      s.mu = r.mu;
    }
    return s;
  };

  Trajectory traj;
  traj.t0 = s0.t;
  traj.h = cfg.h;
  traj.states.reserve(steps + 1);
  traj.diagnostics.reserve(steps + 1);

  Eigen::VectorXd z = pack(s0);
  double t = s0.t;
  {
    SystemState first = unpack(z, t);
    if (sys.constraint && sys.mode != RhsMode::AffineReduced && sys.mode != RhsMode::Free) {
      double drift = sys.constraint->phi_at(first.x, first.y).cwiseAbs().maxCoeff();
      if (drift > cfg.drift_tol)
        throw ConstraintDrift("initial state violates the constraint, |Phi| = " +
                              std::to_string(drift));
    }
    traj.diagnostics.push_back(diagnose(first));
    traj.states.push_back(with_multipliers(std::move(first)));
  }

  const double h = cfg.h;
  for (int step = 1; step <= steps; ++step) {
    Eigen::VectorXd k1 = rhs(z, t);
    Eigen::VectorXd k2 = rhs(z + 0.5 * h * k1, t + 0.5 * h);
    Eigen::VectorXd k3 = rhs(z + 0.5 * h * k2, t + 0.5 * h);
    Eigen::VectorXd k4 = rhs(z + h * k3, t + h);
    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = s0.t + step * h;
    require_finite(z, t);

    if (cfg.project_every > 0 && sys.constraint && step % cfg.project_every == 0 &&
        sys.mode != RhsMode::AffineReduced && sys.mode != RhsMode::Free) {
      SystemState s = unpack(z, t);
      z.segment(n, m) = consistency_project(*sys.constraint, s.x, s.y);
    }

    SystemState s = unpack(z, t);
    if (sys.constraint && sys.mode != RhsMode::AffineReduced && sys.mode != RhsMode::Free) {
      double drift = sys.constraint->phi_at(s.x, s.y).cwiseAbs().maxCoeff();
      if (drift > cfg.drift_tol)
        throw ConstraintDrift("constraint drift " + std::to_string(drift) +
                              " exceeds tolerance at t = " + std::to_string(t));
    }
    traj.diagnostics.push_back(diagnose(s));
    traj.states.push_back(with_multipliers(std::move(s)));
  }
  return traj;
}

double variation_tangency_residual(const AlgebroidChart& A, const Trajectory& gamma,
                                   const Eigen::MatrixXd& f) {
  if (f.rows() != gamma.size() || f.cols() != A.m())
    throw GridMismatch("variation_tangency_residual: f must be sampled on gamma's grid");
  if (gamma.size() < 3)
    throw TooFewSamples("variation_tangency_residual: need at least 3 samples");
  Eigen::MatrixXd df = time_derivative(f, gamma.h);

  double worst = 0.0;
  for (int s = 1; s + 1 < gamma.size(); ++s) {
    const auto& st = gamma.states[s];
    auto sj = A.structure_jet(st.x);
    for (int b = 0; b < A.n(); ++b) {
      double total = 0.0;
      for (int j = 0; j < A.m(); ++j) {
        total += df(s, j) * (sj.sigma(b, j) - sj.rho(b, j));
        for (int i = 0; i < A.m(); ++i) {
          double tensor = 0.0;
          for (int a = 0; a < A.n(); ++a)
            tensor += sj.d_sigma[a](b, j) * sj.rho(a, i) - sj.d_rho[a](b, j) * sj.sigma(a, i);
          for (int k = 0; k < A.m(); ++k) tensor -= sj.c[k](i, j) * sj.rho(b, k);
          total += f(s, j) * st.y(i) * tensor;
        }
      }
      worst = std::max(worst, std::abs(total));
    }
  }
  return worst;
}

void write_trajectory_csv(const Trajectory& traj, int n, int m, int K, std::ostream& os) {
  os << "t";
  for (int a = 1; a <= n; ++a) os << ",x" << a;
  for (int i = 1; i <= m; ++i) os << ",y" << i;
  for (int k = 1; k <= K; ++k) os << ",mu" << k;
  os << "\n";
  char buf[64];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
  };
  for (int s = 0; s < traj.size(); ++s) {
    const auto& st = traj.states[s];
    emit(traj.time_at(s));
    for (int a = 0; a < n; ++a) { os << ','; emit(st.x(a)); }
    for (int i = 0; i < st.y.size(); ++i) { os << ','; emit(st.y(i)); }
    for (int k = 0; k < K && k < st.mu.size(); ++k) { os << ','; emit(st.mu(k)); }
    os << "\n";
  }
}

}  // namespace algmech
