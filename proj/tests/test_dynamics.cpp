#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "algmech/dynamics.hpp"
#include "algmech/scenarios.hpp"
#include "test_util.hpp"

using namespace algmech;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

const double kPi = 3.14159265358979323846;

double energy(const Lagrangian& lag, const SystemState& s) {
  LegendreJet lj = legendre_jet(lag, s.x, s.y, s.t);
  return lj.lam.dot(s.y) - lj.value;
}

System free_system(const scenarios::ChartLag& cl) {
  return System{cl.chart, cl.lag, {}, {}, {}, RhsMode::Free};
}

}  // namespace

TEST_CASE("el_rhs on reference systems") {
  SUBCASE("harmonic oscillator") {
    auto cl = scenarios::canonical_tm(Expr::parse("0.5*x1^2"), 1);
    FreeRhs r = el_rhs(cl.chart, cl.lag, nullptr, {0.0, vec({1.0}), vec({0.0}), {}});
    CHECK(r.xdot(0) == doctest::Approx(0.0));
    CHECK(r.ydot(0) == doctest::Approx(-1.0));
  }
  SUBCASE("rigid body gives the classical Euler equations") {
    auto cl = scenarios::lie_algebra_so3(1.0, 2.0, 3.0);
    Eigen::Vector3d omega(0.3, -0.5, 0.8);
    Eigen::Vector3d I(1.0, 2.0, 3.0);
    FreeRhs r = el_rhs(cl.chart, cl.lag, nullptr,
                       {0.0, vec({0.0}), omega, {}});
    Eigen::Vector3d Iomega = I.cwiseProduct(omega);
    Eigen::Vector3d expect = I.cwiseInverse().cwiseProduct(Iomega.cross(omega));
    for (int i = 0; i < 3; ++i) CHECK(r.ydot(i) == doctest::Approx(expect(i)).epsilon(1e-12));
  }
  SUBCASE("free sphere momenta are stationary") {
    auto cl = scenarios::free_sphere(1.0, 1.0, 2.0);
    FreeRhs r = el_rhs(cl.chart, cl.lag, nullptr,
                       {0.0, vec({0.1, -0.2}), vec({0.3, -0.2, 0.4, 0.5, -0.1}), {}});
    CHECK(r.ydot.cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(r.xdot(0) == doctest::Approx(0.3));
    CHECK(r.xdot(1) == doctest::Approx(-0.2));
  }
  SUBCASE("degenerate Lagrangians are refused") {
    auto chart = scenarios::canonical_tm(Expr::number(0.0), 1).chart;
    Lagrangian linear(Expr::parse("y1"), 1, 1);
    CHECK_THROWS_AS(el_rhs(chart, linear, nullptr, {0.0, vec({0.0}), vec({0.0}), {}}),
                    SingularLagrangian);
  }
}

TEST_CASE("integrate reproduces closed-form dynamics") {
  SUBCASE("oscillator closes its period") {
    auto sys = free_system(scenarios::canonical_tm(Expr::parse("0.5*x1^2"), 1));
    int N = 6283;
    double h = 2.0 * kPi / N;
    IntegratorConfig cfg{h, 1e8, 1e-6, 0};
    Trajectory tr = integrate(sys, {0.0, vec({1.0}), vec({0.0}), {}}, cfg, 2.0 * kPi);
    REQUIRE(tr.size() == N + 1);
    CHECK(std::abs(tr.states.back().x(0) - 1.0) <= 1e-8);
    CHECK(std::abs(tr.states.back().y(0)) <= 1e-8);

    double e0 = energy(sys.lag, tr.states.front());
    double drift = 0.0;
    for (const auto& s : tr.states) drift = std::max(drift, std::abs(energy(sys.lag, s) - e0));
    CHECK(drift <= 1e-8);

    auto adm = is_admissible(sys.chart, tr, 10.0 * h * h * 2.0);
    CHECK(adm.admissible);
  }
  SUBCASE("rigid body conserves energy and momentum norm") {
    auto sys = free_system(scenarios::lie_algebra_so3(1.0, 2.0, 3.0));
    IntegratorConfig cfg{1e-3, 1e8, 1e-6, 0};
    Trajectory tr = integrate(sys, {0.0, vec({0.0}), vec({0.3, 1.0, 0.2}), {}}, cfg, 2.0);
    Eigen::Vector3d I(1.0, 2.0, 3.0);
    double e0 = energy(sys.lag, tr.states.front());
    double m0 = I.cwiseProduct(Eigen::Vector3d(tr.states.front().y)).squaredNorm();
    for (int i = 0; i < tr.size(); i += 100) {
      CHECK(std::abs(energy(sys.lag, tr.states[i]) - e0) <= 1e-9);
      double m = I.cwiseProduct(Eigen::Vector3d(tr.states[i].y)).squaredNorm();
      CHECK(std::abs(m - m0) <= 1e-9);
    }
  }
  SUBCASE("rest stays at rest") {
    auto sys = free_system(scenarios::canonical_tm(Expr::number(0.0), 2));
    IntegratorConfig cfg{1e-2, 1e8, 1e-6, 0};
    Trajectory tr = integrate(sys, {0.0, vec({0.4, -0.1}), vec({0.0, 0.0}), {}}, cfg, 1.0);
    for (const auto& s : tr.states) {
      CHECK((s.x - vec({0.4, -0.1})).cwiseAbs().maxCoeff() == 0.0);
      CHECK(s.y.cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("grid validation") {
    auto sys = free_system(scenarios::canonical_tm(Expr::number(0.0), 1));
    IntegratorConfig cfg{0.3, 1e8, 1e-6, 0};
    CHECK_THROWS_AS(integrate(sys, {0.0, vec({0.0}), vec({1.0}), {}}, cfg, 1.0), SpecError);
  }
}

TEST_CASE("RK4 order: halving h cuts the error ~16x") {
  auto sys = free_system(scenarios::canonical_tm(Expr::parse("0.5*x1^2"), 1));
  double T = 6.4;
  auto final_error = [&](double h) {
    IntegratorConfig cfg{h, 1e8, 1e-6, 0};
    Trajectory tr = integrate(sys, {0.0, vec({1.0}), vec({0.0}), {}}, cfg, T);
    double ex = std::abs(tr.states.back().x(0) - std::cos(T));
    double ey = std::abs(tr.states.back().y(0) + std::sin(T));
    return std::max(ex, ey);
  };
  double e1 = final_error(0.02);
  double e2 = final_error(0.01);
  double ratio = e1 / e2;
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("deltaL vanishes along free solutions and reproduces applied forces") {
  auto cl = scenarios::canonical_tm(Expr::parse("0.5*x1^2 + 0.25*x1^4"), 1);
  IntegratorConfig cfg{1e-3, 1e8, 1e-6, 0};

  SUBCASE("free flow") {
    auto sys = free_system(cl);
    Trajectory tr = integrate(sys, {0.0, vec({0.8}), vec({0.0}), {}}, cfg, 2.0);
    Eigen::MatrixXd ydots = time_derivative(tr.ys(), tr.h);
    double worst = 0.0;
    for (int i = 0; i < tr.size(); ++i) {
      Eigen::VectorXd dl = delta_L(sys.chart, sys.lag, tr.states[i].x, tr.states[i].y,
                                   ydots.row(i).transpose(), tr.time_at(i));
      worst = std::max(worst, dl.cwiseAbs().maxCoeff());
    }
    CHECK(worst <= std::max(1e-6, 50.0 * cfg.h * cfg.h));
  }
  SUBCASE("forced flow satisfies deltaL = eta after the fact") {
    System sys{cl.chart, cl.lag, ForceField{{Expr::parse("0.3*sin(t)")}}, {}, {},
               RhsMode::Free};
    Trajectory tr = integrate(sys, {0.0, vec({0.8}), vec({0.0}), {}}, cfg, 2.0);
    Eigen::MatrixXd ydots = time_derivative(tr.ys(), tr.h);
    double worst = 0.0;
    for (int i = 0; i < tr.size(); ++i) {
      double t = tr.time_at(i);
      Eigen::VectorXd dl = delta_L(sys.chart, sys.lag, tr.states[i].x, tr.states[i].y,
                                   ydots.row(i).transpose(), t);
      worst = std::max(worst, std::abs(dl(0) - 0.3 * std::sin(t)));
    }
    CHECK(worst <= std::max(1e-6, 50.0 * cfg.h * cfg.h));
  }
}

TEST_CASE("variation tangency residual distinguishes Lie charts from anchor mismatches") {
  std::mt19937_64 rng(13);
  int N = 1001;
  double h = 1e-3;

  SUBCASE("canonical chart: identically zero") {
    auto sys = free_system(scenarios::canonical_tm(Expr::parse("0.5*x1^2"), 1));
    IntegratorConfig cfg{h, 1e8, 1e-6, 0};
    Trajectory tr = integrate(sys, {0.0, vec({1.0}), vec({0.0}), {}}, cfg, (N - 1) * h);
    Eigen::MatrixXd f = testutil::endpoint_vanishing_probe(rng, N, 1, 0.0, (N - 1) * h, h);
    CHECK(variation_tangency_residual(sys.chart, tr, f) <= 1e-12);
  }
  SUBCASE("so(3): zero up to the structure-constant identity") {
    auto sys = free_system(scenarios::lie_algebra_so3(1.0, 2.0, 3.0));
    IntegratorConfig cfg{h, 1e8, 1e-6, 0};
    Trajectory tr = integrate(sys, {0.0, vec({0.0}), vec({0.3, 1.0, 0.2}), {}}, cfg,
                              (N - 1) * h);
    Eigen::MatrixXd f = testutil::endpoint_vanishing_probe(rng, N, 3, 0.0, (N - 1) * h, h);
    CHECK(variation_tangency_residual(sys.chart, tr, f) <= 1e-8 + 10.0 * h * h);
  }
  SUBCASE("differing anchors are detected by df/dt-active probes") {
    std::vector<std::vector<Expr>> rho{{Expr::number(1.0)}};
    std::vector<std::vector<Expr>> sigma{{Expr::parse("1 + x1")}};
    std::vector<std::vector<std::vector<Expr>>> c{{{Expr::number(0.0)}}};
    AlgebroidChart chart(1, 1, rho, sigma, c);
    // admissible curve staying away from x = 0
    Trajectory tr;
    tr.t0 = 0.0;
    tr.h = h;
    for (int i = 0; i < N; ++i) {
      double t = i * h;
      tr.states.push_back({t, vec({1.0 + 0.2 * std::sin(t)}), vec({0.2 * std::cos(t)}), {}});
    }
    tr.diagnostics.assign(N, {});
    Eigen::MatrixXd f(N, 1);
    for (int i = 0; i < N; ++i) f(i, 0) = std::sin(3.0 * i * h);
    CHECK(variation_tangency_residual(chart, tr, f) >= 1e-2);
  }
}

TEST_CASE("variational probe flags integrator output vs perturbed curves") {
  auto sys = free_system(scenarios::canonical_tm(Expr::parse("0.5*x1^2"), 1));
  int N = 3142;
  double h = kPi / N;
  IntegratorConfig cfg{h, 1e8, 1e-6, 0};
  Trajectory tr = integrate(sys, {0.0, vec({1.0}), vec({0.0}), {}}, cfg, kPi);

  std::mt19937_64 rng(21);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd f = testutil::endpoint_vanishing_probe(rng, N + 1, 1, 0.0, kPi, h);
    worst = std::max(worst, std::abs(dw_pairing(sys.chart, sys.lag, tr, f).total));
  }
  CHECK(worst <= 1e-5);

  Trajectory bad = tr;
  for (int i = 0; i <= N; ++i) {
    double t = i * h;
    bad.states[i].x(0) += 0.01 * std::sin(2.0 * t);
    bad.states[i].y(0) += 0.02 * std::cos(2.0 * t);
  }
  double flagged = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd f = testutil::endpoint_vanishing_probe(rng, N + 1, 1, 0.0, kPi, h);
    flagged = std::max(flagged, std::abs(dw_pairing(sys.chart, sys.lag, bad, f).total));
  }
  CHECK(flagged >= 1e-2 * 0.5);
}

TEST_CASE("trajectory CSV format") {
  auto sys = free_system(scenarios::canonical_tm(Expr::number(0.0), 1));
  IntegratorConfig cfg{0.5, 1e8, 1e-6, 0};
  Trajectory tr = integrate(sys, {0.0, vec({0.0}), vec({1.0}), {}}, cfg, 1.0);
  std::ostringstream os;
  write_trajectory_csv(tr, 1, 1, 0, os);
  std::string text = os.str();
  CHECK(text.substr(0, 8) == "t,x1,y1\n");
  CHECK(text.find("0.5,0.5,1\n") != std::string::npos);

  std::ostringstream os2;
  write_trajectory_csv(tr, 1, 1, 0, os2);
  CHECK(os.str() == os2.str());  // deterministic
}
