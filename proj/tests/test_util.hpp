#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "algmech/expr.hpp"

namespace algmech::testutil {

// Random smooth expressions over the given variables. Built from +, -, *,
// bounded division, sin/cos/exp and small integer powers, so every generated
// expression is evaluable (and twice differentiable) on all of R^k.
inline Expr random_expr(std::mt19937_64& rng, const std::vector<std::string>& vars,
                        int depth) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<std::size_t> var_pick(0, vars.size() - 1);

  if (depth <= 0) {
    if (pick(rng) < 7)
      return Expr::variable(vars[var_pick(rng)]);
    return Expr::number(coef(rng));
  }
  switch (pick(rng)) {
    case 0:
    case 1:
      return random_expr(rng, vars, depth - 1) + random_expr(rng, vars, depth - 1);
    case 2:
      return random_expr(rng, vars, depth - 1) - random_expr(rng, vars, depth - 1);
    case 3:
    case 4:
      return random_expr(rng, vars, depth - 1) * random_expr(rng, vars, depth - 1);
    case 5: {
      // denominator bounded away from zero
      Expr d = random_expr(rng, vars, depth - 1);
      return random_expr(rng, vars, depth - 1) / (Expr::number(2.0) + d * d);
    }
    case 6:
      return Expr::apply("sin", random_expr(rng, vars, depth - 1));
    case 7:
      return Expr::apply("cos", random_expr(rng, vars, depth - 1));
    case 8: {
      // keep exp arguments tame
      Expr a = random_expr(rng, vars, depth - 1);
      return Expr::apply("exp", Expr::apply("sin", a));
    }
    default: {
      std::uniform_int_distribution<int> ex(2, 3);
      return Expr::pow(random_expr(rng, vars, depth - 1), Expr::number(ex(rng)));
    }
  }
}

inline EvalContext random_point(std::mt19937_64& rng, const std::vector<std::string>& vars) {
  std::uniform_real_distribution<double> val(-1.5, 1.5);
  EvalContext ctx;
  for (const auto& v : vars) ctx.bindings[v] = val(rng);
  ctx.seed_vars = vars;
  return ctx;
}

// Mixed second partial by nested central differences (4-point stencil).
inline double fd_mixed(const Expr& e, const EvalContext& ctx, const std::string& va,
                       const std::string& vb, double h) {
  EvalContext c = ctx;
  c.seed_vars.clear();
  double a0 = ctx.bindings.at(va), b0 = ctx.bindings.at(vb);
  auto at = [&](double a, double b) {
    c.bindings[va] = a;
    c.bindings[vb] = b;
    return eval_value(e, c);
  };
  return (at(a0 + h, b0 + h) - at(a0 + h, b0 - h) - at(a0 - h, b0 + h) +
          at(a0 - h, b0 - h)) /
         (4.0 * h * h);
}

// Endpoint-vanishing probe: per-component sum of low-order sine modes with
// coefficients in [-1, 1].
inline Eigen::MatrixXd endpoint_vanishing_probe(std::mt19937_64& rng, int samples,
                                                int m, double t0, double t1,
                                                double h) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  Eigen::MatrixXd f(samples, m);
  const double pi = 3.14159265358979323846;
  for (int j = 0; j < m; ++j) {
    double a1 = coef(rng), a2 = coef(rng), a3 = coef(rng);
    for (int i = 0; i < samples; ++i) {
      double s = (t0 + i * h - t0) / (t1 - t0);
      f(i, j) = a1 * std::sin(pi * s) + a2 * std::sin(2 * pi * s) +
                a3 * std::sin(3 * pi * s);
    }
  }
  return f;
}

}  // namespace algmech::testutil
