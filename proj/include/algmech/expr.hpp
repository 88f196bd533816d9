#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "algmech/errors.hpp"

namespace algmech {

namespace detail {
struct Node;
using NodePtr = std::shared_ptr<const Node>;
}  // namespace detail

/// Immutable scalar expression over named variables.
///
/// Grammar (no implicit multiplication):
///   expr    := term (('+'|'-') term)*
///   term    := factor (('*'|'/') factor)*
///   factor  := '-' factor | power
///   power   := atom ('^' factor)?          right-associative
///   atom    := number | ident | ident '(' expr ')' | '(' expr ')'
/// Functions: sin cos tan exp log sqrt abs.
class Expr {
 public:
  static Expr parse(std::string_view source);

  static Expr number(double v);
  static Expr variable(std::string name);
  static Expr apply(std::string_view function, const Expr& arg);
  static Expr pow(const Expr& base, const Expr& exponent);

  /// Variables in first-occurrence order; each appears exactly once.
  const std::vector<std::string>& free_vars() const { return vars_; }

  /// Precedence-aware rendering; reparses to an evaluation-equivalent tree.
  std::string to_string() const;

  /// Copy with variables renamed per `mapping` (identity where absent).
  Expr renamed(const std::map<std::string, std::string>& mapping) const;

  bool is_zero_literal() const;

  /// Negation that unwraps a top-level negation and fixes literals, so that
  /// e.negated().negated() is the identical tree.
  Expr negated() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr operator*(double a, const Expr& b) { return number(a) * b; }
  friend Expr operator+(const Expr& a, double b) { return a + number(b); }
  friend Expr operator-(const Expr& a, double b) { return a - number(b); }

  const detail::NodePtr& root() const { return root_; }

 private:
  Expr(detail::NodePtr root, std::vector<std::string> vars);

  detail::NodePtr root_;
  std::vector<std::string> vars_;
};

/// Point and derivative request for evaluating an expression.
struct EvalContext {
  std::map<std::string, double> bindings;
  std::vector<std::string> seed_vars;  // subset of bound names, ordered
};

/// Value, gradient and symmetric Hessian with respect to the seed variables.
struct SecondOrderJet {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

/// Forward-mode evaluation with exact first and second derivatives.
SecondOrderJet eval_jet(const Expr& e, const EvalContext& ctx);

/// Plain evaluation (no derivative carriers).
double eval_value(const Expr& e, const EvalContext& ctx);

/// Central finite difference of order 1 or 2 in a single variable.
/// Test oracle for eval_jet; O(h^2) accurate.
double fd_derivative(const Expr& e, const EvalContext& ctx,
                     const std::string& var, int order, double h);

}  // namespace algmech
