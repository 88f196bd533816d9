#include "algmech/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <unordered_map>

namespace algmech {
namespace detail {

enum class Kind { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Fun };
enum class Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Abs };

struct Node {
  Kind kind;
  double num = 0.0;       // Num
  std::string name;       // Var
  Fn fn = Fn::Sin;        // Fun
  NodePtr a, b;           // children
};

namespace {

NodePtr make_num(double v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Num;
  n->num = v;
  return n;
}

NodePtr make_var(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Var;
  n->name = std::move(name);
  return n;
}

NodePtr make_binary(Kind k, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_neg(NodePtr a) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Neg;
  n->a = std::move(a);
  return n;
}

NodePtr make_fun(Fn f, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Fun;
  n->fn = f;
  n->a = std::move(a);
  return n;
}

const std::unordered_map<std::string_view, Fn> kFunctions = {
    {"sin", Fn::Sin}, {"cos", Fn::Cos},   {"tan", Fn::Tan}, {"exp", Fn::Exp},
    {"log", Fn::Log}, {"sqrt", Fn::Sqrt}, {"abs", Fn::Abs}};

std::string_view fn_name(Fn f) {
  switch (f) {
    case Fn::Sin: return "sin";
    case Fn::Cos: return "cos";
    case Fn::Tan: return "tan";
    case Fn::Exp: return "exp";
    case Fn::Log: return "log";
    case Fn::Sqrt: return "sqrt";
    case Fn::Abs: return "abs";
  }
  return "?";
}

void collect_vars(const NodePtr& n, std::vector<std::string>& out) {
  if (!n) return;
  if (n->kind == Kind::Var) {
    for (const auto& v : out)
      if (v == n->name) return;
    out.push_back(n->name);
    return;
  }
  collect_vars(n->a, out);
  collect_vars(n->b, out);
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Token {
  enum Type { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };
  Type type;
  std::size_t offset;
  double num = 0.0;
  std::string text;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    tok_.offset = pos_;
    if (pos_ >= src_.size()) {
      tok_.type = Token::End;
      return;
    }
    char ch = src_[pos_];
    switch (ch) {
      case '+': tok_.type = Token::Plus; ++pos_; return;
      case '-': tok_.type = Token::Minus; ++pos_; return;
      case '*': tok_.type = Token::Star; ++pos_; return;
      case '/': tok_.type = Token::Slash; ++pos_; return;
      case '^': tok_.type = Token::Caret; ++pos_; return;
      case '(': tok_.type = Token::LParen; ++pos_; return;
      case ')': tok_.type = Token::RParen; ++pos_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      const char* begin = src_.data() + pos_;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin) throw ParseError("invalid number", pos_);
      tok_.type = Token::Number;
      tok_.num = v;
      pos_ += static_cast<std::size_t>(end - begin);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      tok_.type = Token::Ident;
      tok_.text = std::string(src_.substr(start, pos_ - start));
      return;
    }
    throw ParseError(std::string("unexpected character '") + ch + "'", pos_);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  NodePtr parse() {
    if (lex_.peek().type == Token::End) throw ParseError("empty input", 0);
    NodePtr e = expr();
    if (lex_.peek().type != Token::End)
      throw ParseError("unexpected trailing input", lex_.peek().offset);
    return e;
  }

 private:
  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      Token::Type t = lex_.peek().type;
      if (t == Token::Plus) {
        lex_.take();
        lhs = make_binary(Kind::Add, lhs, term());
      } else if (t == Token::Minus) {
        lex_.take();
        lhs = make_binary(Kind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      Token::Type t = lex_.peek().type;
      if (t == Token::Star) {
        lex_.take();
        lhs = make_binary(Kind::Mul, lhs, factor());
      } else if (t == Token::Slash) {
        lex_.take();
        lhs = make_binary(Kind::Div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  NodePtr factor() {
    if (lex_.peek().type == Token::Minus) {
      lex_.take();
      return make_neg(factor());
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (lex_.peek().type == Token::Caret) {
      lex_.take();
      return make_binary(Kind::Pow, base, factor());  // right-assoc, '-' allowed in exponent
    }
    return base;
  }

  NodePtr atom() {
    Token t = lex_.take();
    switch (t.type) {
      case Token::Number:
        return make_num(t.num);
      case Token::Ident: {
        if (lex_.peek().type == Token::LParen) {
          auto it = kFunctions.find(t.text);
          if (it == kFunctions.end())
            throw ParseError("unknown function '" + t.text + "'", t.offset);
          lex_.take();  // '('
          NodePtr arg = expr();
          Token close = lex_.take();
          if (close.type != Token::RParen)
            throw ParseError("expected ')'", close.offset);
          return make_fun(it->second, arg);
        }
        return make_var(t.text);
      }
      case Token::LParen: {
        NodePtr e = expr();
        Token close = lex_.take();
        if (close.type != Token::RParen)
          throw ParseError("expected ')'", close.offset);
        return e;
      }
      default:
        throw ParseError("expected operand", t.offset);
    }
  }

  Lexer lex_;
};

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

// Binding strength used to decide parenthesization.
int precedence(const Node& n) {
  switch (n.kind) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

// Parenthesization preserves the tree exactly (bitwise-identical reparse),
// not just up to associativity.
void print(const NodePtr& n, std::string& out);

void print_child(const NodePtr& child, std::string& out, int op_prec, bool right) {
  int p = precedence(*child);
  bool paren = p < op_prec || (right && p == op_prec);
  if (paren) out += '(';
  print(child, out);
  if (paren) out += ')';
}

void print(const NodePtr& n, std::string& out) {
  switch (n->kind) {
    case Kind::Num:
      out += format_number(n->num);
      break;
    case Kind::Var:
      out += n->name;
      break;
    case Kind::Add:
      print_child(n->a, out, 1, false);
      out += " + ";
      print_child(n->b, out, 1, true);
      break;
    case Kind::Sub:
      print_child(n->a, out, 1, false);
      out += " - ";
      print_child(n->b, out, 1, true);
      break;
    case Kind::Mul:
      print_child(n->a, out, 2, false);
      out += "*";
      print_child(n->b, out, 2, true);
      break;
    case Kind::Div:
      print_child(n->a, out, 2, false);
      out += "/";
      print_child(n->b, out, 2, true);
      break;
    case Kind::Pow: {
      // Base must reparse as an atom; negative literals need parens too.
      bool base_paren = precedence(*n->a) <= 4 ||
                        (n->a->kind == Kind::Num && n->a->num < 0);
      if (base_paren) out += '(';
      print(n->a, out);
      if (base_paren) out += ')';
      out += "^";
      print_child(n->b, out, 4, false);
      break;
    }
    case Kind::Neg:
      out += "-";
      print_child(n->a, out, 3, false);
      break;
    case Kind::Fun:
      out += fn_name(n->fn);
      out += '(';
      print(n->a, out);
      out += ')';
      break;
  }
}

NodePtr rename(const NodePtr& n, const std::map<std::string, std::string>& mapping) {
  if (!n) return nullptr;
  if (n->kind == Kind::Var) {
    auto it = mapping.find(n->name);
    if (it == mapping.end()) return n;
    return make_var(it->second);
  }
  if (!n->a && !n->b) return n;
  auto copy = std::make_shared<Node>(*n);
  copy->a = rename(n->a, mapping);
  copy->b = rename(n->b, mapping);
  return copy;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct Slot {
  double value;
  int seed;  // index into seed_vars, -1 if not seeded
};

struct Env {
  std::unordered_map<std::string_view, Slot> slots;
  int k = 0;
};

Env build_env(const EvalContext& ctx) {
  Env env;
  env.k = static_cast<int>(ctx.seed_vars.size());
  env.slots.reserve(ctx.bindings.size());
  for (const auto& [name, value] : ctx.bindings) {
    int seed = -1;
    for (std::size_t i = 0; i < ctx.seed_vars.size(); ++i)
      if (ctx.seed_vars[i] == name) seed = static_cast<int>(i);
    env.slots.emplace(std::string_view(name), Slot{value, seed});
  }
  for (const auto& s : ctx.seed_vars)
    if (env.slots.find(s) == env.slots.end())
      throw UnboundVariable("seed variable '" + s + "' is not bound");
  return env;
}

[[noreturn]] void domain_error(const char* what, const NodePtr& n) {
  std::string sub;
  print(n, sub);
  throw DomainError(std::string(what) + " in subexpression '" + sub + "'");
}

using Jet = SecondOrderJet;

Jet jet_const(double v, int k) {
  return {v, Eigen::VectorXd::Zero(k), Eigen::MatrixXd::Zero(k, k)};
}

// f(u) for scalar f with derivatives d1 = f', d2 = f''.
Jet lift(const Jet& u, double f, double d1, double d2) {
  Jet r;
  r.value = f;
  r.grad = d1 * u.grad;
  // materialize the outer product before scaling to keep bitwise symmetry
  Eigen::MatrixXd outer = u.grad * u.grad.transpose();
  r.hess = d1 * u.hess + d2 * outer;
  return r;
}

Jet eval(const NodePtr& n, const Env& env);

Jet eval_pow(const NodePtr& n, const Env& env) {
  Jet base = eval(n->a, env);
  Jet expo = eval(n->b, env);
  bool const_expo = expo.grad.isZero(0.0) && expo.hess.isZero(0.0);
  if (const_expo) {
    double c = expo.value;
    if (base.value < 0.0 && c != std::floor(c))
      domain_error("non-integer power of negative base", n);
    if (base.value == 0.0 && c < 0.0) domain_error("zero raised to negative power", n);
    double f = std::pow(base.value, c);
    double d1 = (c == 0.0) ? 0.0 : c * std::pow(base.value, c - 1.0);
    double d2 = (c == 0.0 || c == 1.0) ? 0.0 : c * (c - 1.0) * std::pow(base.value, c - 2.0);
    return lift(base, f, d1, d2);
  }
  if (base.value <= 0.0) domain_error("power of non-positive base with variable exponent", n);
  // a^b = exp(b log a)
  Jet la = lift(base, std::log(base.value), 1.0 / base.value, -1.0 / (base.value * base.value));
  Jet prod;
  prod.value = expo.value * la.value;
  prod.grad = expo.value * la.grad + la.value * expo.grad;
  Eigen::MatrixXd outer = expo.grad * la.grad.transpose();
  prod.hess = expo.value * la.hess + la.value * expo.hess +
              (outer + outer.transpose());
  double ev = std::exp(prod.value);
  return lift(prod, ev, ev, ev);
}

Jet eval(const NodePtr& n, const Env& env) {
  switch (n->kind) {
    case Kind::Num:
      return jet_const(n->num, env.k);
    case Kind::Var: {
      auto it = env.slots.find(std::string_view(n->name));
      if (it == env.slots.end())
        throw UnboundVariable("unbound variable '" + n->name + "'");
      Jet r = jet_const(it->second.value, env.k);
      if (it->second.seed >= 0) r.grad(it->second.seed) = 1.0;
      return r;
    }
    case Kind::Add: {
      Jet a = eval(n->a, env), b = eval(n->b, env);
      a.value += b.value;
      a.grad += b.grad;
      a.hess += b.hess;
      return a;
    }
    case Kind::Sub: {
      Jet a = eval(n->a, env), b = eval(n->b, env);
      a.value -= b.value;
      a.grad -= b.grad;
      a.hess -= b.hess;
      return a;
    }
    case Kind::Mul: {
      Jet a = eval(n->a, env), b = eval(n->b, env);
      Jet r;
      r.value = a.value * b.value;
      r.grad = a.value * b.grad + b.value * a.grad;
      // grouping the symmetric pair keeps the result bitwise symmetric
      Eigen::MatrixXd outer = a.grad * b.grad.transpose();
      r.hess = a.value * b.hess + b.value * a.hess + (outer + outer.transpose());
      return r;
    }
    case Kind::Div: {
      Jet a = eval(n->a, env), b = eval(n->b, env);
      if (b.value == 0.0) domain_error("division by zero", n);
      Jet q;
      q.value = a.value / b.value;
      q.grad = (a.grad - q.value * b.grad) / b.value;
      Eigen::MatrixXd outer = q.grad * b.grad.transpose();
      q.hess = (a.hess - q.value * b.hess - (outer + outer.transpose())) / b.value;
      return q;
    }
    case Kind::Pow:
      return eval_pow(n, env);
    case Kind::Neg: {
      Jet a = eval(n->a, env);
      a.value = -a.value;
      a.grad = -a.grad;
      a.hess = -a.hess;
      return a;
    }
    case Kind::Fun: {
      Jet u = eval(n->a, env);
      double v = u.value;
      switch (n->fn) {
        case Fn::Sin: return lift(u, std::sin(v), std::cos(v), -std::sin(v));
        case Fn::Cos: return lift(u, std::cos(v), -std::sin(v), -std::cos(v));
        case Fn::Tan: {
          double t = std::tan(v);
          double sec2 = 1.0 + t * t;
          return lift(u, t, sec2, 2.0 * t * sec2);
        }
        case Fn::Exp: {
          double e = std::exp(v);
          return lift(u, e, e, e);
        }
        case Fn::Log:
          if (v <= 0.0) domain_error("log of non-positive value", n);
          return lift(u, std::log(v), 1.0 / v, -1.0 / (v * v));
        case Fn::Sqrt: {
          if (v < 0.0) domain_error("sqrt of negative value", n);
          double s = std::sqrt(v);
          return lift(u, s, 0.5 / s, -0.25 / (s * v));
        }
        case Fn::Abs:
          return lift(u, std::fabs(v), v >= 0.0 ? 1.0 : -1.0, 0.0);
      }
      break;
    }
  }
  throw Error("corrupt expression tree");
}

double eval_plain(const NodePtr& n, const Env& env) {
  switch (n->kind) {
    case Kind::Num:
      return n->num;
    case Kind::Var: {
      auto it = env.slots.find(std::string_view(n->name));
      if (it == env.slots.end())
        throw UnboundVariable("unbound variable '" + n->name + "'");
      return it->second.value;
    }
    case Kind::Add: return eval_plain(n->a, env) + eval_plain(n->b, env);
    case Kind::Sub: return eval_plain(n->a, env) - eval_plain(n->b, env);
    case Kind::Mul: return eval_plain(n->a, env) * eval_plain(n->b, env);
    case Kind::Div: {
      double b = eval_plain(n->b, env);
      if (b == 0.0) domain_error("division by zero", n);
      return eval_plain(n->a, env) / b;
    }
    case Kind::Pow: {
      double a = eval_plain(n->a, env);
      double b = eval_plain(n->b, env);
      if (a < 0.0 && b != std::floor(b))
        domain_error("non-integer power of negative base", n);
      if (a == 0.0 && b < 0.0) domain_error("zero raised to negative power", n);
      return std::pow(a, b);
    }
    case Kind::Neg:
      return -eval_plain(n->a, env);
    case Kind::Fun: {
      double v = eval_plain(n->a, env);
      switch (n->fn) {
        case Fn::Sin: return std::sin(v);
        case Fn::Cos: return std::cos(v);
        case Fn::Tan: return std::tan(v);
        case Fn::Exp: return std::exp(v);
        case Fn::Log:
          if (v <= 0.0) domain_error("log of non-positive value", n);
          return std::log(v);
        case Fn::Sqrt:
          if (v < 0.0) domain_error("sqrt of negative value", n);
          return std::sqrt(v);
        case Fn::Abs: return std::fabs(v);
      }
      break;
    }
  }
  throw Error("corrupt expression tree");
}

}  // namespace
}  // namespace detail

using detail::Node;
using detail::NodePtr;

Expr::Expr(NodePtr root, std::vector<std::string> vars)
    : root_(std::move(root)), vars_(std::move(vars)) {}

Expr Expr::parse(std::string_view source) {
  detail::Parser p(source);
  NodePtr root = p.parse();
  std::vector<std::string> vars;
  detail::collect_vars(root, vars);
  return Expr(std::move(root), std::move(vars));
}

Expr Expr::number(double v) { return Expr(detail::make_num(v), {}); }

Expr Expr::variable(std::string name) {
  std::vector<std::string> vars{name};
  return Expr(detail::make_var(std::move(name)), std::move(vars));
}

Expr Expr::apply(std::string_view function, const Expr& arg) {
  auto it = detail::kFunctions.find(function);
  if (it == detail::kFunctions.end())
    throw Error("unknown function '" + std::string(function) + "'");
  return Expr(detail::make_fun(it->second, arg.root_), arg.vars_);
}

namespace {
std::vector<std::string> merge_vars(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
  std::vector<std::string> out = a;
  for (const auto& v : b) {
    bool seen = false;
    for (const auto& w : out)
      if (w == v) { seen = true; break; }
    if (!seen) out.push_back(v);
  }
  return out;
}
}  // namespace

Expr Expr::pow(const Expr& base, const Expr& exponent) {
  return Expr(detail::make_binary(detail::Kind::Pow, base.root_, exponent.root_),
              merge_vars(base.vars_, exponent.vars_));
}

Expr operator+(const Expr& a, const Expr& b) {
  return Expr(detail::make_binary(detail::Kind::Add, a.root_, b.root_),
              merge_vars(a.vars_, b.vars_));
}

Expr operator-(const Expr& a, const Expr& b) {
  return Expr(detail::make_binary(detail::Kind::Sub, a.root_, b.root_),
              merge_vars(a.vars_, b.vars_));
}

Expr operator*(const Expr& a, const Expr& b) {
  return Expr(detail::make_binary(detail::Kind::Mul, a.root_, b.root_),
              merge_vars(a.vars_, b.vars_));
}

Expr operator/(const Expr& a, const Expr& b) {
  return Expr(detail::make_binary(detail::Kind::Div, a.root_, b.root_),
              merge_vars(a.vars_, b.vars_));
}

Expr operator-(const Expr& a) { return Expr(detail::make_neg(a.root_), a.vars_); }

std::string Expr::to_string() const {
  std::string out;
  detail::print(root_, out);
  return out;
}

Expr Expr::renamed(const std::map<std::string, std::string>& mapping) const {
  NodePtr root = detail::rename(root_, mapping);
  std::vector<std::string> vars;
  detail::collect_vars(root, vars);
  return Expr(std::move(root), std::move(vars));
}

bool Expr::is_zero_literal() const {
  return root_->kind == detail::Kind::Num && root_->num == 0.0;
}

Expr Expr::negated() const {
  if (is_zero_literal()) return *this;
  if (root_->kind == detail::Kind::Num) return number(-root_->num);
  if (root_->kind == detail::Kind::Neg) return Expr(root_->a, vars_);
  return Expr(detail::make_neg(root_), vars_);
}

SecondOrderJet eval_jet(const Expr& e, const EvalContext& ctx) {
  detail::Env env = detail::build_env(ctx);
  return detail::eval(e.root(), env);
}

double eval_value(const Expr& e, const EvalContext& ctx) {
  detail::Env env = detail::build_env(ctx);
  return detail::eval_plain(e.root(), env);
}

double fd_derivative(const Expr& e, const EvalContext& ctx,
                     const std::string& var, int order, double h) {
  if (h <= 0.0) throw Error("fd_derivative: h must be positive");
  if (order != 1 && order != 2) throw Error("fd_derivative: order must be 1 or 2");
  auto it = ctx.bindings.find(var);
  if (it == ctx.bindings.end())
    throw UnboundVariable("fd_derivative: variable '" + var + "' is not bound");
  double x0 = it->second;

  EvalContext shifted = ctx;
  shifted.seed_vars.clear();
  auto at = [&](double x) {
    shifted.bindings[var] = x;
    return eval_value(e, shifted);
  };
  if (order == 1) return (at(x0 + h) - at(x0 - h)) / (2.0 * h);
  return (at(x0 + h) - 2.0 * at(x0) + at(x0 - h)) / (h * h);
}

}  // namespace algmech
