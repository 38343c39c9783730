#include "nhsol/expr.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <unordered_set>

namespace nhsol {

namespace {

std::shared_ptr<const Node> make_node(Node n) {
  return std::make_shared<const Node>(std::move(n));
}

const std::shared_ptr<const Node>& zero_node() {
  static const std::shared_ptr<const Node> z = make_node(Node{});
  return z;
}

bool fold_unary(Op op, double a, double& out) {
  switch (op) {
    case Op::Neg: out = -a; return true;
    case Op::Sin: out = std::sin(a); return true;
    case Op::Cos: out = std::cos(a); return true;
    case Op::Exp: out = std::exp(a); return true;
    case Op::Log:
      if (a <= 0.0) return false;
      out = std::log(a);
      return true;
    case Op::Sqrt:
      if (a < 0.0) return false;
      out = std::sqrt(a);
      return true;
    case Op::Sinh: out = std::sinh(a); return true;
    case Op::Cosh: out = std::cosh(a); return true;
    case Op::Tanh: out = std::tanh(a); return true;
    default: return false;
  }
}

bool pow_defined(double base, double expo) {
  if (base == 0.0 && expo < 0.0) return false;
  if (base < 0.0 && std::trunc(expo) != expo) return false;
  return true;
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(Var v) {
  return (v.kind == VarKind::Base ? "x" : "y") + std::to_string(v.index + 1);
}

bool is_unary_function(Op op) {
  switch (op) {
    case Op::Sin: case Op::Cos: case Op::Exp: case Op::Log: case Op::Sqrt:
    case Op::Sinh: case Op::Cosh: case Op::Tanh:
      return true;
    default:
      return false;
  }
}

const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Sinh: return "sinh";
    case Op::Cosh: return "cosh";
    case Op::Tanh: return "tanh";
    default: return "";
  }
}

Expr::Expr() : node_(zero_node()) {}

Expr::Expr(double c)
    : node_(c == 0.0 ? zero_node() : make_node(Node{Op::Const, c, {}, {}, {}})) {}

Expr::Expr(Var v) : node_(make_node(Node{Op::Variable, 0.0, v, {}, {}})) {}

Expr Expr::arg0() const { return Expr(node_->a); }
Expr Expr::arg1() const { return Expr(node_->b); }

bool Expr::is_const() const { return node_->op == Op::Const; }
bool Expr::is_const(double c) const { return is_const() && node_->value == c; }
double Expr::const_value() const { return node_->value; }
Op Expr::op() const { return node_->op; }

Expr Expr::unary(Op op, Expr a) {
  if (a.is_const()) {
    double v = 0.0;
    if (fold_unary(op, a.const_value(), v)) return Expr(v);
  }
  if (op == Op::Neg && a.op() == Op::Neg) return a.arg0();
  return Expr(make_node(Node{op, 0.0, {}, a.node_, {}}));
}

Expr Expr::binary(Op op, Expr a, Expr b) {
  const bool ca = a.is_const();
  const bool cb = b.is_const();
  switch (op) {
    case Op::Add:
      if (ca && cb) return Expr(a.const_value() + b.const_value());
      if (a.is_const(0.0)) return b;
      if (b.is_const(0.0)) return a;
      break;
    case Op::Sub:
      if (ca && cb) return Expr(a.const_value() - b.const_value());
      if (b.is_const(0.0)) return a;
      if (a.is_const(0.0)) return unary(Op::Neg, b);
      break;
    case Op::Mul:
      if (ca && cb) return Expr(a.const_value() * b.const_value());
      if (a.is_const(0.0) || b.is_const(0.0)) return Expr(0.0);
      if (a.is_const(1.0)) return b;
      if (b.is_const(1.0)) return a;
      if (a.is_const(-1.0)) return unary(Op::Neg, b);
      if (b.is_const(-1.0)) return unary(Op::Neg, a);
      break;
    case Op::Div:
      if (ca && cb && b.const_value() != 0.0)
        return Expr(a.const_value() / b.const_value());
      if (a.is_const(0.0) && !b.is_const(0.0)) return Expr(0.0);
      if (b.is_const(1.0)) return a;
      break;
    case Op::Pow:
      if (cb && b.const_value() == 0.0) return Expr(1.0);
      if (cb && b.const_value() == 1.0) return a;
      if (ca && cb && pow_defined(a.const_value(), b.const_value()))
        return Expr(std::pow(a.const_value(), b.const_value()));
      break;
    default:
      throw std::logic_error("Expr::binary: not a binary op");
  }
  return Expr(make_node(Node{op, 0.0, {}, a.node_, b.node_}));
}

Expr operator+(Expr a, Expr b) { return Expr::binary(Op::Add, a, b); }
Expr operator-(Expr a, Expr b) { return Expr::binary(Op::Sub, a, b); }
Expr operator*(Expr a, Expr b) { return Expr::binary(Op::Mul, a, b); }
Expr operator/(Expr a, Expr b) { return Expr::binary(Op::Div, a, b); }
Expr operator-(Expr a) { return Expr::unary(Op::Neg, a); }
Expr pow(Expr base, double exponent) {
  return Expr::binary(Op::Pow, base, Expr(exponent));
}
Expr sin(Expr a) { return Expr::unary(Op::Sin, a); }
Expr cos(Expr a) { return Expr::unary(Op::Cos, a); }
Expr exp(Expr a) { return Expr::unary(Op::Exp, a); }
Expr log(Expr a) { return Expr::unary(Op::Log, a); }
Expr sqrt(Expr a) { return Expr::unary(Op::Sqrt, a); }
Expr sinh(Expr a) { return Expr::unary(Op::Sinh, a); }
Expr cosh(Expr a) { return Expr::unary(Op::Cosh, a); }
Expr tanh(Expr a) { return Expr::unary(Op::Tanh, a); }

std::unordered_map<const Node*, Differentiator::Entry>& Differentiator::table(Var v) {
  auto& tabs = v.kind == VarKind::Base ? base_ : fiber_;
  if (static_cast<std::size_t>(v.index) >= tabs.size()) tabs.resize(v.index + 1);
  return tabs[static_cast<std::size_t>(v.index)];
}

Expr Differentiator::operator()(const Expr& root, Var v) {
  auto& memo = table(v);

  std::function<Expr(const Expr&)> d = [&](const Expr& e) -> Expr {
    if (e.op() == Op::Const) return Expr(0.0);
    if (e.op() == Op::Variable) return Expr(e.node().var == v ? 1.0 : 0.0);
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second.result;
    Expr r;
    const Expr a = e.arg0();
    switch (e.op()) {
      case Op::Neg:
        r = -d(a);
        break;
      case Op::Sin:
        r = cos(a) * d(a);
        break;
      case Op::Cos:
        r = -(sin(a) * d(a));
        break;
      case Op::Exp:
        r = e * d(a);
        break;
      case Op::Log:
        r = d(a) / a;
        break;
      case Op::Sqrt:
        r = d(a) / (Expr(2.0) * e);
        break;
      case Op::Sinh:
        r = cosh(a) * d(a);
        break;
      case Op::Cosh:
        r = sinh(a) * d(a);
        break;
      case Op::Tanh:
        r = (Expr(1.0) - e * e) * d(a);
        break;
      case Op::Add:
        r = d(a) + d(e.arg1());
        break;
      case Op::Sub:
        r = d(a) - d(e.arg1());
        break;
      case Op::Mul: {
        const Expr b = e.arg1();
        r = d(a) * b + a * d(b);
        break;
      }
      case Op::Div: {
        const Expr b = e.arg1();
        const Expr da = d(a);
        const Expr db = d(b);
        if (db.is_const(0.0)) {
          r = da / b;
        } else {
          r = (da * b - a * db) / (b * b);
        }
        break;
      }
      case Op::Pow: {
        const double c = e.arg1().const_value();
        r = Expr(c) * pow(a, c - 1.0) * d(a);
        break;
      }
      default:
        break;
    }
    memo.emplace(e.id(), Entry{e, r});
    return r;
  };
  return d(root);
}

Expr differentiate(const Expr& e, Var v) {
  Differentiator d;
  return d(e, v);
}

namespace {

template <class F>
void visit_dag(const Node* root, F&& f) {
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{root};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!n || !seen.insert(n).second) continue;
    f(*n);
    stack.push_back(n->a.get());
    stack.push_back(n->b.get());
  }
}

int precedence(const Node& n) {
  switch (n.op) {
    case Op::Add: case Op::Sub: return 1;
    case Op::Mul: case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const: return n.value < 0.0 ? 3 : 5;
    default: return 5;
  }
}

void print(const Node& n, std::string& out);

void print_operand(const Node& n, int min_prec, std::string& out) {
  if (precedence(n) < min_prec) {
    out += '(';
    print(n, out);
    out += ')';
  } else {
    print(n, out);
  }
}

void print(const Node& n, std::string& out) {
  switch (n.op) {
    case Op::Const:
      out += format_number(n.value);
      return;
    case Op::Variable:
      out += to_string(n.var);
      return;
    case Op::Neg:
      out += '-';
      print_operand(*n.a, 3, out);
      return;
    case Op::Add:
    case Op::Sub:
      print_operand(*n.a, 1, out);
      out += n.op == Op::Add ? " + " : " - ";
      print_operand(*n.b, 2, out);
      return;
    case Op::Mul:
    case Op::Div:
      print_operand(*n.a, 2, out);
      out += n.op == Op::Mul ? "*" : "/";
      print_operand(*n.b, 3, out);
      return;
    case Op::Pow:
      print_operand(*n.a, 5, out);
      out += '^';
      print_operand(*n.b, 3, out);
      return;
    default:
      out += function_name(n.op);
      out += '(';
      print(*n.a, out);
      out += ')';
      return;
  }
}

}  // namespace

std::size_t dag_size(const Expr& e) {
  std::size_t count = 0;
  visit_dag(e.id(), [&](const Node&) { ++count; });
  return count;
}

VarExtent var_extent(const Expr& e) {
  VarExtent ext;
  visit_dag(e.id(), [&](const Node& n) {
    if (n.op != Op::Variable) return;
    if (n.var.kind == VarKind::Base) {
      ext.base = std::max(ext.base, n.var.index + 1);
    } else {
      ext.fiber = std::max(ext.fiber, n.var.index + 1);
    }
  });
  return ext;
}

std::string to_string(const Expr& e) {
  std::string out;
  print(e.node(), out);
  return out;
}

Evaluator::Evaluator(std::span<const double> x, std::span<const double> y)
    : x_(x.begin(), x.end()), y_(y.begin(), y.end()) {}

double Evaluator::operator()(const Expr& e) { return eval(e.node()); }

double Evaluator::eval(const Node& n) {
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Variable: {
      const auto& src = n.var.kind == VarKind::Base ? x_ : y_;
      if (n.var.index < 0 || static_cast<std::size_t>(n.var.index) >= src.size())
        throw EvalError("variable out of range of evaluation point",
                        to_string(n.var));
      return src[static_cast<std::size_t>(n.var.index)];
    }
    default:
      break;
  }
  if (auto it = memo_.find(&n); it != memo_.end()) return it->second;

  const auto fail = [&](const char* what) -> double {
    std::string text;
    print(n, text);
    throw EvalError(what, text);
  };

  const double a = eval(*n.a);
  double r = 0.0;
  switch (n.op) {
    case Op::Neg: r = -a; break;
    case Op::Sin: r = std::sin(a); break;
    case Op::Cos: r = std::cos(a); break;
    case Op::Exp: r = std::exp(a); break;
    case Op::Log:
      if (!(a > 0.0)) return fail("domain error: log of nonpositive value");
      r = std::log(a);
      break;
    case Op::Sqrt:
      if (!(a >= 0.0)) return fail("domain error: sqrt of negative value");
      r = std::sqrt(a);
      break;
    case Op::Sinh: r = std::sinh(a); break;
    case Op::Cosh: r = std::cosh(a); break;
    case Op::Tanh: r = std::tanh(a); break;
    case Op::Add: r = a + eval(*n.b); break;
    case Op::Sub: r = a - eval(*n.b); break;
    case Op::Mul: r = a * eval(*n.b); break;
    case Op::Div: {
      const double b = eval(*n.b);
      if (b == 0.0) return fail("division by zero");
      r = a / b;
      break;
    }
    case Op::Pow: {
      const double b = eval(*n.b);
      if (!pow_defined(a, b)) {
        return fail(a == 0.0 ? "division by zero: zero to a negative power"
                             : "domain error: negative base with fractional exponent");
      }
      r = std::pow(a, b);
      break;
    }
    default:
      break;
  }
  memo_.emplace(&n, r);
  return r;
}

double evaluate(const Expr& e, const BundlePoint& p) {
  Evaluator ev(p);
  return ev(e);
}

}  // namespace nhsol
