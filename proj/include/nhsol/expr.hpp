#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace nhsol {

// Coordinate on the bundle: base x^i or fiber y^a. `index` is 0-based here;
// the textual grammar (x1, y2, ...) is 1-based.
enum class VarKind { Base, Fiber };

struct Var {
  VarKind kind = VarKind::Base;
  int index = 0;

  static constexpr Var x(int i) { return {VarKind::Base, i}; }
  static constexpr Var y(int a) { return {VarKind::Fiber, a}; }

  friend bool operator==(const Var&, const Var&) = default;
};

std::string to_string(Var v);

enum class Op {
  Const,
  Variable,
  Neg,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  Sinh,
  Cosh,
  Tanh,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
};

bool is_unary_function(Op op);
const char* function_name(Op op);

class Expr;
struct Node;

// Immutable expression DAG handle. Copies share structure; nodes never mutate
// after construction, so handles may be read from any number of threads.
class Expr {
 public:
  Expr();  // constant 0
  Expr(double c);  // NOLINT(google-explicit-constructor)
  Expr(Var v);     // NOLINT(google-explicit-constructor)

  const Node& node() const { return *node_; }
  const Node* id() const { return node_.get(); }
  Expr arg0() const;
  Expr arg1() const;

  bool is_const() const;
  bool is_const(double c) const;
  double const_value() const;  // only valid when is_const()
  Op op() const;

  // Smart constructors fold constants and drop neutral elements.
  static Expr unary(Op op, Expr a);
  static Expr binary(Op op, Expr a, Expr b);

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

struct Node {
  Op op = Op::Const;
  double value = 0.0;
  Var var{};
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
};

Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr operator*(Expr a, Expr b);
Expr operator/(Expr a, Expr b);
Expr operator-(Expr a);
Expr pow(Expr base, double exponent);
Expr sin(Expr a);
Expr cos(Expr a);
Expr exp(Expr a);
Expr log(Expr a);
Expr sqrt(Expr a);
Expr sinh(Expr a);
Expr cosh(Expr a);
Expr tanh(Expr a);

// Exact symbolic partial derivative with constant folding.
Expr differentiate(const Expr& e, Var v);

// Differentiation with a memo that persists across calls, so derivatives of
// subexpressions shared between many coefficients are built once.
class Differentiator {
 public:
  Expr operator()(const Expr& e, Var v);

 private:
  struct Entry {
    Expr source;  // keeps the keyed node alive
    Expr result;
  };
  std::unordered_map<const Node*, Entry>& table(Var v);
  std::vector<std::unordered_map<const Node*, Entry>> base_;
  std::vector<std::unordered_map<const Node*, Entry>> fiber_;
};

// Number of distinct DAG nodes reachable from e.
std::size_t dag_size(const Expr& e);

// Largest variable index (+1) used per kind; used for dimension checks.
struct VarExtent {
  int base = 0;
  int fiber = 0;
};
VarExtent var_extent(const Expr& e);

// Round-trippable textual form in the input grammar.
std::string to_string(const Expr& e);

// Bundle point u = (x, y).
struct BundlePoint {
  std::vector<double> x;
  std::vector<double> y;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& what, std::string node_text)
      : std::runtime_error(what + " at `" + node_text + "`"),
        node_text_(std::move(node_text)) {}
  const std::string& node_text() const { return node_text_; }

 private:
  std::string node_text_;
};

// Evaluates many expressions at one point, sharing a memo across the shared
// sub-DAGs. Not thread-safe; use one Evaluator per thread.
class Evaluator {
 public:
  Evaluator(std::span<const double> x, std::span<const double> y);
  explicit Evaluator(const BundlePoint& p) : Evaluator(p.x, p.y) {}

  double operator()(const Expr& e);

 private:
  double eval(const Node& n);

  std::vector<double> x_;
  std::vector<double> y_;
  std::unordered_map<const Node*, double> memo_;
};

double evaluate(const Expr& e, const BundlePoint& p);

}  // namespace nhsol
