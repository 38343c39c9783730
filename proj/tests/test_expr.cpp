#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nhsol/expr.hpp"
#include "nhsol/parser.hpp"

using namespace nhsol;

namespace {

const Var X1 = Var::x(0), X2 = Var::x(1), Y1 = Var::y(0), Y2 = Var::y(1);

double at(const Expr& e, std::vector<double> x, std::vector<double> y) {
  return evaluate(e, BundlePoint{std::move(x), std::move(y)});
}

// Smooth random expressions over X1, X2, Y1, Y2 with safe domains.
Expr random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  const Var vars[] = {X1, X2, Y1, Y2};
  if (depth == 0) {
    const int k = pick(rng) % 5;
    return k == 4 ? Expr(c(rng)) : Expr(vars[k]);
  }
  const Expr a = random_expr(rng, depth - 1);
  const Expr b = random_expr(rng, depth - 1);
  switch (pick(rng)) {
    case 0: return a + b;
    case 1: return a - b;
    case 2: return a * b;
    case 3: return a / (2.5 + sin(b));
    case 4: return sin(a);
    case 5: return cos(a) * b;
    case 6: return exp(0.3 * a);
    case 7: return log(1.5 + tanh(a));
    case 8: return sqrt(1.0 + a * a);
    default: return pow(a, 3.0) - cosh(0.2 * b) + sinh(0.1 * a);
  }
}

}  // namespace

TEST(Expr, PowerRule) {
  const Expr e = pow(Expr(Y1), 2.0) + pow(Expr(Y2), 2.0);
  const Expr d = differentiate(e, Y1);
  EXPECT_DOUBLE_EQ(at(d, {0, 0}, {3, 5}), 6.0);
  EXPECT_DOUBLE_EQ(at(d, {1, 2}, {-0.5, 5}), -1.0);
}

TEST(Expr, ChainRule) {
  const Expr e = exp(2.0 * Expr(X1)) * pow(Expr(Y2), 2.0);
  const Expr d = differentiate(e, X1);
  for (double x : {-1.0, 0.0, 0.7}) {
    const double want = 2.0 * std::exp(2 * x) * 9.0;
    EXPECT_NEAR(at(d, {x, 0}, {0, 3}), want, 1e-12 * std::abs(want));
  }
}

TEST(Expr, RepeatedPowerRule) {
  const Expr e = pow(Expr(Y1), 4.0);
  const Expr d2 = differentiate(differentiate(e, Y1), Y1);
  for (double y : {-2.0, 0.5, 1.0, 3.0}) EXPECT_DOUBLE_EQ(at(d2, {}, {y}), 12 * y * y);
  const Expr d4 = differentiate(differentiate(d2, Y1), Y1);
  EXPECT_DOUBLE_EQ(at(d4, {}, {0.3}), 24.0);
  EXPECT_TRUE(differentiate(d4, Y1).is_const(0.0));
}

TEST(Expr, EvaluateBasics) {
  EXPECT_DOUBLE_EQ(at(2.0 * Expr(Y1), {}, {3}), 6.0);
  EXPECT_DOUBLE_EQ(at(exp(2.0 * Expr(X1)), {0}, {}), 1.0);
}

TEST(Expr, DomainErrorsNameTheNode) {
  const Expr e = 1.0 / (Expr(Y1) - 1.0);
  try {
    at(e, {}, {1.0});
    FAIL() << "expected division by zero";
  } catch (const EvalError& err) {
    EXPECT_NE(std::string(err.what()).find("division by zero"), std::string::npos);
    EXPECT_NE(err.node_text().find("y1"), std::string::npos);
  }
  EXPECT_THROW(at(log(Expr(X1)), {0.0}, {}), EvalError);
  EXPECT_THROW(at(log(Expr(X1)), {-1.0}, {}), EvalError);
  EXPECT_THROW(at(sqrt(Expr(X1)), {-1e-3}, {}), EvalError);
  EXPECT_THROW(at(Expr(X2), {1.0}, {}), EvalError);
}

TEST(Expr, ConstantFolding) {
  EXPECT_TRUE((Expr(2.0) * Expr(3.0)).is_const(6.0));
  EXPECT_TRUE((Expr(0.0) * Expr(Y1)).is_const(0.0));
  const Expr y(Y1);
  EXPECT_EQ((Expr(1.0) * y).id(), y.id());
  EXPECT_EQ((y + 0.0).id(), y.id());
  EXPECT_TRUE(pow(Expr(Y1), 0.0).is_const(1.0));
  EXPECT_TRUE(differentiate(sin(Expr(X1)) * Expr(X2), Y1).is_const(0.0));
  // log of a nonpositive constant is kept for evaluation to report
  EXPECT_FALSE(log(Expr(-1.0)).is_const());
}

TEST(Expr, DerivativeMatchesCentralDifferences) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Var vars[] = {X1, X2, Y1, Y2};
  int checked = 0;
  while (checked < 100) {
    const Expr e = random_expr(rng, 3);
    const Var v = vars[checked % 4];
    BundlePoint p{{u(rng), u(rng)}, {u(rng), u(rng)}};
    const Expr d = differentiate(e, v);
    const double exact = evaluate(d, p);
    const double h = 1e-5;
    auto shifted = [&](double s) {
      BundlePoint q = p;
      (v.kind == VarKind::Base ? q.x : q.y)[static_cast<std::size_t>(v.index)] += s;
      return evaluate(e, q);
    };
    const double fd = (shifted(h) - shifted(-h)) / (2 * h);
    const double rel = std::abs(exact - fd) / std::max(1.0, std::abs(exact));
    EXPECT_LT(rel, 1e-6) << to_string(e) << " d/" << to_string(v);
    ++checked;
  }
}

TEST(Expr, Linearity) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    const Expr e1 = random_expr(rng, 3), e2 = random_expr(rng, 3);
    const double a = u(rng) * 3;
    const Expr lhs = differentiate(a * e1 + e2, Y1);
    const Expr rhs = a * differentiate(e1, Y1) + differentiate(e2, Y1);
    BundlePoint p{{u(rng), u(rng)}, {u(rng), u(rng)}};
    EXPECT_NEAR(evaluate(lhs, p), evaluate(rhs, p), 1e-12 * std::max(1.0, std::abs(evaluate(rhs, p))));
  }
}

TEST(Expr, MixedPartialsCommute) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    const Expr e = random_expr(rng, 3);
    BundlePoint p{{u(rng), u(rng)}, {u(rng), u(rng)}};
    const double a = evaluate(differentiate(differentiate(e, X1), Y2), p);
    const double b = evaluate(differentiate(differentiate(e, Y2), X1), p);
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST(Expr, PrintParseRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const Expr e = random_expr(rng, 3);
    const Expr back = parse_expr(to_string(e));
    BundlePoint p{{u(rng), u(rng)}, {u(rng), u(rng)}};
    EXPECT_EQ(evaluate(back, p), evaluate(e, p)) << to_string(e);
  }
  // negative constants and powers of negatives print unambiguously
  const Expr e = pow(Expr(-2.0) * Expr(Y1), 2.0) - Expr(-3.0) / Expr(X1);
  EXPECT_EQ(evaluate(parse_expr(to_string(e)), {{2.0}, {1.5}}), evaluate(e, {{2.0}, {1.5}}));
}

TEST(Expr, SharedStructureIsReused) {
  Differentiator diff;
  const Expr base = exp(sin(Expr(X1)) * Expr(Y1));
  const Expr a = diff(base * Expr(Y2), Y1);
  const Expr b = diff(base, Y1);
  // the derivative of the shared factor is one node in both results
  EXPECT_LT(dag_size(a), dag_size(base) + dag_size(b) + 6);
  EXPECT_EQ(diff(base, Y1).id(), b.id());
}

TEST(Expr, VarExtent) {
  const VarExtent v = var_extent(Expr(X2) * Expr(Y1) + 1.0);
  EXPECT_EQ(v.base, 2);
  EXPECT_EQ(v.fiber, 1);
}
