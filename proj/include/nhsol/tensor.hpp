#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "nhsol/expr.hpp"

namespace nhsol {

// Dense nested arrays; index order is exactly the written index order of the
// coefficient, e.g. R[i][h][j][k] = R^i_hjk.
using Vec = std::vector<double>;
using Mat = std::vector<Vec>;
using Arr3 = std::vector<Mat>;
using Arr4 = std::vector<Arr3>;

using ExprVec = std::vector<Expr>;
using ExprMat = std::vector<ExprVec>;
using ExprArr3 = std::vector<ExprMat>;
using ExprArr4 = std::vector<ExprArr3>;

inline Mat zeros(std::size_t a, std::size_t b) { return Mat(a, Vec(b, 0.0)); }
inline Arr3 zeros(std::size_t a, std::size_t b, std::size_t c) {
  return Arr3(a, zeros(b, c));
}
inline Arr4 zeros(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  return Arr4(a, zeros(b, c, d));
}
Mat identity(std::size_t n);

inline ExprMat expr_zeros(std::size_t a, std::size_t b) { return ExprMat(a, ExprVec(b)); }
inline ExprArr3 expr_zeros(std::size_t a, std::size_t b, std::size_t c) {
  return ExprArr3(a, expr_zeros(b, c));
}
inline ExprArr4 expr_zeros(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  return ExprArr4(a, expr_zeros(b, c, d));
}

inline double max_abs(double v) { return std::abs(v); }
template <class T>
double max_abs(const std::vector<T>& v) {
  double m = 0.0;
  for (const auto& e : v) m = std::max(m, max_abs(e));
  return m;
}

inline double max_abs_diff(double a, double b) { return std::abs(a - b); }
template <class T>
double max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
    m = std::max(m, max_abs_diff(a[i], b[i]));
  return m;
}

// Symbolic determinant and inverse (adjugate / determinant, Laplace expansion
// with memoized minors). Meant for the small blocks of a d-metric.
Expr sym_det(const ExprMat& a);
ExprMat sym_inverse(const ExprMat& a);

// Partial-pivoting LU. `degenerate` is set when the smallest pivot falls below
// rel_tol times the largest absolute entry.
struct LuCheck {
  double min_pivot = 0.0;
  double max_entry = 0.0;
  double det = 0.0;
  bool degenerate = false;
};
LuCheck lu_check(const Mat& a, double rel_tol = 1e-10);

Mat inverse(const Mat& a);
Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);

// Evaluate every entry with one shared evaluator.
Mat evaluate(const ExprMat& m, Evaluator& ev);
Arr3 evaluate(const ExprArr3& m, Evaluator& ev);
Arr4 evaluate(const ExprArr4& m, Evaluator& ev);
Vec evaluate(const ExprVec& v, Evaluator& ev);

}  // namespace nhsol
