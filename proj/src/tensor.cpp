#include "nhsol/tensor.hpp"

#include <Eigen/Dense>
#include <map>
#include <stdexcept>
#include <utility>

namespace nhsol {

Mat identity(std::size_t n) {
  Mat m = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

namespace {

// Minor over the rows `rows` (a bitmask) and columns `cols`, both of the same
// popcount; expands along the lowest remaining row.
class MinorTable {
 public:
  explicit MinorTable(const ExprMat& a) : a_(a) {}

  Expr det(unsigned rows, unsigned cols) {
    if (rows == 0) return Expr(1.0);
    const auto key = std::make_pair(rows, cols);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    int r = 0;
    while (!(rows & (1u << r))) ++r;
    Expr sum;
    int sign_pos = 0;
    for (std::size_t c = 0; c < a_.size(); ++c) {
      if (!(cols & (1u << c))) continue;
      const Expr& entry = a_[static_cast<std::size_t>(r)][c];
      if (!entry.is_const(0.0)) {
        Expr term = entry * det(rows & ~(1u << r), cols & ~(1u << c));
        sum = (sign_pos % 2 == 0) ? sum + term : sum - term;
      }
      ++sign_pos;
    }
    memo_.emplace(key, sum);
    return sum;
  }

 private:
  const ExprMat& a_;
  std::map<std::pair<unsigned, unsigned>, Expr> memo_;
};

}  // namespace

Expr sym_det(const ExprMat& a) {
  const std::size_t n = a.size();
  if (n > 16) throw std::invalid_argument("sym_det: matrix too large");
  MinorTable t(a);
  const unsigned all = (1u << n) - 1u;
  return t.det(all, all);
}

ExprMat sym_inverse(const ExprMat& a) {
  const std::size_t n = a.size();
  if (n > 16) throw std::invalid_argument("sym_inverse: matrix too large");
  MinorTable t(a);
  const unsigned all = (1u << n) - 1u;
  const Expr det = t.det(all, all);
  ExprMat inv = expr_zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      // inv[i][j] = (-1)^(i+j) M_ji / det
      Expr minor = t.det(all & ~(1u << j), all & ~(1u << i));
      if ((i + j) % 2 == 1) minor = -minor;
      inv[i][j] = minor / det;
    }
  }
  return inv;
}

LuCheck lu_check(const Mat& a, double rel_tol) {
  const std::size_t n = a.size();
  Eigen::MatrixXd m(n, n);
  LuCheck out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      m(i, j) = a[i][j];
      out.max_entry = std::max(out.max_entry, std::abs(a[i][j]));
    }
  if (n == 0) return out;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
  const Eigen::MatrixXd& packed = lu.matrixLU();
  out.min_pivot = std::abs(packed(0, 0));
  for (std::size_t i = 1; i < n; ++i) out.min_pivot = std::min(out.min_pivot, std::abs(packed(i, i)));
  out.det = lu.determinant();
  out.degenerate = !(out.min_pivot >= rel_tol * out.max_entry) || out.max_entry == 0.0;
  return out;
}

Mat inverse(const Mat& a) {
  const std::size_t n = a.size();
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = a[i][j];
  const Eigen::MatrixXd inv = m.partialPivLu().inverse();
  Mat out = zeros(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i][j] = inv(i, j);
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  const std::size_t r = a.size();
  const std::size_t k = b.size();
  const std::size_t c = k ? b[0].size() : 0;
  Mat out = zeros(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t l = 0; l < k; ++l)
      for (std::size_t j = 0; j < c; ++j) out[i][j] += a[i][l] * b[l][j];
  return out;
}

Mat transpose(const Mat& a) {
  const std::size_t r = a.size();
  const std::size_t c = r ? a[0].size() : 0;
  Mat out = zeros(c, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j][i] = a[i][j];
  return out;
}

Vec evaluate(const ExprVec& v, Evaluator& ev) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = ev(v[i]);
  return out;
}

Mat evaluate(const ExprMat& m, Evaluator& ev) {
  Mat out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = evaluate(m[i], ev);
  return out;
}

Arr3 evaluate(const ExprArr3& m, Evaluator& ev) {
  Arr3 out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = evaluate(m[i], ev);
  return out;
}

Arr4 evaluate(const ExprArr4& m, Evaluator& ev) {
  Arr4 out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = evaluate(m[i], ev);
  return out;
}

}  // namespace nhsol
