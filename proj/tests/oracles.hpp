// Independent reference computations shared by the unit tests and the
// acceptance driver. Nothing here calls the geometry pipeline or the
// operator engine except where a test explicitly compares against them.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "nhsol/expr.hpp"
#include "nhsol/geometry.hpp"
#include "nhsol/spectral.hpp"
#include "nhsol/tensor.hpp"

namespace oracle {

using nhsol::Arr3;
using nhsol::Arr4;
using nhsol::BundlePoint;
using nhsol::Expr;
using nhsol::ExprMat;
using nhsol::Mat;
using nhsol::Var;
using nhsol::Vec;

// Metric g(x), its first and second x-derivatives at one point.
struct MetricJet {
  Eigen::MatrixXd g, gi;
  std::vector<Eigen::MatrixXd> dg;                // dg[k] = d_k g
  std::vector<std::vector<Eigen::MatrixXd>> ddg;  // ddg[k][l] = d_k d_l g
};

inline MetricJet metric_jet(const ExprMat& g, const std::vector<double>& x) {
  const int n = static_cast<int>(g.size());
  BundlePoint p{x, {}};
  MetricJet J;
  J.g.resize(n, n);
  J.dg.assign(n, Eigen::MatrixXd(n, n));
  J.ddg.assign(n, std::vector<Eigen::MatrixXd>(n, Eigen::MatrixXd(n, n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Expr& e = g[i][j];
      J.g(i, j) = nhsol::evaluate(e, p);
      for (int k = 0; k < n; ++k) {
        const Expr dk = nhsol::differentiate(e, Var::x(k));
        J.dg[k](i, j) = nhsol::evaluate(dk, p);
        for (int l = 0; l < n; ++l)
          J.ddg[k][l](i, j) = nhsol::evaluate(nhsol::differentiate(dk, Var::x(l)), p);
      }
    }
  J.gi = J.g.inverse();
  return J;
}

// Levi-Civita symbols gamma[i][j][k] = 1/2 g^il (d_j g_lk + d_k g_lj - d_l g_jk).
inline Arr3 christoffel(const MetricJet& J) {
  const int n = static_cast<int>(J.g.rows());
  Arr3 G = nhsol::zeros(n, n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          G[i][j][k] += 0.5 * J.gi(i, l) * (J.dg[j](l, k) + J.dg[k](l, j) - J.dg[l](j, k));
  return G;
}

// dGamma[m][i][j][k] = d_m gamma^i_jk.
inline Arr4 christoffel_derivative(const MetricJet& J) {
  const int n = static_cast<int>(J.g.rows());
  Arr4 D = nhsol::zeros(n, n, n, n);
  for (int m = 0; m < n; ++m) {
    const Eigen::MatrixXd dgi = -J.gi * J.dg[m] * J.gi;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const double s = J.dg[j](l, k) + J.dg[k](l, j) - J.dg[l](j, k);
            const double ds = J.ddg[m][j](l, k) + J.ddg[m][k](l, j) - J.ddg[m][l](j, k);
            D[m][i][j][k] += 0.5 * (dgi(i, l) * s + J.gi(i, l) * ds);
          }
  }
  return D;
}

// Riemann tensor Riem[a][k][j][i] = d_j G^a_ik - d_i G^a_jk + G^a_jb G^b_ik - G^a_ib G^b_jk.
inline Arr4 riemann(const MetricJet& J) {
  const int n = static_cast<int>(J.g.rows());
  const Arr3 G = christoffel(J);
  const Arr4 D = christoffel_derivative(J);
  Arr4 R = nhsol::zeros(n, n, n, n);
  for (int a = 0; a < n; ++a)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          double v = D[j][a][i][k] - D[i][a][j][k];
          for (int b = 0; b < n; ++b) v += G[a][j][b] * G[b][i][k] - G[a][i][b] * G[b][j][k];
          R[a][k][j][i] = v;
        }
  return R;
}

// Electromagnetic Lagrangian m0 a_ij y^i y^j + e0 A_i y^i, closed forms coded
// straight from the definitions: F_jk = e0/4 (d_k A_j - d_j A_k),
// F^i_j = g^ih F_jh with g = m0 a, N^i_j = Gamma^i_jk y^k - F^i_j.
struct EmOracle {
  ExprMat a;
  std::vector<Expr> A;
  double m0 = 1, e0 = 1;

  int n() const { return static_cast<int>(a.size()); }

  Mat F_low(const std::vector<double>& x) const {
    const int d = n();
    BundlePoint p{x, {}};
    Mat F = nhsol::zeros(d, d);
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        F[j][k] = e0 / 4 *
                  (nhsol::evaluate(nhsol::differentiate(A[j], Var::x(k)), p) -
                   nhsol::evaluate(nhsol::differentiate(A[k], Var::x(j)), p));
    return F;
  }

  // F^i_j = g^ih F_jh.
  Mat F_up(const std::vector<double>& x) const {
    const int d = n();
    const MetricJet J = metric_jet(a, x);
    const Mat F = F_low(x);
    Mat out = nhsol::zeros(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int h = 0; h < d; ++h) out[i][j] += J.gi(i, h) / m0 * F[j][h];
    return out;
  }

  Mat N(const BundlePoint& p) const {
    const int d = n();
    const Arr3 G = christoffel(metric_jet(a, p.x));
    const Mat Fu = F_up(p.x);
    Mat out = nhsol::zeros(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double v = -Fu[i][j];
        for (int k = 0; k < d; ++k) v += G[i][j][k] * p.y[k];
        out[i][j] = v;
      }
    return out;
  }

  // Omega^a_ij = y^k Riem^a_kji - (nabla_j F^a_i - nabla_i F^a_j), with the
  // derivatives of F^a_i taken by 4th-order central differences in x.
  Arr3 Omega(const BundlePoint& p) const {
    const int d = n();
    const MetricJet J = metric_jet(a, p.x);
    const Arr3 G = christoffel(J);
    const Arr4 R = riemann(J);
    const Mat Fu = F_up(p.x);
    std::vector<Mat> dF(d);
    const double h = 1e-3;
    for (int m = 0; m < d; ++m) {
      auto at = [&](double s) {
        std::vector<double> x = p.x;
        x[m] += s;
        return F_up(x);
      };
      const Mat p1 = at(h), m1 = at(-h), p2 = at(2 * h), m2 = at(-2 * h);
      dF[m] = nhsol::zeros(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          dF[m][i][j] = (-p2[i][j] + 8 * p1[i][j] - 8 * m1[i][j] + m2[i][j]) / (12 * h);
    }
    Arr3 out = nhsol::zeros(d, d, d);
    for (int A_ = 0; A_ < d; ++A_)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double v = 0;
          for (int k = 0; k < d; ++k) v += p.y[k] * R[A_][k][j][i];
          double cov = dF[j][A_][i] - dF[i][A_][j];
          for (int b = 0; b < d; ++b) cov += G[A_][j][b] * Fu[b][i] - G[A_][i][b] * Fu[b][j];
          out[A_][i][j] = v - cov;
        }
    return out;
  }
};

// Euler-Lagrange residual along the path obtained by integrating
// x'' = -2 G(x, x') with the pipeline semispray. Momenta dL/dy and forces
// dL/dx come from central differences of L itself, so the check is
// independent of the symbolic Hessian and semispray formulas.
inline double euler_lagrange_residual(const nhsol::LagrangianSpec& spec, std::vector<double> x,
                                      std::vector<double> y, double t_end, double dt) {
  const int n = spec.n;
  using State = std::vector<double>;
  nhsol::semispray(spec, BundlePoint{x, y});  // regularity at the start point
  const nhsol::ExprVec spray = nhsol::symbolic_semispray(spec);
  auto rhs = [&](const State& s) {
    nhsol::Evaluator ev(std::span<const double>(s.data(), n), std::span<const double>(s.data() + n, n));
    const Vec G = nhsol::evaluate(spray, ev);
    State d(2 * n);
    for (int i = 0; i < n; ++i) {
      d[i] = s[n + i];
      d[n + i] = -2 * G[i];
    }
    return d;
  };
  State s(2 * n);
  for (int i = 0; i < n; ++i) {
    s[i] = x[i];
    s[n + i] = y[i];
  }
  const int steps = static_cast<int>(std::lround(t_end / dt));
  std::vector<State> path{s};
  for (int k = 0; k < steps; ++k) {
    auto axpy = [&](const State& a, const State& b, double c) {
      State r(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + c * b[i];
      return r;
    };
    const State k1 = rhs(s), k2 = rhs(axpy(s, k1, dt / 2)), k3 = rhs(axpy(s, k2, dt / 2)),
                k4 = rhs(axpy(s, k3, dt));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    path.push_back(s);
  }
  const double h = 1e-5;
  auto partial = [&](const State& st, bool fiber, int idx) {
    BundlePoint p{State(st.begin(), st.begin() + n), State(st.begin() + n, st.end())};
    auto& v = fiber ? p.y : p.x;
    const double c = v[idx];
    v[idx] = c + h;
    const double fp = nhsol::evaluate(spec.body, p);
    v[idx] = c - h;
    const double fm = nhsol::evaluate(spec.body, p);
    return (fp - fm) / (2 * h);
  };
  double worst = 0;
  for (int k = 1; k < steps; ++k)
    for (int j = 0; j < n; ++j) {
      const double dp = (partial(path[k + 1], true, j) - partial(path[k - 1], true, j)) / (2 * dt);
      worst = std::max(worst, std::abs(dp - partial(path[k], false, j)));
    }
  return worst;
}

// Derivatives of a sech(b s) in s: returns {f, f', f'', f'''}.
inline std::array<double, 4> sech_jet(double a, double b, double s) {
  const double S = 1.0 / std::cosh(b * s), T = std::tanh(b * s);
  const double f = a * S;
  const double f1 = -a * b * S * T;
  const double f2 = a * b * b * (S * T * T - S * S * S);
  const double f3 = a * b * b * b * (-S * T * T * T + 5 * S * S * S * T);
  return {f, f1, f2, f3};
}

}  // namespace oracle
