#include "nhsol/frames.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>

namespace nhsol {

namespace {

Eigen::MatrixXd to_eigen(const Mat& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = a[i][j];
  return m;
}

Mat from_eigen(const Eigen::MatrixXd& m) {
  Mat a = zeros(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a[i][j] = m(i, j);
  return a;
}

// out[a'][b'][c'][d'] = U[a'][a] M1[b][b'] M2[c][c'] M3[d][d'] T[a][b][c][d]
Arr4 transform(const Arr4& t, const Mat& U, const Mat& M1, const Mat& M2, const Mat& M3) {
  const std::size_t A = t.size();
  if (A == 0) return t;
  const std::size_t B = t[0].size(), C = t[0][0].size(), D = t[0][0][0].size();
  Arr4 x = zeros(A, B, C, D);
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t d = 0; d < D; ++d) {
          double s = 0;
          for (std::size_t q = 0; q < D; ++q) s += t[a][b][c][q] * M3[q][d];
          x[a][b][c][d] = s;
        }
  Arr4 y = zeros(A, B, C, D);
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t d = 0; d < D; ++d) {
          double s = 0;
          for (std::size_t q = 0; q < C; ++q) s += x[a][b][q][d] * M2[q][c];
          y[a][b][c][d] = s;
        }
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t d = 0; d < D; ++d) {
          double s = 0;
          for (std::size_t q = 0; q < B; ++q) s += y[a][q][c][d] * M1[q][b];
          x[a][b][c][d] = s;
        }
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t d = 0; d < D; ++d) {
          double s = 0;
          for (std::size_t q = 0; q < A; ++q) s += U[a][q] * x[q][b][c][d];
          y[a][b][c][d] = s;
        }
  return y;
}

void flatten(const Arr4& t, std::vector<double>& out) {
  for (const auto& a : t)
    for (const auto& b : a)
      for (const auto& c : b)
        for (double v : c) out.push_back(v);
}

double sorted_mean(std::vector<double> v) {
  // order-independent: sort by value, then sum
  std::sort(v.begin(), v.end());
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

template <class E>
[[noreturn]] void rethrow_annotated(const E& e, std::size_t sample) {
  throw E("sample " + std::to_string(sample) + ": " + e.what());
}

bool structurally_symmetric(const ExprMat& g) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i].size() != g.size()) return false;
    for (std::size_t j = i + 1; j < g.size(); ++j)
      if (g[i][j].id() != g[j][i].id() && to_string(g[i][j]) != to_string(g[j][i])) return false;
  }
  return true;
}

}  // namespace

Mat orthonormal_factor(const Mat& g, Vec* signature) {
  const std::size_t n = g.size();
  if (lu_check(g).degenerate) throw DegenerateBlock("cannot orthonormalize a degenerate block");
  const Eigen::MatrixXd G = to_eigen(g);
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() == Eigen::Success) {
    // g = L L^T  =>  A = L^{-T} gives A^T g A = I
    const Eigen::MatrixXd L = llt.matrixL();
    const Eigen::MatrixXd A =
        L.transpose().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n, n));
    if (signature) signature->assign(n, 1.0);
    return from_eigen(A);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const Eigen::VectorXd lam = es.eigenvalues();
  Eigen::MatrixXd A = es.eigenvectors();
  if (signature) signature->assign(n, 1.0);
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n); ++k) {
    A.col(k) /= std::sqrt(std::abs(lam(k)));
    if (signature) (*signature)[static_cast<std::size_t>(k)] = lam(k) < 0 ? -1.0 : 1.0;
  }
  return from_eigen(A);
}

OrthoFrame orthonormalize(const DMetric& dm) {
  OrthoFrame f;
  f.A_h = orthonormal_factor(dm.g, &f.signature_h);
  f.A_v = orthonormal_factor(dm.h, &f.signature_v);
  return f;
}

ConstantCurvatureReport check_constant_curvature(Geometry& geo,
                                                 const std::vector<BundlePoint>& samples,
                                                 double tol) {
  if (samples.size() < 2)
    throw std::invalid_argument("insufficient samples: constancy check needs at least 2");
  const bool vec = geo.space().mode == BundleMode::Vector;
  const std::vector<std::string> names =
      vec ? std::vector<std::string>{"R", "P", "S", "R_v", "P_v", "S_h"}
          : std::vector<std::string>{"R", "P", "S"};

  // values[class][sample] = flattened orthonormal-frame components
  std::vector<std::vector<std::vector<double>>> values(names.size());
  std::vector<double> rf, sb;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    DCurvature c;
    DMetric dm;
    try {
      dm = geo.dmetric(samples[s]);
      c = geo.curvature(samples[s]);
    } catch (const DegenerateHessian& e) {
      rethrow_annotated(e, s);
    } catch (const DegenerateBlock& e) {
      rethrow_annotated(e, s);
    } catch (const GeometryError& e) {
      rethrow_annotated(e, s);
    } catch (const EvalError& e) {
      throw GeometryError("sample " + std::to_string(s) + ": " + e.what());
    }
    const OrthoFrame f = orthonormalize(dm);
    const Mat Ah = f.A_h, Av = f.A_v;
    const Mat Uh = inverse(Ah), Uv = inverse(Av);
    std::vector<Arr4> t;
    t.push_back(transform(c.R, Uh, Ah, Ah, Ah));
    t.push_back(transform(c.P, Uh, Ah, Ah, Av));
    t.push_back(transform(c.S, Uv, Av, Av, Av));
    if (vec) {
      t.push_back(transform(c.R_v, Uv, Av, Ah, Ah));
      t.push_back(transform(c.P_v, Uv, Av, Ah, Av));
      t.push_back(transform(c.S_h, Uh, Ah, Av, Av));
    }
    for (std::size_t k = 0; k < names.size(); ++k) {
      std::vector<double> flat;
      flatten(t[k], flat);
      values[k].push_back(std::move(flat));
    }
    const RicciScalars rs = ricci_and_scalars(c, dm);
    rf.push_back(rs.R_fwd);
    sb.push_back(rs.S_bwd);
  }

  ConstantCurvatureReport rep;
  rep.samples = samples;
  rep.tol = tol;
  rep.constant = true;
  for (std::size_t k = 0; k < names.size(); ++k) {
    ClassSpread cs;
    cs.name = names[k];
    const std::size_t ncomp = values[k][0].size();
    for (std::size_t q = 0; q < ncomp; ++q) {
      std::vector<double> col;
      for (const auto& sample : values[k]) col.push_back(sample[q]);
      const double mean = sorted_mean(col);
      for (double v : col) {
        cs.max_deviation = std::max(cs.max_deviation, std::abs(v - mean));
        cs.max_abs = std::max(cs.max_abs, std::abs(v));
      }
    }
    if (!(cs.max_deviation < tol)) rep.constant = false;
    rep.classes.push_back(cs);
  }
  rep.R_fwd = sorted_mean(rf);
  rep.S_bwd = sorted_mean(sb);
  for (double v : rf) rep.R_fwd_spread = std::max(rep.R_fwd_spread, std::abs(v - rep.R_fwd));
  for (double v : sb) rep.S_bwd_spread = std::max(rep.S_bwd_spread, std::abs(v - rep.S_bwd));
  return rep;
}

ConstantCurvatureReport check_constant_curvature(const Space& space,
                                                 const std::vector<BundlePoint>& samples,
                                                 double tol) {
  Geometry geo(space);
  return check_constant_curvature(geo, samples, tol);
}

ExprArr3 christoffel(const ExprMat& g) {
  const std::size_t n = g.size();
  const ExprMat gi = sym_inverse(g);
  Differentiator d;
  // dg[k][i][j] = d_k g_ij
  ExprArr3 dg = expr_zeros(n, n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) dg[k][i][j] = d(g[i][j], Var::x(static_cast<int>(k)));
  ExprArr3 gam = expr_zeros(n, n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = j; k < n; ++k) {
        Expr s;
        for (std::size_t h = 0; h < n; ++h)
          s = s + gi[i][h] * (dg[j][h][k] + dg[k][h][j] - dg[h][j][k]);
        gam[i][j][k] = Expr(0.5) * s;
        gam[i][k][j] = gam[i][j][k];
      }
  return gam;
}

Space build_flat_lift(const ExprMat& g_base, BundleMode mode) {
  const std::size_t n = g_base.size();
  if (n == 0 || !structurally_symmetric(g_base))
    throw std::invalid_argument("base metric must be a nonempty symmetric matrix");
  for (const auto& row : g_base)
    for (const auto& e : row)
      if (var_extent(e).fiber > 0) throw std::invalid_argument("base metric may depend on x only");
  // Geodesic spray of g_base: Lagrangian g_ij(x) y^i y^j.
  LagrangianSpec L;
  L.n = L.m = static_cast<int>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      L.body = L.body + g_base[i][j] * Expr(Var::y(static_cast<int>(i))) *
                            Expr(Var::y(static_cast<int>(j)));
  Space s;
  s.kind = "flat_lift";
  s.n = s.m = static_cast<int>(n);
  s.mode = mode;
  s.g = expr_zeros(n, n);
  for (std::size_t i = 0; i < n; ++i) s.g[i][i] = Expr(1.0);
  s.h = s.g;
  s.G = symbolic_semispray(L);
  Differentiator d;
  s.N = expr_zeros(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s.N[i][j] = d(s.G[i], Var::y(static_cast<int>(j)));
  s.aux_metric = g_base;
  return s;
}

EmSpace build_em_space(const ExprMat& a, const ExprVec& A, double m0, double e0) {
  const std::size_t n = a.size();
  if (m0 == 0.0) throw std::invalid_argument("m0 must be nonzero");
  if (n < 2 || A.size() != n || !structurally_symmetric(a))
    throw std::invalid_argument("em space needs a symmetric n x n metric a and n-vector A, n >= 2");
  LagrangianSpec L;
  L.n = L.m = static_cast<int>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Expr yi(Var::y(static_cast<int>(i)));
    for (std::size_t j = 0; j < n; ++j)
      L.body = L.body + Expr(m0) * a[i][j] * yi * Expr(Var::y(static_cast<int>(j)));
  }
  for (std::size_t i = 0; i < n; ++i)
    L.body = L.body + Expr(e0) * A[i] * Expr(Var::y(static_cast<int>(i)));
  L.source = to_string(L.body);

  EmSpace em;
  em.space = lagrangian_space(L);
  em.space.kind = "em";
  em.space.aux_metric = a;

  em.christoffel = christoffel(a);
  Differentiator d;
  em.F = expr_zeros(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      em.F[j][k] = Expr(e0 / 4.0) * (d(A[j], Var::x(static_cast<int>(k))) -
                                     d(A[k], Var::x(static_cast<int>(j))));
  const ExprMat ai = sym_inverse(a);
  em.N_closed = expr_zeros(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Expr v;
      for (std::size_t k = 0; k < n; ++k)
        v = v + em.christoffel[i][j][k] * Expr(Var::y(static_cast<int>(k)));
      Expr Fij;  // F^i_j = g^ih F_jh
      for (std::size_t h = 0; h < n; ++h) Fij = Fij + ai[i][h] * em.F[j][h];
      em.N_closed[i][j] = v - Fij / Expr(m0);
    }
  return em;
}

Space build_constant_dmetric(const Mat& g0, const Mat& h0, const ExprMat& N) {
  const std::size_t n = g0.size();
  const std::size_t m = h0.size();
  auto check = [](const Mat& b, const char* name) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b[i].size() != b.size())
        throw std::invalid_argument(std::string(name) + " must be square");
      for (std::size_t j = 0; j < i; ++j)
        if (std::abs(b[i][j] - b[j][i]) > 1e-12 * (1.0 + std::abs(b[i][j])))
          throw std::invalid_argument(std::string(name) + " must be symmetric");
    }
    if (b.empty() || lu_check(b).degenerate)
      throw DegenerateBlock(std::string(name) + " block is degenerate");
  };
  check(g0, "g");
  check(h0, "h");
  if (N.size() != m) throw std::invalid_argument("N must have m rows");
  for (const auto& row : N)
    if (row.size() != n) throw std::invalid_argument("N must have n columns");
  Space s;
  s.kind = "constant_dmetric";
  s.n = static_cast<int>(n);
  s.m = static_cast<int>(m);
  s.mode = BundleMode::Vector;
  s.g = expr_zeros(n, n);
  s.h = expr_zeros(m, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s.g[i][j] = Expr(g0[i][j]);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) s.h[a][b] = Expr(h0[a][b]);
  s.N = N;
  return s;
}

Mat coordinate_metric(const Mat& g, const Mat& h, const Mat& N) {
  const std::size_t n = g.size();
  const std::size_t m = h.size();
  Mat out = zeros(n + m, n + m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double v = g[i][j];
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) v += N[a][i] * N[b][j] * h[a][b];
      out[i][j] = v;
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < m; ++a) {
      double v = 0;
      for (std::size_t e = 0; e < m; ++e) v += N[e][i] * h[a][e];
      out[i][n + a] = v;
      out[n + a][i] = v;
    }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) out[n + a][n + b] = h[a][b];
  return out;
}

Mat trivial_nconnection(const Mat& g0, const Mat& h0) {
  if (g0.size() != h0.size()) throw std::invalid_argument("trivial N-connection needs m = n");
  const Mat hi = inverse(h0);
  const std::size_t n = g0.size();
  Mat N = zeros(n, n);
  for (std::size_t e = 0; e < n; ++e)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t b = 0; b < n; ++b) N[e][j] += hi[e][b] * g0[j][b];
  return N;
}

}  // namespace nhsol
