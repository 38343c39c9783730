#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "nhsol/frames.hpp"
#include "oracles.hpp"

using namespace nhsol;

namespace {

Expr E(std::string_view s) { return parse_expr(s); }

Mat gram_residual(const Mat& A, const Mat& g, const Vec& sig) {
  Mat r = matmul(transpose(A), matmul(g, A));
  for (std::size_t i = 0; i < r.size(); ++i) r[i][i] -= sig[i];
  return r;
}

std::vector<BundlePoint> samples(int count, int n, int m, std::uint64_t seed, double lo = -1,
                                 double hi = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<BundlePoint> out;
  for (int k = 0; k < count; ++k) {
    BundlePoint p;
    for (int i = 0; i < n; ++i) p.x.push_back(u(rng));
    for (int a = 0; a < m; ++a) p.y.push_back(u(rng));
    out.push_back(p);
  }
  return out;
}

const ExprMat kDelta2 = {{Expr(1.0), Expr(0.0)}, {Expr(0.0), Expr(1.0)}};

}  // namespace

TEST(Frames, OrthonormalizeExamples) {
  Vec sig;
  EXPECT_LT(max_abs_diff(orthonormal_factor(identity(3), &sig), identity(3)), 1e-15);
  EXPECT_EQ(sig, Vec(3, 1.0));
  const Mat A = orthonormal_factor({{4.0}}, &sig);
  EXPECT_DOUBLE_EQ(A[0][0], 0.5);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 20; ++k) {
    const int n = 2 + k % 4;
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = nd(rng);
    const Eigen::MatrixXd S = B * B.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    Mat g = zeros(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g[i][j] = S(i, j);
    const Mat F = orthonormal_factor(g, &sig);
    EXPECT_LT(max_abs(gram_residual(F, g, sig)), 1e-10);
    EXPECT_TRUE(std::all_of(sig.begin(), sig.end(), [](double s) { return s == 1.0; }));
  }
}

TEST(Frames, IndefiniteBlockKeepsSignature) {
  const Mat g = {{1, 2, 0}, {2, 1, 0}, {0, 0, -3}};  // eigenvalues 3, -1, -3
  Vec sig;
  const Mat A = orthonormal_factor(g, &sig);
  EXPECT_LT(max_abs(gram_residual(A, g, sig)), 1e-10);
  EXPECT_EQ(std::count(sig.begin(), sig.end(), -1.0), 2);
  EXPECT_EQ(std::count(sig.begin(), sig.end(), 1.0), 1);
  EXPECT_THROW(orthonormal_factor({{1, 1}, {1, 1}}), DegenerateBlock);

  DMetric dm{identity(2), {{2, 0}, {0, -5}}, zeros(2, 2)};
  const OrthoFrame f = orthonormalize(dm);
  EXPECT_LT(max_abs(gram_residual(f.A_h, dm.g, f.signature_h)), 1e-10);
  EXPECT_LT(max_abs(gram_residual(f.A_v, dm.h, f.signature_v)), 1e-10);
}

TEST(Frames, FlatLiftIsConstant) {
  const ExprMat base = {{Expr(1.0), Expr(0.0)}, {Expr(0.0), E("exp(2*x1)")}};
  const auto rep = check_constant_curvature(build_flat_lift(base), samples(16, 2, 2, 7));
  EXPECT_TRUE(rep.constant);
  for (const auto& c : rep.classes) {
    EXPECT_LT(c.max_deviation, 1e-8) << c.name;
    EXPECT_LT(c.max_abs, 1e-8) << c.name;
  }
  EXPECT_NEAR(rep.R_fwd, 0.0, 1e-10);
}

TEST(Frames, GenericMetricIsNotConstant) {
  const ExprMat g = {{Expr(1.0), Expr(0.0)}, {Expr(0.0), E("exp(x1*x2)")}};
  LagrangianSpec L;
  L.n = L.m = 2;
  L.body = g[0][0] * Expr(Var::y(0)) * Expr(Var::y(0)) + g[1][1] * Expr(Var::y(1)) * Expr(Var::y(1));
  const std::vector<BundlePoint> two = {{{0.0, 0.0}, {1, 1}}, {{1.5, 1.0}, {0.5, -1}}};
  const auto rep = check_constant_curvature(lagrangian_space(L), two);
  EXPECT_FALSE(rep.constant);
  // independent oracle: the base scalar curvature differs between the two samples
  auto scal = [&](const std::vector<double>& x) {
    const auto J = oracle::metric_jet(g, x);
    const Arr4 R = oracle::riemann(J);
    double s = 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) s += J.gi(i, j) * R[k][i][k][j];
    return s;
  };
  EXPECT_GT(std::abs(scal(two[0].x) - scal(two[1].x)), 1e-3);
  EXPECT_GT(rep.R_fwd_spread, 1e-3);
}

TEST(Frames, SphereLiftIsConstantWithScalarTwo) {
  const ExprMat g = {{Expr(1.0), Expr(0.0)}, {Expr(0.0), E("sin(x1)^2")}};
  LagrangianSpec L;
  L.n = L.m = 2;
  L.body = Expr(Var::y(0)) * Expr(Var::y(0)) + g[1][1] * Expr(Var::y(1)) * Expr(Var::y(1));
  const auto rep = check_constant_curvature(lagrangian_space(L), samples(8, 2, 2, 3, 0.4, 2.6));
  EXPECT_TRUE(rep.constant);
  EXPECT_NEAR(rep.R_fwd, 2.0, 1e-10);
  EXPECT_NEAR(rep.S_bwd, 0.0, 1e-12);
}

TEST(Frames, InsufficientSamples) {
  const Space s = build_flat_lift(kDelta2);
  EXPECT_THROW(check_constant_curvature(s, samples(1, 2, 2, 1)), std::invalid_argument);
  EXPECT_THROW(check_constant_curvature(s, {}), std::invalid_argument);
}

TEST(Frames, VerdictIsPermutationInvariant) {
  LagrangianSpec L = parse("y1^2 + exp(x1*x2)*y2^2", 2, 2);
  const Space s = lagrangian_space(L);
  auto pts = samples(6, 2, 2, 9);
  const auto a = check_constant_curvature(s, pts);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 3; ++k) {
    std::shuffle(pts.begin(), pts.end(), rng);
    const auto b = check_constant_curvature(s, pts);
    EXPECT_EQ(a.constant, b.constant);
    for (std::size_t c = 0; c < a.classes.size(); ++c)
      EXPECT_NEAR(a.classes[c].max_deviation, b.classes[c].max_deviation, 1e-12);
  }
  const Space flat = build_flat_lift(kDelta2);
  auto fp = samples(5, 2, 2, 4);
  const bool v1 = check_constant_curvature(flat, fp).constant;
  std::reverse(fp.begin(), fp.end());
  EXPECT_EQ(v1, check_constant_curvature(flat, fp).constant);
}

TEST(Frames, ElectromagneticExamples) {
  // a = delta, constant A -> N = 0 both ways
  {
    const EmSpace em = build_em_space(kDelta2, {Expr(0.3), Expr(-1.0)}, 1, 1);
    Geometry geo(em.space);
    const BundlePoint p{{0.2, 0.7}, {1, -2}};
    Evaluator ev(p);
    EXPECT_LT(max_abs(geo.dmetric(p).N), 1e-15);
    EXPECT_LT(max_abs(evaluate(em.N_closed, ev)), 1e-15);
  }
  // constant magnetic field: N = -F^i_j with F_12 = e0/4 (d_2 A_1 - d_1 A_2) = -e0/2
  {
    const double m0 = 2, e0 = 3;
    const EmSpace em = build_em_space(kDelta2, {E("-x2"), E("x1")}, m0, e0);
    Geometry geo(em.space);
    for (const auto& p : samples(5, 2, 2, 5)) {
      const Mat N = geo.dmetric(p).N;
      const Mat want = {{0, -e0 / (2 * m0)}, {e0 / (2 * m0), 0}};
      EXPECT_LT(max_abs_diff(N, want), 1e-10);
      Evaluator ev(p);
      EXPECT_LT(max_abs_diff(evaluate(em.N_closed, ev), N), 1e-10);
    }
  }
  // 2-sphere, A = 0 -> N = Gamma^i_jk y^k
  {
    const ExprMat a = {{Expr(1.0), Expr(0.0)}, {Expr(0.0), E("sin(x1)^2")}};
    const EmSpace em = build_em_space(a, {Expr(0.0), Expr(0.0)}, 1, 1);
    Geometry geo(em.space);
    for (const auto& p : samples(5, 2, 2, 6, 0.4, 2.5)) {
      const Arr3 gam = oracle::christoffel(oracle::metric_jet(a, p.x));
      const Mat N = geo.dmetric(p).N;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          EXPECT_NEAR(N[i][j], gam[i][j][0] * p.y[0] + gam[i][j][1] * p.y[1], 1e-12);
    }
  }
  EXPECT_THROW(build_em_space(kDelta2, {Expr(0.0), Expr(0.0)}, 0.0, 1), std::invalid_argument);
}

TEST(Frames, ConstantDMetricAnholonomy) {
  const Mat g0 = {{2, 0.5}, {0.5, 1}};
  const Mat h0 = {{1, 0}, {0, 3}};
  {
    Geometry geo(build_constant_dmetric(g0, h0, {{Expr(0.0), Expr(0.0)}, {Expr(0.0), Expr(0.0)}}));
    const auto an = geo.anholonomy({{0.1, 0.2}, {0.3, 0.4}});
    EXPECT_EQ(max_abs(an.W_vy), 0.0);
    EXPECT_EQ(max_abs(an.W_hh), 0.0);
  }
  // y-linear N: N^a_i = M[a][i][b] y^b -> W^b_ia = M[b][i][a], independent of the point
  const double M[2][2][2] = {{{0.5, -1}, {2, 0}}, {{0, 1.5}, {-0.25, 3}}};
  ExprMat N = expr_zeros(2, 2);
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < 2; ++i)
      N[a][i] = Expr(M[a][i][0]) * Expr(Var::y(0)) + Expr(M[a][i][1]) * Expr(Var::y(1));
  Geometry geo(build_constant_dmetric(g0, h0, N));
  for (const auto& p : samples(5, 2, 2, 8)) {
    const auto an = geo.anholonomy(p);
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 2; ++i)
        for (int a = 0; a < 2; ++a) EXPECT_DOUBLE_EQ(an.W_vy[b][i][a], M[b][i][a]);
  }
  EXPECT_THROW(build_constant_dmetric({{1, 1}, {1, 1}}, h0, N).g, DegenerateBlock);
}

TEST(Frames, CoordinateMetricBlockAssembly) {
  const Mat g0 = {{2, 0.5}, {0.5, 1}};
  const Mat h0 = {{1, 0.2}, {0.2, 3}};
  const Mat N0 = trivial_nconnection(g0, h0);
  // N^e_j = h^eb g_jb
  const Mat hi = inverse(h0);
  for (int e = 0; e < 2; ++e)
    for (int j = 0; j < 2; ++j) {
      double want = 0;
      for (int b = 0; b < 2; ++b) want += hi[e][b] * g0[j][b];
      EXPECT_NEAR(N0[e][j], want, 1e-14);
    }
  const Mat G = coordinate_metric(g0, h0, N0);
  ASSERT_EQ(G.size(), 4u);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double top = g0[i][j];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) top += N0[a][i] * N0[b][j] * h0[a][b];
      EXPECT_NEAR(G[i][j], top, 1e-14);
      double cross = 0;
      for (int a = 0; a < 2; ++a) cross += N0[a][i] * h0[a][j];
      EXPECT_NEAR(G[i][2 + j], cross, 1e-14);
      EXPECT_NEAR(G[2 + j][i], cross, 1e-14);
      EXPECT_EQ(G[2 + i][2 + j], h0[i][j]);
    }
}
