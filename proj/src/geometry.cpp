#include "nhsol/geometry.hpp"

#include <sstream>

namespace nhsol {

const char* to_string(BundleMode m) { return m == BundleMode::Tangent ? "tangent" : "vector"; }

namespace {

std::string point_text(const BundlePoint& p) {
  std::ostringstream os;
  os.precision(17);
  os << "x=(";
  for (std::size_t i = 0; i < p.x.size(); ++i) os << (i ? ", " : "") << p.x[i];
  os << ") y=(";
  for (std::size_t i = 0; i < p.y.size(); ++i) os << (i ? ", " : "") << p.y[i];
  os << ")";
  return os.str();
}

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

}  // namespace

ExprMat symbolic_hessian(const LagrangianSpec& spec) {
  Differentiator d;
  const std::size_t m = sz(spec.m);
  ExprMat hes = expr_zeros(m, m);
  std::vector<Expr> dL(m);
  for (std::size_t a = 0; a < m; ++a) dL[a] = d(spec.body, Var::y(static_cast<int>(a)));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      hes[a][b] = Expr(0.5) * d(dL[a], Var::y(static_cast<int>(b)));
      hes[b][a] = hes[a][b];
    }
  return hes;
}

namespace {

ExprVec semispray_from(const LagrangianSpec& spec, const ExprMat& g_inv, Differentiator& d) {
  if (spec.n != spec.m)
    throw GeometryError("semispray needs a tangent-bundle Lagrangian (m = n)");
  const std::size_t n = sz(spec.n);
  ExprVec rhs(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Expr dLdy = d(spec.body, Var::y(static_cast<int>(j)));
    Expr s;
    for (std::size_t k = 0; k < n; ++k)
      s = s + d(dLdy, Var::x(static_cast<int>(k))) * Expr(Var::y(static_cast<int>(k)));
    rhs[j] = s - d(spec.body, Var::x(static_cast<int>(j)));
  }
  ExprVec G(n);
  for (std::size_t i = 0; i < n; ++i) {
    Expr s;
    for (std::size_t j = 0; j < n; ++j) s = s + g_inv[i][j] * rhs[j];
    G[i] = Expr(0.25) * s;
  }
  return G;
}

}  // namespace

ExprVec symbolic_semispray(const LagrangianSpec& spec) {
  Differentiator d;
  return semispray_from(spec, sym_inverse(symbolic_hessian(spec)), d);
}

Space lagrangian_space(const LagrangianSpec& spec) {
  if (spec.n != spec.m)
    throw GeometryError("Lagrangian geometry needs a tangent-bundle Lagrangian (m = n)");
  Space s;
  s.kind = "lagrangian_expr";
  s.n = spec.n;
  s.m = spec.m;
  s.mode = BundleMode::Tangent;
  s.g = symbolic_hessian(spec);
  s.h = s.g;
  Differentiator d;
  s.G = semispray_from(spec, sym_inverse(s.g), d);
  const std::size_t n = sz(spec.n);
  s.N = expr_zeros(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s.N[i][j] = d(s.G[i], Var::y(static_cast<int>(j)));
  s.lagrangian = spec;
  return s;
}

struct Geometry::Impl {
  Space s;
  Differentiator diff;
  std::size_t n = 0;
  std::size_t m = 0;

  std::optional<ExprMat> g_inv, h_inv;
  std::optional<ExprArr3> omega, dN, eg, L_h, L_v, C_h, C_v, T_hh, T_vvh, T_vv;
  std::optional<ExprArr4> R, P, S, R_v, P_v, S_h;

  bool tangent() const { return s.mode == BundleMode::Tangent; }

  Expr e_h(const Expr& f, std::size_t k) {
    Expr out = diff(f, Var::x(static_cast<int>(k)));
    for (std::size_t a = 0; a < m; ++a) {
      const Expr& Nak = s.N[a][k];
      if (Nak.is_const(0.0)) continue;
      const Expr df = diff(f, Var::y(static_cast<int>(a)));
      if (df.is_const(0.0)) continue;
      out = out - Nak * df;
    }
    return out;
  }
  Expr e_v(const Expr& f, std::size_t a) { return diff(f, Var::y(static_cast<int>(a))); }

  const ExprMat& get_g_inv() {
    if (!g_inv) g_inv = sym_inverse(s.g);
    return *g_inv;
  }
  const ExprMat& get_h_inv() {
    if (!h_inv) h_inv = same_blocks() ? get_g_inv() : sym_inverse(s.h);
    return *h_inv;
  }
  bool same_blocks() const {
    if (s.g.size() != s.h.size()) return false;
    for (std::size_t i = 0; i < s.g.size(); ++i)
      for (std::size_t j = 0; j < s.g.size(); ++j)
        if (s.g[i][j].id() != s.h[i][j].id()) return false;
    return true;
  }

  const ExprArr3& get_dN() {
    if (!dN) {
      dN = expr_zeros(m, n, m);
      for (std::size_t b = 0; b < m; ++b)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t a = 0; a < m; ++a) (*dN)[b][i][a] = e_v(s.N[b][i], a);
    }
    return *dN;
  }

  const ExprArr3& get_omega() {
    if (!omega) {
      omega = expr_zeros(m, n, n);
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = i + 1; j < n; ++j) {
            const Expr w = e_h(s.N[a][i], j) - e_h(s.N[a][j], i);
            (*omega)[a][i][j] = w;
            (*omega)[a][j][i] = -w;
          }
    }
    return *omega;
  }

  // eg[k][j][r] = e_k g_jr
  const ExprArr3& get_eg() {
    if (!eg) {
      eg = expr_zeros(n, n, n);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t r = j; r < n; ++r) {
            (*eg)[k][j][r] = e_h(s.g[j][r], k);
            (*eg)[k][r][j] = (*eg)[k][j][r];
          }
    }
    return *eg;
  }

  const ExprArr3& get_L_h() {
    if (!L_h) {
      const ExprMat& gi = get_g_inv();
      const ExprArr3& d = get_eg();
      L_h = expr_zeros(n, n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t k = j; k < n; ++k) {
            Expr sum;
            for (std::size_t r = 0; r < n; ++r) {
              if (gi[i][r].is_const(0.0)) continue;
              sum = sum + gi[i][r] * (d[k][j][r] + d[j][k][r] - d[r][j][k]);
            }
            (*L_h)[i][j][k] = Expr(0.5) * sum;
            (*L_h)[i][k][j] = (*L_h)[i][j][k];
          }
    }
    return *L_h;
  }

  const ExprArr3& get_C_v() {
    if (!C_v) {
      const ExprMat& hi = get_h_inv();
      // dh[c][b][e] = d h_be / dy^c
      ExprArr3 dh = expr_zeros(m, m, m);
      for (std::size_t c = 0; c < m; ++c)
        for (std::size_t b = 0; b < m; ++b)
          for (std::size_t e = b; e < m; ++e) {
            dh[c][b][e] = e_v(s.h[b][e], c);
            dh[c][e][b] = dh[c][b][e];
          }
      C_v = expr_zeros(m, m, m);
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
          for (std::size_t c = b; c < m; ++c) {
            Expr sum;
            for (std::size_t e = 0; e < m; ++e) {
              if (hi[a][e].is_const(0.0)) continue;
              sum = sum + hi[a][e] * (dh[c][b][e] + dh[b][c][e] - dh[e][b][c]);
            }
            (*C_v)[a][b][c] = Expr(0.5) * sum;
            (*C_v)[a][c][b] = (*C_v)[a][b][c];
          }
    }
    return *C_v;
  }

  const ExprArr3& get_L_v() {
    if (!L_v) {
      L_v = expr_zeros(m, m, n);
      if (!tangent()) {
        const ExprMat& hi = get_h_inv();
        const ExprArr3& dn = get_dN();  // dn[d][k][b] = dN^d_k/dy^b
        for (std::size_t k = 0; k < n; ++k) {
          // inner[b][c] = e_k h_bc - h_dc dN^d_k/dy^b - h_db dN^d_k/dy^c
          ExprMat inner = expr_zeros(m, m);
          for (std::size_t b = 0; b < m; ++b)
            for (std::size_t c = 0; c < m; ++c) {
              Expr v = e_h(s.h[b][c], k);
              for (std::size_t d = 0; d < m; ++d) {
                v = v - s.h[d][c] * dn[d][k][b];
                v = v - s.h[d][b] * dn[d][k][c];
              }
              inner[b][c] = v;
            }
          for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) {
              Expr sum;
              for (std::size_t c = 0; c < m; ++c) sum = sum + hi[a][c] * inner[b][c];
              (*L_v)[a][b][k] = dn[a][k][b] + Expr(0.5) * sum;
            }
        }
      }
    }
    return *L_v;
  }

  const ExprArr3& get_C_h() {
    if (!C_h) {
      C_h = expr_zeros(n, n, m);
      if (!tangent()) {
        const ExprMat& gi = get_g_inv();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            for (std::size_t c = 0; c < m; ++c) {
              Expr sum;
              for (std::size_t k = 0; k < n; ++k) sum = sum + gi[i][k] * e_v(s.g[j][k], c);
              (*C_h)[i][j][c] = Expr(0.5) * sum;
            }
      }
    }
    return *C_h;
  }

  // Effective blocks used by torsion/curvature: in tangent mode indices are
  // identified, L^a_bk := L^i_jk and C^i_ja := C^a_bc.
  const ExprArr3& Lv_eff() { return tangent() ? get_L_h() : get_L_v(); }
  const ExprArr3& Ch_eff() { return tangent() ? get_C_v() : get_C_h(); }

  const ExprArr3& get_T_hh() {
    if (!T_hh) {
      const ExprArr3& L = get_L_h();
      T_hh = expr_zeros(n, n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t k = j + 1; k < n; ++k) {
            const Expr t = L[i][j][k] - L[i][k][j];
            (*T_hh)[i][j][k] = t;
            (*T_hh)[i][k][j] = -t;
          }
    }
    return *T_hh;
  }

  // T^a_bi = dN^a_i/dy^b - L^a_bi
  const ExprArr3& get_T_vvh() {
    if (!T_vvh) {
      const ExprArr3& dn = get_dN();
      const ExprArr3& Lv = Lv_eff();
      T_vvh = expr_zeros(m, m, n);
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
          for (std::size_t i = 0; i < n; ++i) (*T_vvh)[a][b][i] = dn[a][i][b] - Lv[a][b][i];
    }
    return *T_vvh;
  }

  const ExprArr3& get_T_vv() {
    if (!T_vv) {
      const ExprArr3& C = get_C_v();
      T_vv = expr_zeros(m, m, m);
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
          for (std::size_t c = b + 1; c < m; ++c) {
            const Expr t = C[a][b][c] - C[a][c][b];
            (*T_vv)[a][b][c] = t;
            (*T_vv)[a][c][b] = -t;
          }
    }
    return *T_vv;
  }

  const ExprArr4& get_R() {
    if (!R) {
      const ExprArr3& L = get_L_h();
      const ExprArr3& C = Ch_eff();
      const ExprArr3& W = get_omega();
      R = expr_zeros(n, n, n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t h = 0; h < n; ++h)
          for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) {
              Expr v = e_h(L[i][h][j], k) - e_h(L[i][h][k], j);
              for (std::size_t mm = 0; mm < n; ++mm)
                v = v + L[mm][h][j] * L[i][mm][k] - L[mm][h][k] * L[i][mm][j];
              for (std::size_t a = 0; a < m; ++a) v = v - C[i][h][a] * W[a][k][j];
              (*R)[i][h][j][k] = v;
              (*R)[i][h][k][j] = -v;
            }
    }
    return *R;
  }

  // P^i_jka = d_a L^i_jk - D_k C^i_ja + C^i_jb T^b_ka
  const ExprArr4& get_P() {
    if (!P) {
      const ExprArr3& L = get_L_h();
      const ExprArr3& Lv = Lv_eff();
      const ExprArr3& C = Ch_eff();
      const ExprArr3& Tv = get_T_vvh();
      P = expr_zeros(n, n, n, m);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t k = 0; k < n; ++k)
            for (std::size_t a = 0; a < m; ++a) {
              Expr DC = e_h(C[i][j][a], k);
              for (std::size_t mm = 0; mm < n; ++mm)
                DC = DC + L[i][mm][k] * C[mm][j][a] - L[mm][j][k] * C[i][mm][a];
              for (std::size_t b = 0; b < m; ++b) DC = DC - Lv[b][a][k] * C[i][j][b];
              Expr v = e_v(L[i][j][k], a) - DC;
              // T^b_ka = -T^b_ak
              for (std::size_t b = 0; b < m; ++b) v = v - C[i][j][b] * Tv[b][a][k];
              (*P)[i][j][k][a] = v;
            }
    }
    return *P;
  }

  const ExprArr4& get_S() {
    if (!S) {
      const ExprArr3& C = get_C_v();
      S = expr_zeros(m, m, m, m);
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
          for (std::size_t c = 0; c < m; ++c)
            for (std::size_t d = c + 1; d < m; ++d) {
              Expr v = e_v(C[a][b][c], d) - e_v(C[a][b][d], c);
              for (std::size_t e = 0; e < m; ++e)
                v = v + C[e][b][c] * C[a][e][d] - C[e][b][d] * C[a][e][c];
              (*S)[a][b][c][d] = v;
              (*S)[a][b][d][c] = -v;
            }
    }
    return *S;
  }

  const ExprArr4& get_R_v() {
    if (!R_v) {
      R_v = expr_zeros(m, m, n, n);
      if (!tangent()) {
        const ExprArr3& L = get_L_v();
        const ExprArr3& C = get_C_v();
        const ExprArr3& W = get_omega();
        for (std::size_t a = 0; a < m; ++a)
          for (std::size_t b = 0; b < m; ++b)
            for (std::size_t j = 0; j < n; ++j)
              for (std::size_t k = j + 1; k < n; ++k) {
                Expr v = e_h(L[a][b][j], k) - e_h(L[a][b][k], j);
                for (std::size_t c = 0; c < m; ++c)
                  v = v + L[c][b][j] * L[a][c][k] - L[c][b][k] * L[a][c][j] - C[a][b][c] * W[c][k][j];
                (*R_v)[a][b][j][k] = v;
                (*R_v)[a][b][k][j] = -v;
              }
      }
    }
    return *R_v;
  }

  // P^c_bka = d_a L^c_bk - D_k C^c_ba + C^c_bd T^d_ka
  const ExprArr4& get_P_v() {
    if (!P_v) {
      P_v = expr_zeros(m, m, n, m);
      if (!tangent()) {
        const ExprArr3& L = get_L_v();
        const ExprArr3& C = get_C_v();
        const ExprArr3& Tv = get_T_vvh();
        for (std::size_t c = 0; c < m; ++c)
          for (std::size_t b = 0; b < m; ++b)
            for (std::size_t k = 0; k < n; ++k)
              for (std::size_t a = 0; a < m; ++a) {
                Expr DC = e_h(C[c][b][a], k);
                for (std::size_t d = 0; d < m; ++d)
                  DC = DC + L[c][d][k] * C[d][b][a] - L[d][b][k] * C[c][d][a] - L[d][a][k] * C[c][b][d];
                Expr v = e_v(L[c][b][k], a) - DC;
                for (std::size_t d = 0; d < m; ++d) v = v - C[c][b][d] * Tv[d][a][k];
                (*P_v)[c][b][k][a] = v;
              }
      }
    }
    return *P_v;
  }

  const ExprArr4& get_S_h() {
    if (!S_h) {
      S_h = expr_zeros(n, n, m, m);
      if (!tangent()) {
        const ExprArr3& C = get_C_h();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            for (std::size_t b = 0; b < m; ++b)
              for (std::size_t c = b + 1; c < m; ++c) {
                Expr v = e_v(C[i][j][b], c) - e_v(C[i][j][c], b);
                for (std::size_t h = 0; h < n; ++h)
                  v = v + C[h][j][b] * C[i][h][c] - C[h][j][c] * C[i][h][b];
                (*S_h)[i][j][b][c] = v;
                (*S_h)[i][j][c][b] = -v;
              }
      }
    }
    return *S_h;
  }

  // Evaluates the blocks and rejects singular ones.
  DMetric checked_dmetric(Evaluator& ev, const BundlePoint& p) {
    DMetric dm;
    dm.g = evaluate(s.g, ev);
    dm.h = evaluate(s.h, ev);
    const bool hessian = s.lagrangian.has_value();
    auto check = [&](const Mat& blk, const char* name) {
      const LuCheck lu = lu_check(blk);
      if (!lu.degenerate) return;
      const std::string msg = std::string(name) + " block is degenerate at " + point_text(p) +
                              " (min pivot " + std::to_string(lu.min_pivot) + ")";
      if (hessian) throw DegenerateHessian("vertical Hessian: " + msg);
      throw DegenerateBlock(msg);
    };
    check(dm.g, "g");
    check(dm.h, "h");
    if (!s.aux_metric.empty()) {
      const Mat aux = evaluate(s.aux_metric, ev);
      if (lu_check(aux).degenerate)
        throw DegenerateBlock("base metric is degenerate at " + point_text(p));
    }
    dm.N = evaluate(s.N, ev);
    return dm;
  }

  void check_point(const BundlePoint& p) const {
    if (p.x.size() != n || p.y.size() != m)
      throw GeometryError("bundle point has wrong dimensions: expected n=" + std::to_string(n) +
                          ", m=" + std::to_string(m));
    for (double v : p.x)
      if (!std::isfinite(v)) throw GeometryError("bundle point is not finite");
    for (double v : p.y)
      if (!std::isfinite(v)) throw GeometryError("bundle point is not finite");
  }
};

Geometry::Geometry(Space space) : impl_(std::make_unique<Impl>()) {
  impl_->s = std::move(space);
  impl_->n = sz(impl_->s.n);
  impl_->m = sz(impl_->s.m);
  if (impl_->s.mode == BundleMode::Tangent && impl_->n != impl_->m)
    throw GeometryError("tangent-bundle mode needs m = n");
  if (impl_->s.g.size() != impl_->n || impl_->s.h.size() != impl_->m ||
      impl_->s.N.size() != impl_->m)
    throw GeometryError("space blocks do not match its dimensions");
  for (const auto& row : impl_->s.N)
    if (row.size() != impl_->n) throw GeometryError("N must be m x n");
}

Geometry::~Geometry() = default;
Geometry::Geometry(Geometry&&) noexcept = default;
Geometry& Geometry::operator=(Geometry&&) noexcept = default;

const Space& Geometry::space() const { return impl_->s; }
Expr Geometry::e_h(const Expr& f, int k) { return impl_->e_h(f, sz(k)); }
Expr Geometry::e_v(const Expr& f, int a) { return impl_->e_v(f, sz(a)); }
const ExprMat& Geometry::g_inv() { return impl_->get_g_inv(); }
const ExprMat& Geometry::h_inv() { return impl_->get_h_inv(); }
const ExprArr3& Geometry::omega() { return impl_->get_omega(); }
const ExprArr3& Geometry::dN_dy() { return impl_->get_dN(); }
const ExprArr3& Geometry::L_h() { return impl_->get_L_h(); }
const ExprArr3& Geometry::L_v() { return impl_->get_L_v(); }
const ExprArr3& Geometry::C_h() { return impl_->get_C_h(); }
const ExprArr3& Geometry::C_v() { return impl_->get_C_v(); }
const ExprArr3& Geometry::T_hh() { return impl_->get_T_hh(); }
const ExprArr3& Geometry::T_vvh() { return impl_->get_T_vvh(); }
const ExprArr3& Geometry::T_vv() { return impl_->get_T_vv(); }
const ExprArr4& Geometry::R() { return impl_->get_R(); }
const ExprArr4& Geometry::P() { return impl_->get_P(); }
const ExprArr4& Geometry::S() { return impl_->get_S(); }
const ExprArr4& Geometry::R_v() { return impl_->get_R_v(); }
const ExprArr4& Geometry::P_v() { return impl_->get_P_v(); }
const ExprArr4& Geometry::S_h() { return impl_->get_S_h(); }

DMetric Geometry::dmetric(const BundlePoint& p) {
  impl_->check_point(p);
  Evaluator ev(p);
  return impl_->checked_dmetric(ev, p);
}

Arr3 Geometry::omega(const BundlePoint& p) {
  impl_->check_point(p);
  Evaluator ev(p);
  impl_->checked_dmetric(ev, p);
  return evaluate(omega(), ev);
}

namespace {

Anholonomy eval_anholonomy(Geometry& geo, Evaluator& ev) {
  Anholonomy w;
  w.W_vy = evaluate(geo.dN_dy(), ev);
  const Arr3 om = evaluate(geo.omega(), ev);
  // W^a_ji = Omega^a_ij
  w.W_hh = om;
  for (std::size_t a = 0; a < om.size(); ++a)
    for (std::size_t i = 0; i < om[a].size(); ++i)
      for (std::size_t j = 0; j < om[a].size(); ++j) w.W_hh[a][j][i] = om[a][i][j];
  return w;
}

DConnection eval_connection(Geometry& geo, Evaluator& ev) {
  DConnection c;
  c.mode = geo.space().mode;
  c.L_h = evaluate(geo.L_h(), ev);
  c.L_v = evaluate(geo.L_v(), ev);
  c.C_h = evaluate(geo.C_h(), ev);
  c.C_v = evaluate(geo.C_v(), ev);
  return c;
}

DTorsion eval_torsion(Geometry& geo, Evaluator& ev) {
  DTorsion t;
  t.T_hh = evaluate(geo.T_hh(), ev);
  t.T_hv = evaluate(geo.space().mode == BundleMode::Tangent ? geo.C_v() : geo.C_h(), ev);
  t.T_vhh = evaluate(geo.omega(), ev);
  t.T_vvh = evaluate(geo.T_vvh(), ev);
  t.T_vv = evaluate(geo.T_vv(), ev);
  return t;
}

DCurvature eval_curvature(Geometry& geo, Evaluator& ev) {
  DCurvature c;
  c.mode = geo.space().mode;
  c.R = evaluate(geo.R(), ev);
  c.P = evaluate(geo.P(), ev);
  c.S = evaluate(geo.S(), ev);
  if (c.mode == BundleMode::Vector) {
    c.R_v = evaluate(geo.R_v(), ev);
    c.P_v = evaluate(geo.P_v(), ev);
    c.S_h = evaluate(geo.S_h(), ev);
  }
  return c;
}

}  // namespace

Anholonomy Geometry::anholonomy(const BundlePoint& p) {
  impl_->check_point(p);
  Evaluator ev(p);
  impl_->checked_dmetric(ev, p);
  return eval_anholonomy(*this, ev);
}

DConnection Geometry::connection(const BundlePoint& p) {
  impl_->check_point(p);
  Evaluator ev(p);
  impl_->checked_dmetric(ev, p);
  return eval_connection(*this, ev);
}

DTorsion Geometry::torsion(const BundlePoint& p) {
  impl_->check_point(p);
  Evaluator ev(p);
  impl_->checked_dmetric(ev, p);
  return eval_torsion(*this, ev);
}

DCurvature Geometry::curvature(const BundlePoint& p) {
  impl_->check_point(p);
  Evaluator ev(p);
  impl_->checked_dmetric(ev, p);
  return eval_curvature(*this, ev);
}

GeometryReport Geometry::report(const BundlePoint& p) {
  impl_->check_point(p);
  Evaluator ev(p);
  GeometryReport r;
  r.kind = impl_->s.kind;
  r.mode = impl_->s.mode;
  r.n = impl_->s.n;
  r.m = impl_->s.m;
  r.point = p;
  r.dmetric = impl_->checked_dmetric(ev, p);
  r.g_inv = inverse(r.dmetric.g);
  r.h_inv = inverse(r.dmetric.h);
  r.G = evaluate(impl_->s.G, ev);
  r.N = r.dmetric.N;
  r.Omega = evaluate(omega(), ev);
  r.W = eval_anholonomy(*this, ev);
  r.connection = eval_connection(*this, ev);
  r.torsion = eval_torsion(*this, ev);
  r.curvature = eval_curvature(*this, ev);
  r.ricci = ricci_and_scalars(r.curvature, r.dmetric);
  return r;
}

// ---- point-wise entry points ------------------------------------------------

VerticalMetric hessian_metric(const LagrangianSpec& spec, const BundlePoint& p) {
  Evaluator ev(p);
  VerticalMetric vm;
  vm.g = evaluate(symbolic_hessian(spec), ev);
  const LuCheck lu = lu_check(vm.g);
  if (lu.degenerate)
    throw DegenerateHessian("vertical Hessian is degenerate at " + point_text(p));
  vm.g_inv = inverse(vm.g);
  return vm;
}

Vec semispray(const LagrangianSpec& spec, const BundlePoint& p) {
  hessian_metric(spec, p);
  Evaluator ev(p);
  return evaluate(symbolic_semispray(spec), ev);
}

Mat nconnection(const LagrangianSpec& spec, const BundlePoint& p) {
  hessian_metric(spec, p);
  Geometry geo(lagrangian_space(spec));
  Evaluator ev(p);
  return evaluate(geo.space().N, ev);
}

Arr3 nconnection_curvature(const LagrangianSpec& spec, const BundlePoint& p) {
  Geometry geo(lagrangian_space(spec));
  return geo.omega(p);
}

Anholonomy anholonomy(const LagrangianSpec& spec, const BundlePoint& p) {
  Geometry geo(lagrangian_space(spec));
  return geo.anholonomy(p);
}

DMetric sasaki_dmetric(const LagrangianSpec& spec, const BundlePoint& p) {
  Geometry geo(lagrangian_space(spec));
  return geo.dmetric(p);
}

DConnection canonical_dconnection(const Space& space, const BundlePoint& p) {
  Geometry geo(space);
  return geo.connection(p);
}

DTorsion dtorsion(const Space& space, const BundlePoint& p) {
  Geometry geo(space);
  return geo.torsion(p);
}

DCurvature dcurvature(const Space& space, const BundlePoint& p) {
  Geometry geo(space);
  return geo.curvature(p);
}

RicciScalars ricci_and_scalars(const DCurvature& curv, const DMetric& dm) {
  const std::size_t n = dm.g.size();
  const std::size_t m = dm.h.size();
  auto check = [](const Mat& blk, const char* name) {
    if (lu_check(blk).degenerate)
      throw DegenerateBlock(std::string("singular ") + name + " block in scalar curvature");
  };
  check(dm.g, "g");
  check(dm.h, "h");
  if (curv.R.size() != n || curv.S.size() != m || curv.P.size() != n)
    throw GeometryError("curvature and d-metric dimensions disagree");
  RicciScalars r;
  r.R_ij = zeros(n, n);
  r.R_ia = zeros(n, m);
  r.R_ai = zeros(m, n);
  r.S_ab = zeros(m, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) r.R_ij[i][j] += curv.R[k][i][j][k];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t k = 0; k < n; ++k) r.R_ia[i][a] -= curv.P[k][i][k][a];
  // R_ai = P^b_aib; in tangent mode P carries both index types.
  const bool vec = curv.mode == BundleMode::Vector;
  const Arr4& Pv = vec ? curv.P_v : curv.P;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t b = 0; b < m; ++b) r.R_ai[a][i] += Pv[b][a][i][b];
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t c = 0; c < m; ++c) r.S_ab[a][b] += curv.S[c][a][b][c];
  const Mat gi = inverse(dm.g);
  const Mat hi = inverse(dm.h);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) r.R_fwd += gi[i][j] * r.R_ij[i][j];
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) r.S_bwd += hi[a][b] * r.S_ab[a][b];
  r.total = r.R_fwd + r.S_bwd;
  return r;
}

}  // namespace nhsol
