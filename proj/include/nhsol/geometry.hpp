#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "nhsol/expr.hpp"
#include "nhsol/parser.hpp"
#include "nhsol/tensor.hpp"

namespace nhsol {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when the vertical Hessian of a Lagrangian is singular at a point.
class DegenerateHessian : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

// Raised when a prescribed d-metric block is singular.
class DegenerateBlock : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

// Tangent: E = TM, indices i <-> a identified (three curvature classes).
// Vector: general vector bundle, six curvature blocks.
enum class BundleMode { Tangent, Vector };

const char* to_string(BundleMode m);

// A d-metric [g, h] with N-connection, every coefficient a symbolic field in
// (x, y). This is what all geometry is computed from.
struct Space {
  std::string kind;  // lagrangian_expr | flat_lift | em | constant_dmetric
  int n = 0;
  int m = 0;
  BundleMode mode = BundleMode::Tangent;
  ExprMat g;  // n x n
  ExprMat h;  // m x m
  ExprMat N;  // m x n, N[a][i] = N^a_i
  ExprVec G;  // semispray G^i when the space has one
  // Extra metric that must stay nondegenerate (flat-lift base metric, em a_ij).
  ExprMat aux_metric;
  std::optional<LagrangianSpec> lagrangian;
};

// Sasaki lift of a regular Lagrangian: g = h = 1/2 d2L/dy dy, N^i_j = dG^i/dy^j.
// Requires m == n.
Space lagrangian_space(const LagrangianSpec& spec);

// Symbolic Hessian metric 1/2 d2L/dy^a dy^b.
ExprMat symbolic_hessian(const LagrangianSpec& spec);

// Symbolic semispray G^i = 1/4 g^ij (d2L/dy^j dx^k y^k - dL/dx^j).
ExprVec symbolic_semispray(const LagrangianSpec& spec);

// ---- numeric results -------------------------------------------------------

struct VerticalMetric {
  Mat g;
  Mat g_inv;
};

struct DMetric {
  Mat g;  // n x n
  Mat h;  // m x m
  Mat N;  // m x n
};

struct Anholonomy {
  Arr3 W_vy;  // W^b_ia = dN^b_i/dy^a, stored [b][i][a]
  Arr3 W_hh;  // W^a_ji = Omega^a_ij, stored [a][j][i]
};

// Last index is the differentiation direction.
struct DConnection {
  BundleMode mode = BundleMode::Tangent;
  Arr3 L_h;  // L^i_jk  n x n x n
  Arr3 L_v;  // L^a_bk  m x m x n  (zero in tangent mode)
  Arr3 C_h;  // C^i_jc  n x n x m  (zero in tangent mode)
  Arr3 C_v;  // C^a_bc  m x m x m
};

struct DTorsion {
  Arr3 T_hh;   // T^i_jk
  Arr3 T_hv;   // T^i_ja
  Arr3 T_vhh;  // T^a_ji  (= Omega^a_ji)
  Arr3 T_vvh;  // T^a_bi
  Arr3 T_vv;   // T^a_bc
};

struct DCurvature {
  BundleMode mode = BundleMode::Tangent;
  Arr4 R;  // R^i_hjk
  Arr4 P;  // P^i_jka
  Arr4 S;  // S^a_bcd
  // vector-bundle mode only
  Arr4 R_v;  // R^a_bjk
  Arr4 P_v;  // P^c_bka
  Arr4 S_h;  // S^i_jbc
};

struct RicciScalars {
  Mat R_ij;
  Mat R_ia;
  Mat R_ai;
  Mat S_ab;
  double R_fwd = 0.0;  // g^ij R_ij
  double S_bwd = 0.0;  // h^ab S_ab
  double total = 0.0;
};

struct GeometryReport {
  std::string kind;
  BundleMode mode = BundleMode::Tangent;
  int n = 0;
  int m = 0;
  BundlePoint point;
  DMetric dmetric;
  Mat g_inv;
  Mat h_inv;
  Vec G;  // empty when the space has no semispray
  Mat N;
  Arr3 Omega;  // Omega^a_ij
  Anholonomy W;
  DConnection connection;
  DTorsion torsion;
  DCurvature curvature;
  RicciScalars ricci;
};

// Symbolic pipeline over a Space. Derived fields are built lazily and cached;
// not thread-safe (use one instance per thread).
class Geometry {
 public:
  explicit Geometry(Space space);
  ~Geometry();
  Geometry(Geometry&&) noexcept;
  Geometry& operator=(Geometry&&) noexcept;

  const Space& space() const;

  // N-elongated derivative e_k = d/dx^k - N^a_k d/dy^a and vertical d/dy^a.
  Expr e_h(const Expr& f, int k);
  Expr e_v(const Expr& f, int a);

  const ExprMat& g_inv();
  const ExprMat& h_inv();
  const ExprArr3& omega();   // [a][i][j]
  const ExprArr3& dN_dy();   // [b][i][a] = dN^b_i/dy^a
  const ExprArr3& L_h();
  const ExprArr3& L_v();
  const ExprArr3& C_h();
  const ExprArr3& C_v();
  const ExprArr3& T_hh();
  const ExprArr3& T_vvh();
  const ExprArr3& T_vv();
  const ExprArr4& R();
  const ExprArr4& P();
  const ExprArr4& S();
  const ExprArr4& R_v();
  const ExprArr4& P_v();
  const ExprArr4& S_h();

  // Throws DegenerateHessian / DegenerateBlock if a block is singular at p.
  DMetric dmetric(const BundlePoint& p);
  Arr3 omega(const BundlePoint& p);
  Anholonomy anholonomy(const BundlePoint& p);
  DConnection connection(const BundlePoint& p);
  DTorsion torsion(const BundlePoint& p);
  DCurvature curvature(const BundlePoint& p);

  GeometryReport report(const BundlePoint& p);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Point-wise entry points.
VerticalMetric hessian_metric(const LagrangianSpec& spec, const BundlePoint& p);
Vec semispray(const LagrangianSpec& spec, const BundlePoint& p);
Mat nconnection(const LagrangianSpec& spec, const BundlePoint& p);
Arr3 nconnection_curvature(const LagrangianSpec& spec, const BundlePoint& p);
Anholonomy anholonomy(const LagrangianSpec& spec, const BundlePoint& p);
DMetric sasaki_dmetric(const LagrangianSpec& spec, const BundlePoint& p);
DConnection canonical_dconnection(const Space& space, const BundlePoint& p);
DTorsion dtorsion(const Space& space, const BundlePoint& p);
DCurvature dcurvature(const Space& space, const BundlePoint& p);
RicciScalars ricci_and_scalars(const DCurvature& curv, const DMetric& dm);

}  // namespace nhsol
