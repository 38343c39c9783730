#include "nhsol/sg_flow.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

namespace nhsol {

Eigen::VectorXd default_anchor(int p, double theta0) {
  if (p < 1) throw std::invalid_argument("frame needs p >= 1");
  Eigen::VectorXd a = Eigen::VectorXd::Zero(p + 1);
  a(0) = std::cos(theta0);
  a(1) = std::sin(theta0);
  return a;
}

namespace {

// Generator of u_l = A u for u = (e_par, e_perp).
Eigen::MatrixXd generator(const Field& v, int j) {
  const Eigen::Index p = v.cols();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p + 1, p + 1);
  for (Eigen::Index c = 0; c < p; ++c) {
    A(0, c + 1) = -v(j, c);
    A(c + 1, 0) = v(j, c);
  }
  return A;
}

}  // namespace

FrameFlowState reconstruct_frame(const Spectral& sp, const Field& v, const Eigen::VectorXd& anchor) {
  const int n = sp.grid().n_pts;
  const Eigen::Index p = v.cols();
  if (v.rows() != n) throw GridMismatch("field length does not match the grid");
  if (anchor.size() != p + 1) throw GridMismatch("frame anchor size must be p + 1");
  const double unit = std::abs(anchor.squaredNorm() - 1.0);
  if (!(unit <= 1e-6))
    throw FrameConstraintError("initial frame violates e_par^2 + |e_perp|^2 = 1 by " +
                               std::to_string(unit));

  const double dl = sp.grid().dl();
  const double c1 = 0.5 - std::sqrt(3.0) / 6.0;
  const double c2 = 0.5 + std::sqrt(3.0) / 6.0;
  const Field v1 = sp.translate(v, c1 * dl);
  const Field v2 = sp.translate(v, c2 * dl);

  FrameFlowState out;
  out.anchor = anchor;
  out.e_par.resize(n);
  out.e_perp.resize(n, p);
  Eigen::VectorXd u = anchor;
  double worst = 0.0;
  for (int j = 0; j <= n; ++j) {
    if (j < n) {
      out.e_par(j) = u(0);
      out.e_perp.row(j) = u.tail(p).transpose();
      worst = std::max(worst, std::abs(u.squaredNorm() - 1.0));
    } else {
      out.closure_mismatch = (u - anchor).cwiseAbs().maxCoeff();
      worst = std::max(worst, std::abs(u.squaredNorm() - 1.0));
      break;
    }
    const Eigen::MatrixXd A1 = generator(v1, j);
    const Eigen::MatrixXd A2 = generator(v2, j);
    const Eigen::MatrixXd Om =
        0.5 * dl * (A1 + A2) + (std::sqrt(3.0) / 12.0) * dl * dl * (A2 * A1 - A1 * A2);
    u = Om.exp() * u;
  }
  out.constraint_residual = worst;
  if (!(worst <= 1e-4))
    throw FrameConstraintError("frame constraint drifted by " + std::to_string(worst));
  return out;
}

Field sg_rhs(const Spectral& sp, const Field& v, const Eigen::VectorXd& anchor, double R_const) {
  return -R_const * reconstruct_frame(sp, v, anchor).e_perp;
}

std::pair<VectorField1D, FrameFlowState> sg_flow_step(const VectorField1D& v,
                                                      const FrameFlowState& frame,
                                                      double R_const, double dt) {
  return sg_flow_step(Spectral(v.grid), v, frame, R_const, dt);
}

std::pair<VectorField1D, FrameFlowState> sg_flow_step(const Spectral& sp, const VectorField1D& v,
                                                      const FrameFlowState& frame,
                                                      double R_const, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(v.grid == sp.grid())) throw GridMismatch("field and transform grids differ");
  const Eigen::VectorXd& a = frame.anchor;
  const Field& x = v.values;
  const Field k1 = sg_rhs(sp, x, a, R_const);
  const Field k2 = sg_rhs(sp, x + 0.5 * dt * k1, a, R_const);
  const Field k3 = sg_rhs(sp, x + 0.5 * dt * k2, a, R_const);
  const Field k4 = sg_rhs(sp, x + dt * k3, a, R_const);
  VectorField1D next{v.grid, x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)};
  FrameFlowState f = reconstruct_frame(sp, next.values, a);
  return {std::move(next), std::move(f)};
}

}  // namespace nhsol
