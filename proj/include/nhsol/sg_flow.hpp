#pragma once

#include <stdexcept>
#include <utility>

#include "nhsol/soliton.hpp"

namespace nhsol {

class FrameConstraintError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unit frame (e_par, e_perp) along l for the -1 flow. The anchor is the frame
// at l = 0 and is held fixed in tau.
struct FrameFlowState {
  Eigen::VectorXd anchor;  // (e_par(0), e_perp(0)), size p + 1
  Eigen::VectorXd e_par;   // n_pts
  Field e_perp;            // n_pts x p
  double constraint_residual = 0;  // max |e_par^2 + |e_perp|^2 - 1|
  double closure_mismatch = 0;     // |frame(Lambda) - frame(0)|_inf
};

// Anchor with e_par(0) = cos(theta0), e_perp(0) = sin(theta0) along the first axis.
Eigen::VectorXd default_anchor(int p, double theta0 = 0.0);

// Integrates e_perp,l = e_par v, e_par,l = -v . e_perp from the anchor across
// one period with a fourth-order Magnus scheme. Throws FrameConstraintError if
// the anchor is not unit to 1e-6 or the result drifts beyond 1e-4.
FrameFlowState reconstruct_frame(const Spectral& sp, const Field& v, const Eigen::VectorXd& anchor);

// Right-hand side of the -1 flow, v_tau = -R_const e_perp[v].
Field sg_rhs(const Spectral& sp, const Field& v, const Eigen::VectorXd& anchor, double R_const);

// One RK4 step of the -1 flow. The returned frame is reconstructed from the
// updated field.
std::pair<VectorField1D, FrameFlowState> sg_flow_step(const VectorField1D& v,
                                                      const FrameFlowState& frame,
                                                      double R_const, double dt);
std::pair<VectorField1D, FrameFlowState> sg_flow_step(const Spectral& sp, const VectorField1D& v,
                                                      const FrameFlowState& frame,
                                                      double R_const, double dt);

}  // namespace nhsol
