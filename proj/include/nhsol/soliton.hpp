#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "nhsol/spectral.hpp"

namespace nhsol {

class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Samples of v (or a covector/frame component) on a periodic grid.
struct VectorField1D {
  Grid1D grid;
  Field values;  // n_pts x p

  int p() const { return static_cast<int>(values.cols()); }
};
using CovectorField1D = VectorField1D;

// One copy (horizontal or vertical) of the hierarchy on a fixed grid.
class Engine {
 public:
  explicit Engine(const Grid1D& grid, Gauge gauge = Gauge::Line);

  const Spectral& spectral() const { return sp_; }
  const Grid1D& grid() const { return sp_.grid(); }
  Gauge gauge() const { return gauge_; }

  Field dinv(const Field& f) const { return sp_.antiderivative(f, gauge_); }

  // J(e) = e_l + D^{-1}(v . e) v
  Field J(const Field& v, const Field& e) const;
  // H(w) = w_l + v _| D^{-1}(v (x) w - w (x) v),  (v _| M)_j = sum_i v_i M_ij
  Field H(const Field& v, const Field& w) const;
  // R = H o J
  Field R(const Field& v, const Field& e) const;
  // e_2l + |v|^2 e + D^{-1}(v . e) v_l - v _| D^{-1}(v_l (x) e - e (x) v_l)
  Field R_expanded(const Field& v, const Field& e) const;

  // Level 0: v_l; level k >= 1: R^k(v_l) - R_const R^{k-1}(v_l).
  Field flow_rhs(const Field& v, int level, double R_const) const;

  // H^k over one period. For k = 2, `printed` keeps the -1/2 (v . v_l) term.
  double hamiltonian(int k, const Field& v, bool printed = true) const;

  // delta H^k / delta v by central Gateaux differences on each grid basis
  // direction, divided by dl.
  Field variational_derivative(int k, const Field& v, double eps = 1e-4) const;

  void check(const Field& v, const Field& e) const;

 private:
  Spectral sp_;
  Gauge gauge_;
};

// Free-function forms on sampled fields; throw GridMismatch on shape errors.
VectorField1D ddx(const VectorField1D& f);
VectorField1D dinv(const VectorField1D& f, Eigen::VectorXd* projected_mean = nullptr);
CovectorField1D op_J(const VectorField1D& v, const VectorField1D& e, Gauge gauge = Gauge::Line);
VectorField1D op_H(const VectorField1D& v, const CovectorField1D& w, Gauge gauge = Gauge::Line);
VectorField1D recursion(const VectorField1D& v, const VectorField1D& e, Gauge gauge = Gauge::Line);
VectorField1D recursion_expanded(const VectorField1D& v, const VectorField1D& e,
                                 Gauge gauge = Gauge::Line);
double hamiltonian(int k, const VectorField1D& v, bool printed = true);

struct HamiltonianRecord {
  double tau = 0;
  double H0 = 0;
  double H1 = 0;
  double H2_printed = 0;
  double H2_periodic = 0;
  double mass_projection = 0;  // mean of |v|^2/2, dropped by the zero-mean gauge
};

HamiltonianRecord hamiltonian_record(const Engine& eng, const Field& v, double tau);

struct FlowState {
  VectorField1D v;
  double tau = 0;
  int level = 1;
  double R_const = 0;
  Gauge gauge = Gauge::Line;
  double record_interval = 0;  // 0: record every step
  std::vector<HamiltonianRecord> history;
};

// Raised when a step produces non-finite or exploding values. `last_good`
// is the state before the failing step.
class Diverged : public std::runtime_error {
 public:
  Diverged(const std::string& msg, FlowState last_good)
      : std::runtime_error(msg), last_good_(std::move(last_good)) {}
  const FlowState& last_good() const { return last_good_; }

 private:
  FlowState last_good_;
};

Field flow_rhs(const FlowState& state);

// Classical RK4 step of flow_rhs. Appends a Hamiltonian record when the
// configured interval has been crossed.
FlowState step(const FlowState& state, double dt);
FlowState step(const Engine& eng, const FlowState& state, double dt);

// Default time step: C dl for level 0, min(C dl^3, RK4 limit) for level 1,
// min(C dl^5, RK4 limit) for level 2.
double auto_dt(const Grid1D& grid, int level, double C = 0.05);

struct VariationalReport {
  int k = 0;
  double derivative_residual = 0;  // k = 0: max|delta H^0/delta v - v|
  double ladder_residual = 0;      // max|H(delta H^k/delta v) - e_perp^(k)|
  double ladder_scale = 0;         // max|e_perp^(k)|
};

// k = 0: checks delta H^0/delta v = v and H(v) = v_l.
// k = 1: checks H(delta H^1/delta v) = v_3l + 3/2 |v|^2 v_l.
VariationalReport variational_check(int k, const VectorField1D& v, Gauge gauge = Gauge::Line,
                                    double eps = 1e-4);

// mt19937_64 bits mapped to [0,1) by hand; std distributions are
// implementation-defined, this sequence is not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 eng_;
};

// Sum of 1-3 Gaussian wave packets per component, centred in the middle fifth
// of the domain with widths 4-6% of its length: smooth, band-limited on
// adequate grids, and negligible near the periodic seam.
Field random_packet_field(const Grid1D& grid, int p, Rng& rng);

// Zero-mean random trigonometric polynomial with modes 1..kmax.
Field random_periodic_field(const Grid1D& grid, int p, Rng& rng, int kmax = 6);

}  // namespace nhsol
