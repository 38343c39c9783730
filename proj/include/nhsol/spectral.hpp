#pragma once

#include <Eigen/Dense>
#include <vector>

namespace nhsol {

// Periodic grid on [0, length) with n_pts nodes l_j = j * dl.
struct Grid1D {
  int n_pts = 0;
  double length = 0.0;

  double dl() const { return length / n_pts; }
  double node(int j) const { return j * dl(); }
  // Throws std::invalid_argument unless n_pts is a power of two >= 16 and length > 0.
  void validate() const;
  friend bool operator==(const Grid1D&, const Grid1D&) = default;
};

// n_pts x p samples, one column per component.
using Field = Eigen::MatrixXd;

// How D^{-1} fixes its constant of integration.
//  ZeroMean: spectral antiderivative of the zero-mean part; output has zero mean.
//  Line: adds back the mean as a linear ramp, K f = S f + r <1,f>/L - <r,f>/L with
//        r the centred coordinate. Skew in the discrete pairing and inverts ddx
//        on fields that vanish near the periodic seam.
enum class Gauge { Line, ZeroMean };

const char* to_string(Gauge g);

class Spectral {
 public:
  explicit Spectral(const Grid1D& grid);

  const Grid1D& grid() const { return grid_; }

  // Spectral derivative of the given order, columnwise. The Nyquist mode is
  // dropped for odd orders.
  Field ddx(const Field& f, int order = 1) const;

  // Zero-mean antiderivative; ddx(dinv(f)) = f - mean(f). The per-column mean
  // that was projected out is written to `projected_mean` when given.
  Field dinv(const Field& f, Eigen::VectorXd* projected_mean = nullptr) const;

  Field antiderivative(const Field& f, Gauge gauge) const;

  // Band-limited translate: out(l) = f(l + s).
  Field translate(const Field& f, double s) const;

  // Discrete pairing dl * sum_j a_j . b_j over all components.
  double inner(const Field& a, const Field& b) const;
  // dl * sum_j f_j for a single column.
  double integrate(const Eigen::VectorXd& f) const;

  // Centred coordinate used by the line gauge.
  const Eigen::VectorXd& ramp() const { return ramp_; }

 private:
  Grid1D grid_;
  std::vector<double> k_;  // wavenumbers for the n/2 + 1 half spectrum
  Eigen::VectorXd ramp_;
};

}  // namespace nhsol
