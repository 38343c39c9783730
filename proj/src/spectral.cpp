#include "nhsol/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nhsol {

const char* to_string(Gauge g) { return g == Gauge::Line ? "line" : "zero_mean"; }

void Grid1D::validate() const {
  if (n_pts < 16 || (n_pts & (n_pts - 1)) != 0)
    throw std::invalid_argument("grid size must be a power of two >= 16, got " +
                                std::to_string(n_pts));
  if (!(length > 0.0) || !std::isfinite(length))
    throw std::invalid_argument("grid length must be positive");
}

namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are made once per size and kept for the process lifetime.
struct Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

const Plans& plans_for(int n) {
  static std::mutex mu;
  static std::map<int, Plans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> in(static_cast<std::size_t>(n));
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  auto* cout = reinterpret_cast<fftw_complex*>(out.data());
  Plans p;
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  p.r2c = fftw_plan_dft_r2c_1d(n, in.data(), cout, flags);
  p.c2r = fftw_plan_dft_c2r_1d(n, cout, in.data(), flags | FFTW_DESTROY_INPUT);
  return cache.emplace(n, p).first->second;
}

using Spectrum = std::vector<std::complex<double>>;

void forward(const Plans& p, const double* col, int n, std::vector<double>& buf, Spectrum& out) {
  buf.assign(col, col + n);
  out.resize(static_cast<std::size_t>(n / 2 + 1));
  fftw_execute_dft_r2c(p.r2c, buf.data(), reinterpret_cast<fftw_complex*>(out.data()));
}

void backward(const Plans& p, Spectrum& spec, int n, double* col) {
  fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(spec.data()), col);
  const double inv = 1.0 / n;
  for (int j = 0; j < n; ++j) col[j] *= inv;
}

}  // namespace

Spectral::Spectral(const Grid1D& grid) : grid_(grid) {
  grid_.validate();
  const int n = grid_.n_pts;
  k_.resize(static_cast<std::size_t>(n / 2 + 1));
  for (int j = 0; j <= n / 2; ++j) k_[static_cast<std::size_t>(j)] = 2.0 * std::numbers::pi * j / grid_.length;
  ramp_.resize(n);
  const double dl = grid_.dl();
  for (int j = 0; j < n; ++j) ramp_(j) = (j + 0.5) * dl - 0.5 * grid_.length;
  plans_for(n);
}

Field Spectral::ddx(const Field& f, int order) const {
  const int n = grid_.n_pts;
  if (f.rows() != n) throw std::invalid_argument("ddx: field does not match grid");
  if (order < 0) throw std::invalid_argument("ddx: negative order");
  const Plans& p = plans_for(n);
  Field out(n, f.cols());
  std::vector<double> buf;
  Spectrum s;
  // i^order, exact
  static const std::complex<double> ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const std::complex<double> phase = ipow[order % 4];
  for (Eigen::Index c = 0; c < f.cols(); ++c) {
    forward(p, f.col(c).data(), n, buf, s);
    for (int j = 0; j <= n / 2; ++j) {
      const double k = k_[static_cast<std::size_t>(j)];
      std::complex<double> mult = phase * std::pow(k, order);
      if (j == n / 2 && order % 2 == 1) mult = 0.0;
      s[static_cast<std::size_t>(j)] *= mult;
    }
    backward(p, s, n, out.col(c).data());
  }
  return out;
}

Field Spectral::dinv(const Field& f, Eigen::VectorXd* projected_mean) const {
  const int n = grid_.n_pts;
  if (f.rows() != n) throw std::invalid_argument("dinv: field does not match grid");
  const Plans& p = plans_for(n);
  Field out(n, f.cols());
  if (projected_mean) projected_mean->resize(f.cols());
  std::vector<double> buf;
  Spectrum s;
  const std::complex<double> I(0.0, 1.0);
  for (Eigen::Index c = 0; c < f.cols(); ++c) {
    forward(p, f.col(c).data(), n, buf, s);
    if (projected_mean) (*projected_mean)(c) = s[0].real() / n;
    s[0] = 0.0;
    s[static_cast<std::size_t>(n / 2)] = 0.0;
    for (int j = 1; j < n / 2; ++j) s[static_cast<std::size_t>(j)] /= I * k_[static_cast<std::size_t>(j)];
    backward(p, s, n, out.col(c).data());
  }
  return out;
}

Field Spectral::antiderivative(const Field& f, Gauge gauge) const {
  Field out = dinv(f);
  if (gauge == Gauge::ZeroMean) return out;
  const double L = grid_.length;
  for (Eigen::Index c = 0; c < f.cols(); ++c) {
    const double mass = integrate(f.col(c));
    const double moment = grid_.dl() * ramp_.dot(f.col(c));
    out.col(c) += ramp_ * (mass / L);
    out.col(c).array() -= moment / L;
  }
  return out;
}

Field Spectral::translate(const Field& f, double shift) const {
  const int n = grid_.n_pts;
  if (f.rows() != n) throw std::invalid_argument("translate: field does not match grid");
  const Plans& p = plans_for(n);
  Field out(n, f.cols());
  std::vector<double> buf;
  Spectrum s;
  for (Eigen::Index c = 0; c < f.cols(); ++c) {
    forward(p, f.col(c).data(), n, buf, s);
    for (int j = 0; j <= n / 2; ++j) {
      const double ph = k_[static_cast<std::size_t>(j)] * shift;
      if (j == n / 2) {
        s[static_cast<std::size_t>(j)] *= std::cos(ph);
      } else {
        s[static_cast<std::size_t>(j)] *= std::complex<double>(std::cos(ph), std::sin(ph));
      }
    }
    backward(p, s, n, out.col(c).data());
  }
  return out;
}

double Spectral::inner(const Field& a, const Field& b) const {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("inner: shape mismatch");
  return grid_.dl() * (a.array() * b.array()).sum();
}

double Spectral::integrate(const Eigen::VectorXd& f) const { return grid_.dl() * f.sum(); }

}  // namespace nhsol
