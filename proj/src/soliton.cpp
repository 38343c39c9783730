#include "nhsol/soliton.hpp"

#include <cmath>
#include <numbers>

namespace nhsol {

Engine::Engine(const Grid1D& grid, Gauge gauge) : sp_(grid), gauge_(gauge) {}

void Engine::check(const Field& v, const Field& e) const {
  const int n = grid().n_pts;
  if (v.rows() != n || e.rows() != n)
    throw GridMismatch("field length does not match the grid");
  if (v.cols() != e.cols()) throw GridMismatch("fields have different component counts");
  if (v.cols() < 1) throw GridMismatch("fields need at least one component");
}

Field Engine::J(const Field& v, const Field& e) const {
  check(v, e);
  const Eigen::VectorXd dot = (v.array() * e.array()).rowwise().sum();
  const Field k = dinv(Field(dot));
  Field out = sp_.ddx(e);
  out.array() += v.array().colwise() * k.col(0).array();
  return out;
}

namespace {

// out_j += sum_i v_i K(a_i b_j - b_i a_j), i.e. v _| K(a ^ b); only i < j is
// transformed, the wedge is antisymmetric.
void add_contracted_wedge(const Engine& eng, const Field& v, const Field& a, const Field& b,
                          Field& out, double sign) {
  const Eigen::Index p = v.cols();
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const Eigen::VectorXd w = a.col(i).cwiseProduct(b.col(j)) - b.col(i).cwiseProduct(a.col(j));
      const Eigen::VectorXd kw = eng.dinv(Field(w)).col(0);
      // M_ij = kw, M_ji = -kw
      out.col(j) += sign * v.col(i).cwiseProduct(kw);
      out.col(i) -= sign * v.col(j).cwiseProduct(kw);
    }
}

}  // namespace

Field Engine::H(const Field& v, const Field& w) const {
  check(v, w);
  Field out = sp_.ddx(w);
  add_contracted_wedge(*this, v, v, w, out, 1.0);
  return out;
}

Field Engine::R(const Field& v, const Field& e) const { return H(v, J(v, e)); }

Field Engine::R_expanded(const Field& v, const Field& e) const {
  check(v, e);
  const Field vl = sp_.ddx(v);
  Field out = sp_.ddx(e, 2);
  const Eigen::VectorXd v2 = v.rowwise().squaredNorm();
  out.array() += e.array().colwise() * v2.array();
  const Eigen::VectorXd dot = (v.array() * e.array()).rowwise().sum();
  const Field k = dinv(Field(dot));
  out.array() += vl.array().colwise() * k.col(0).array();
  add_contracted_wedge(*this, v, vl, e, out, -1.0);
  return out;
}

Field Engine::flow_rhs(const Field& v, int level, double R_const) const {
  if (level < 0 || level > 2)
    throw std::invalid_argument("unsupported flow level " + std::to_string(level));
  Field e = sp_.ddx(v);
  if (level == 0) return e;
  Field prev = e;
  for (int k = 0; k < level; ++k) {
    prev = e;
    e = R(v, e);
  }
  if (R_const != 0.0) e -= R_const * prev;
  return e;
}

double Engine::hamiltonian(int k, const Field& v, bool printed) const {
  if (v.rows() != grid().n_pts) throw GridMismatch("field length does not match the grid");
  const Eigen::ArrayXd v2 = v.rowwise().squaredNorm().array();
  switch (k) {
    case 0:
      return sp_.integrate((0.5 * v2).matrix());
    case 1: {
      const Field vl = sp_.ddx(v);
      const Eigen::ArrayXd vl2 = vl.rowwise().squaredNorm().array();
      return sp_.integrate((-0.5 * vl2 + 0.125 * v2 * v2).matrix());
    }
    case 2: {
      const Field vl = sp_.ddx(v);
      const Field vll = sp_.ddx(v, 2);
      const Eigen::ArrayXd vl2 = vl.rowwise().squaredNorm().array();
      const Eigen::ArrayXd vll2 = vll.rowwise().squaredNorm().array();
      Eigen::ArrayXd dens = 0.5 * vll2 - 0.75 * v2 * vl2 + v2 * v2 * v2 / 16.0;
      if (printed) dens -= 0.5 * (v.array() * vl.array()).rowwise().sum();
      return sp_.integrate(dens.matrix());
    }
    default:
      throw std::invalid_argument("unsupported Hamiltonian index " + std::to_string(k));
  }
}

Field Engine::variational_derivative(int k, const Field& v, double eps) const {
  Field out(v.rows(), v.cols());
  Field w = v;
  const double scale = 1.0 / (2.0 * eps * grid().dl());
  for (Eigen::Index c = 0; c < v.cols(); ++c)
    for (Eigen::Index j = 0; j < v.rows(); ++j) {
      const double orig = w(j, c);
      w(j, c) = orig + eps;
      const double hp = hamiltonian(k, w);
      w(j, c) = orig - eps;
      const double hm = hamiltonian(k, w);
      w(j, c) = orig;
      out(j, c) = (hp - hm) * scale;
    }
  return out;
}

namespace {

void check_pair(const VectorField1D& a, const VectorField1D& b) {
  if (!(a.grid == b.grid)) throw GridMismatch("fields live on different grids");
  if (a.values.rows() != a.grid.n_pts || b.values.rows() != b.grid.n_pts)
    throw GridMismatch("field length does not match its grid");
  if (a.p() != b.p()) throw GridMismatch("fields have different component counts");
}

}  // namespace

VectorField1D ddx(const VectorField1D& f) {
  Spectral sp(f.grid);
  return {f.grid, sp.ddx(f.values)};
}

VectorField1D dinv(const VectorField1D& f, Eigen::VectorXd* projected_mean) {
  Spectral sp(f.grid);
  return {f.grid, sp.dinv(f.values, projected_mean)};
}

CovectorField1D op_J(const VectorField1D& v, const VectorField1D& e, Gauge gauge) {
  check_pair(v, e);
  return {v.grid, Engine(v.grid, gauge).J(v.values, e.values)};
}

VectorField1D op_H(const VectorField1D& v, const CovectorField1D& w, Gauge gauge) {
  check_pair(v, w);
  return {v.grid, Engine(v.grid, gauge).H(v.values, w.values)};
}

VectorField1D recursion(const VectorField1D& v, const VectorField1D& e, Gauge gauge) {
  check_pair(v, e);
  return {v.grid, Engine(v.grid, gauge).R(v.values, e.values)};
}

VectorField1D recursion_expanded(const VectorField1D& v, const VectorField1D& e, Gauge gauge) {
  check_pair(v, e);
  return {v.grid, Engine(v.grid, gauge).R_expanded(v.values, e.values)};
}

double hamiltonian(int k, const VectorField1D& v, bool printed) {
  return Engine(v.grid).hamiltonian(k, v.values, printed);
}

HamiltonianRecord hamiltonian_record(const Engine& eng, const Field& v, double tau) {
  HamiltonianRecord r;
  r.tau = tau;
  r.H0 = eng.hamiltonian(0, v);
  r.H1 = eng.hamiltonian(1, v);
  r.H2_printed = eng.hamiltonian(2, v, true);
  r.H2_periodic = eng.hamiltonian(2, v, false);
  r.mass_projection = r.H0 / eng.grid().length;
  return r;
}

Field flow_rhs(const FlowState& state) {
  return Engine(state.v.grid, state.gauge).flow_rhs(state.v.values, state.level, state.R_const);
}

FlowState step(const FlowState& state, double dt) {
  return step(Engine(state.v.grid, state.gauge), state, dt);
}

FlowState step(const Engine& eng, const FlowState& state, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  if (state.level < 0 || state.level > 2)
    throw std::invalid_argument("step supports levels 0, 1, 2");
  FlowState out = state;
  if (out.history.empty()) out.history.push_back(hamiltonian_record(eng, state.v.values, state.tau));

  const Field& v = state.v.values;
  const int lv = state.level;
  const double Rc = state.R_const;
  const Field k1 = eng.flow_rhs(v, lv, Rc);
  const Field k2 = eng.flow_rhs(v + 0.5 * dt * k1, lv, Rc);
  const Field k3 = eng.flow_rhs(v + 0.5 * dt * k2, lv, Rc);
  const Field k4 = eng.flow_rhs(v + dt * k3, lv, Rc);
  out.v.values = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  out.tau = state.tau + dt;

  const double peak = out.v.values.cwiseAbs().maxCoeff();
  if (!std::isfinite(peak) || peak > 1e8) {
    FlowState last = state;
    last.history = out.history;
    throw Diverged("flow diverged at tau = " + std::to_string(out.tau), std::move(last));
  }
  const double last_rec = out.history.back().tau;
  if (state.record_interval <= 0.0 ||
      out.tau >= last_rec + state.record_interval * (1.0 - 1e-9))
    out.history.push_back(hamiltonian_record(eng, out.v.values, out.tau));
  return out;
}

double auto_dt(const Grid1D& grid, int level, double C) {
  grid.validate();
  const double dl = grid.dl();
  const double kmax = std::numbers::pi / dl;
  // RK4 covers |z| <= 2.8 on the imaginary axis; keep a 10% margin.
  const double rk4 = 0.9 * 2.8;
  switch (level) {
    case 0:
      return std::min(C * dl, rk4 / kmax);
    case 1:
      return std::min(C * std::pow(dl, 3), rk4 / std::pow(kmax, 3));
    case 2:
      return std::min(C * std::pow(dl, 5), rk4 / std::pow(kmax, 5));
    default:
      throw std::invalid_argument("auto_dt supports levels 0, 1, 2");
  }
}

VariationalReport variational_check(int k, const VectorField1D& v, Gauge gauge, double eps) {
  if (k != 0 && k != 1) throw std::invalid_argument("variational check supports k = 0, 1");
  Engine eng(v.grid, gauge);
  VariationalReport rep;
  rep.k = k;
  const Field w = eng.variational_derivative(k, v.values, eps);
  Field target;
  if (k == 0) {
    rep.derivative_residual = (w - v.values).cwiseAbs().maxCoeff();
    target = eng.spectral().ddx(v.values);
  } else {
    // ladder target e_perp^(1) = R(v_l), i.e. the level-1 flow with no curvature term
    target = eng.flow_rhs(v.values, 1, 0.0);
    const Field exact =
        eng.spectral().ddx(v.values, 2) +
        Field(v.values.array().colwise() * (0.5 * v.values.rowwise().squaredNorm().array()));
    rep.derivative_residual = (w - exact).cwiseAbs().maxCoeff();
  }
  rep.ladder_residual = (eng.H(v.values, w) - target).cwiseAbs().maxCoeff();
  rep.ladder_scale = target.cwiseAbs().maxCoeff();
  return rep;
}

Field random_packet_field(const Grid1D& grid, int p, Rng& rng) {
  const double L = grid.length;
  Field f = Field::Zero(grid.n_pts, p);
  for (int c = 0; c < p; ++c) {
    const int packets = 1 + static_cast<int>(rng.uniform() * 3.0);
    for (int q = 0; q < packets; ++q) {
      const double centre = rng.uniform(0.4, 0.6) * L;
      const double width = rng.uniform(0.04, 0.06) * L;
      const double amp = rng.uniform(-1.0, 1.0);
      const double kappa = rng.uniform(0.0, 1.0) / width;
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (int j = 0; j < grid.n_pts; ++j) {
        const double s = (grid.node(j) - centre) / width;
        f(j, c) += amp * std::exp(-0.5 * s * s) * std::cos(kappa * width * s + phase);
      }
    }
  }
  return f;
}

Field random_periodic_field(const Grid1D& grid, int p, Rng& rng, int kmax) {
  Field f = Field::Zero(grid.n_pts, p);
  for (int c = 0; c < p; ++c)
    for (int m = 1; m <= kmax; ++m) {
      const double a = rng.uniform(-1.0, 1.0) / m;
      const double b = rng.uniform(-1.0, 1.0) / m;
      for (int j = 0; j < grid.n_pts; ++j) {
        const double th = 2.0 * std::numbers::pi * m * grid.node(j) / grid.length;
        f(j, c) += a * std::cos(th) + b * std::sin(th);
      }
    }
  return f;
}

}  // namespace nhsol
