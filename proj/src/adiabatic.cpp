#include "eigenprep/adiabatic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace eigenprep {

double interpolation_f(double t, double total_time) {
  if (total_time <= 0.0)
    throw std::invalid_argument("interpolation_f: total_time must be positive");
  if (t < 0.0 || t > total_time)
    throw std::invalid_argument("interpolation_f: t outside [0, T]");
  const double c = std::cos(std::numbers::pi * t / (2.0 * total_time));
  return c * c;
}

Schedule::Schedule(double total_time_, int n_steps_)
    : total_time(total_time_), n_steps(n_steps_) {
  if (total_time <= 0.0)
    throw std::invalid_argument("Schedule: total_time must be positive");
  if (n_steps < 1) throw std::invalid_argument("Schedule: need at least one step");
}

std::vector<Matrix> short_time_propagators(const Matrix& h0, const Matrix& hT,
                                           const Schedule& schedule) {
  if (h0.rows() != hT.rows() || h0.rows() != h0.cols())
    throw std::invalid_argument("short_time_propagators: dimension mismatch");
  std::vector<Matrix> props;
  props.reserve(schedule.n_steps);
  const double dt = schedule.dt();
  for (int k = 1; k <= schedule.n_steps; ++k) {
    const double f = interpolation_f(schedule.time_at(k), schedule.total_time);
    props.push_back(expm_unitary(interpolate(h0, hT, f), dt));
  }
  return props;
}

namespace {

// Ground state of h0, then continuity-tracked eigenstate at each t_k.
// Returns the tracked eigenvector for k = 0..n.
std::vector<Vector> tracked_eigenstates(const Matrix& h0, const Matrix& hT,
                                        const Schedule& schedule, int up_to) {
  std::vector<Vector> phi;
  phi.reserve(up_to + 1);
  Vector prev = eig_hermitian(h0).vectors.col(0);
  phi.push_back(prev);
  for (int k = 1; k <= up_to; ++k) {
    const double f = interpolation_f(schedule.time_at(k), schedule.total_time);
    const EigenDecomposition ed = eig_hermitian(interpolate(h0, hT, f));
    Eigen::Index best = 0;
    double best_ov = -1.0;
    for (Eigen::Index j = 0; j < ed.values.size(); ++j) {
      const double ov = std::abs(prev.dot(ed.vectors.col(j)));
      if (ov > best_ov) {
        best_ov = ov;
        best = j;
      }
    }
    Vector cur = ed.vectors.col(best);
    const cx ov = prev.dot(cur);  // align phase for smooth tracking
    if (std::abs(ov) > 0) cur *= std::conj(ov) / std::abs(ov);
    phi.push_back(cur);
    prev = phi.back();
  }
  return phi;
}

Matrix gate_on_all(const Matrix& g, int n_qubits) {
  Matrix out = g;
  for (int q = 1; q < n_qubits; ++q) out = kron(out, g);
  return out;
}

}  // namespace

Trajectory run_adiabatic(const Matrix& h0, const Matrix& hT, const Schedule& schedule,
                         const StateVector& initial) {
  validate_state(initial);
  if (initial.dim() != h0.rows())
    throw std::invalid_argument("run_adiabatic: state/hamiltonian dimension mismatch");
  const auto props = short_time_propagators(h0, hT, schedule);
  const auto phi = tracked_eigenstates(h0, hT, schedule, schedule.n_steps);

  Trajectory traj;
  const int n = schedule.n_steps;
  traj.times.reserve(n + 1);
  traj.states.reserve(n + 1);
  traj.fidelities.reserve(n + 1);
  traj.energies.reserve(n + 1);

  Vector psi = initial.amps;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) psi = props[k - 1] * psi;
    traj.times.push_back(schedule.time_at(k));
    traj.states.push_back(psi);
    traj.eigenstates.push_back(phi[k]);
    traj.fidelities.push_back(std::abs(phi[k].dot(psi)));
    traj.energies.push_back((psi.adjoint() * hT * psi)(0, 0).real());
  }
  return traj;
}

double fidelity_via_uncompute(const Matrix& h0, const Matrix& hT,
                              const Schedule& schedule, int k,
                              const std::optional<StateVector>& probe) {
  if (k < 0 || k > schedule.n_steps)
    throw std::invalid_argument("fidelity_via_uncompute: step index out of range");
  const Eigen::Index dim = h0.rows();
  int n_qubits = 0;
  while ((Eigen::Index(1) << n_qubits) < dim) ++n_qubits;
  if ((Eigen::Index(1) << n_qubits) != dim)
    throw std::invalid_argument("fidelity_via_uncompute: dimension is not a power of two");

  const auto phi = tracked_eigenstates(h0, hT, schedule, k);
  Vector v = probe ? probe->amps : phi[k];
  if (v.size() != dim)
    throw std::invalid_argument("fidelity_via_uncompute: probe dimension mismatch");

  const auto props = short_time_propagators(h0, hT, schedule);
  for (int i = k; i >= 1; --i) v = props[i - 1].adjoint() * v;

  // Undo the preparation H(all) X(all)|0...0> when that is in fact the h0
  // ground state; otherwise project onto the actual ground state.
  const Matrix h_all = gate_on_all(h_gate(), n_qubits);
  const Matrix x_all = gate_on_all(x_gate(), n_qubits);
  Vector zero = Vector::Zero(dim);
  zero[0] = 1.0;
  const Vector prep = h_all * (x_all * zero);
  if (std::abs(phi[0].dot(prep)) >= 1.0 - 1e-9) {
    v = x_all * (h_all * v);
    return std::abs(v[0]);
  }
  return std::abs(phi[0].dot(v));
}

// ---------------------------------------------------------------------------
// Z-Y Euler decomposition.

Matrix euler_v_matrix(const EulerAngles& a) {
  Matrix v(2, 2);
  const double cg = std::cos(a.gamma / 2.0), sg = std::sin(a.gamma / 2.0);
  v(0, 0) = cg;
  v(0, 1) = -std::exp(cx(0, a.delta)) * sg;
  v(1, 0) = std::exp(cx(0, a.beta)) * sg;
  v(1, 1) = std::exp(cx(0, a.delta + a.beta)) * cg;
  return v;
}

Matrix euler_reconstruct(const EulerAngles& a) {
  return std::exp(cx(0, a.xi)) * euler_v_matrix(a);
}

EulerAngles controlled_evolution_angles(double c_i, double c_x, double c_y,
                                        double c_z, double t) {
  const Matrix u = expm_unitary(single_qubit(c_i, c_x, c_y, c_z), t);
  const auto residual = [&](const EulerAngles& a) {
    return (euler_reconstruct(a) - u).cwiseAbs().maxCoeff();
  };
  const double tol = 1e-9;

  const double r = std::sqrt(c_x * c_x + c_y * c_y + c_z * c_z);
  if (t == 0.0 || r == 0.0) {
    EulerAngles a{0.0, 0.0, 0.0, -c_i * t};
    if (residual(a) > tol)
      throw std::runtime_error("controlled_evolution_angles: reconstruction failed");
    return a;
  }

  const double th2 = t * r;  // theta / 2
  const double nx = c_x / r, ny = c_y / r, nz = c_z / r;
  const double a0 = std::atan2(nz * std::sin(th2), std::cos(th2));
  const double b0 = std::atan2(nx, ny);
  const double pi = std::numbers::pi;

  // Principal branch first, then shifted branches when sign conventions of
  // the arctangent differ from the rotation's half-angle quadrant.
  for (double da : {0.0, pi, -pi}) {
    for (double db : {0.0, pi, -pi}) {
      const double aa = a0 + da;
      const double bb = b0 + db;
      const double ca = std::cos(aa);
      if (std::abs(ca) < 1e-12) continue;
      const double ratio = std::clamp(std::cos(th2) / ca, -1.0, 1.0);
      for (double sign : {1.0, -1.0}) {
        EulerAngles ang;
        ang.gamma = sign * 2.0 * std::acos(ratio);
        ang.delta = aa + bb;
        ang.beta = aa - bb;
        ang.xi = -c_i * t - aa;
        if (residual(ang) < tol) return ang;
      }
    }
  }

  // Direct construction from the computed unitary; exact for any 2x2 unitary.
  EulerAngles ang;
  const double m00 = std::abs(u(0, 0)), m10 = std::abs(u(1, 0));
  ang.gamma = 2.0 * std::atan2(m10, m00);
  if (m00 > 1e-12) {
    ang.xi = std::arg(u(0, 0));
    ang.beta = m10 > 1e-14 ? std::arg(u(1, 0)) - ang.xi : 0.0;
    ang.delta = std::abs(u(0, 1)) > 1e-14 ? std::arg(-u(0, 1)) - ang.xi
                                          : std::arg(u(1, 1)) - ang.xi - ang.beta;
  } else {
    ang.xi = 0.0;
    ang.beta = std::arg(u(1, 0));
    ang.delta = std::arg(-u(0, 1));
  }
  if (residual(ang) > tol)
    throw std::runtime_error("controlled_evolution_angles: reconstruction failed");
  return ang;
}

// ---------------------------------------------------------------------------
// Readout confusion.

ConfusionMatrix confusion_build(double p01_q1, double p10_q1, double p01_q2,
                                double p10_q2) {
  const auto check = [](double p01, double p10, const char* which) {
    if (p01 < 0.0 || p01 > 1.0 || p10 < 0.0 || p10 > 1.0)
      throw std::invalid_argument(std::string("confusion_build: rates for ") +
                                  which + " must lie in [0, 1]");
    if (p01 + p10 >= 1.0)
      throw std::invalid_argument(
          std::string("confusion_build: p01 + p10 >= 1 on ") + which +
          " makes the confusion matrix singular");
  };
  check(p01_q1, p10_q1, "qubit 1");
  check(p01_q2, p10_q2, "qubit 2");

  const auto single = [](double p01, double p10) {
    Eigen::Matrix2d m;
    m << 1.0 - p10, p01, p10, 1.0 - p01;
    return m;
  };
  const Eigen::Matrix2d m1 = single(p01_q1, p10_q1);
  const Eigen::Matrix2d m2 = single(p01_q2, p10_q2);
  ConfusionMatrix cm;
  cm.m = RealMatrix(4, 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      cm.m.block(2 * i, 2 * j, 2, 2) = m1(i, j) * m2;
  for (int j = 0; j < 4; ++j)
    if (std::abs(cm.m.col(j).sum() - 1.0) > 1e-12)
      throw std::runtime_error("confusion_build: columns are not stochastic");
  return cm;
}

MitigationResult confusion_mitigate(const std::vector<double>& counts,
                                    const ConfusionMatrix& cm) {
  if (counts.size() != 4)
    throw std::invalid_argument("confusion_mitigate: need 4 outcome counts");
  double total = 0.0;
  for (double c : counts) {
    if (c < 0.0)
      throw std::invalid_argument("confusion_mitigate: negative count");
    total += c;
  }
  if (total <= 0.0)
    throw std::invalid_argument("confusion_mitigate: empty counts");

  RealVector p(4);
  for (int i = 0; i < 4; ++i) p[i] = counts[static_cast<std::size_t>(i)] / total;
  MitigationResult out;
  out.raw = cm.m.partialPivLu().solve(p);
  out.probabilities = out.raw;
  for (int i = 0; i < 4; ++i) {
    if (out.probabilities[i] < 0.0 || out.probabilities[i] > 1.0) {
      out.clipped = true;
      out.probabilities[i] = std::clamp(out.probabilities[i], 0.0, 1.0);
    }
  }
  const double s = out.probabilities.sum();
  if (s <= 0.0)
    throw std::runtime_error("confusion_mitigate: mitigation collapsed to zero");
  out.probabilities /= s;
  return out;
}

}  // namespace eigenprep
