#include "eigenprep/register.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace eigenprep {

namespace {

void validate_targets(int n_qubits, const std::vector<int>& targets) {
  if (targets.empty())
    throw std::invalid_argument("apply_unitary: empty target list");
  for (int t : targets)
    if (t < 0 || t >= n_qubits)
      throw std::invalid_argument("apply_unitary: target out of range");
  std::vector<int> sorted = targets;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("apply_unitary: duplicate targets");
}

void validate_unitary(const Matrix& u, std::size_t k) {
  const Eigen::Index dim = Eigen::Index(1) << k;
  if (u.rows() != dim || u.cols() != dim)
    throw std::invalid_argument("apply_unitary: matrix size does not match targets");
  const double tol = numeric_config().unitarity_tol;
  if (dim <= 64) {
    const Matrix g = u.adjoint() * u;
    if ((g - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() > tol)
      throw std::invalid_argument("apply_unitary: matrix is not unitary");
  } else {
    // Spot-check a spread of columns for large blocks.
    for (Eigen::Index s = 0; s < 8; ++s) {
      const Eigen::Index j = (dim - 1) * s / 7;
      Vector g = u.adjoint() * u.col(j);
      g[j] -= 1.0;
      if (g.cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("apply_unitary: matrix is not unitary");
    }
  }
}

// Apply u on `targets`, optionally restricted to control bit = 1.
void apply_impl(StateVector& state, const Matrix& u, const std::vector<int>& targets,
                int control) {
  const int n = state.n_qubits;
  validate_targets(n, targets);
  if (control >= 0) {
    if (control >= n)
      throw std::invalid_argument("apply_controlled_unitary: control out of range");
    for (int t : targets)
      if (t == control)
        throw std::invalid_argument("apply_controlled_unitary: control overlaps targets");
  }
  const std::size_t k = targets.size();
  validate_unitary(u, k);

  const std::size_t dim = static_cast<std::size_t>(state.dim());
  const std::size_t block = std::size_t(1) << k;
  std::vector<std::size_t> masks(k);
  std::size_t target_mask = 0;
  for (std::size_t m = 0; m < k; ++m) {
    masks[m] = std::size_t(1) << (n - 1 - targets[m]);
    target_mask |= masks[m];
  }
  const std::size_t control_mask =
      control >= 0 ? (std::size_t(1) << (n - 1 - control)) : 0;

  // offset[j]: scatter pattern for u's row/column index j (first target is
  // the most significant bit of j).
  std::vector<std::size_t> offset(block, 0);
  for (std::size_t j = 0; j < block; ++j)
    for (std::size_t m = 0; m < k; ++m)
      if ((j >> (k - 1 - m)) & 1u) offset[j] |= masks[m];

  Vector gathered(static_cast<Eigen::Index>(block));
  cx* amps = state.amps.data();
  for (std::size_t base = 0; base < dim; ++base) {
    if (base & target_mask) continue;
    if (control_mask && !(base & control_mask)) continue;
    for (std::size_t j = 0; j < block; ++j)
      gathered[static_cast<Eigen::Index>(j)] = amps[base | offset[j]];
    const Vector rotated = u * gathered;
    for (std::size_t j = 0; j < block; ++j)
      amps[base | offset[j]] = rotated[static_cast<Eigen::Index>(j)];
  }
}

}  // namespace

void validate_state(const StateVector& state) {
  if (state.n_qubits < 1 ||
      state.amps.size() != (Eigen::Index(1) << state.n_qubits))
    throw std::runtime_error("state vector has inconsistent dimensions");
  if (std::abs(state.amps.norm() - 1.0) > numeric_config().state_norm_tol)
    throw std::runtime_error("state vector norm drifted beyond tolerance");
}

StateVector init_basis(int n_qubits, const std::string& bits) {
  if (n_qubits < 1 || n_qubits > 24)
    throw std::invalid_argument("init_basis: qubit count out of range");
  if (static_cast<int>(bits.size()) != n_qubits)
    throw std::invalid_argument("init_basis: bit-string length mismatch");
  std::size_t index = 0;
  for (int q = 0; q < n_qubits; ++q) {
    if (bits[q] != '0' && bits[q] != '1')
      throw std::invalid_argument("init_basis: bits must be '0' or '1'");
    index = (index << 1) | static_cast<std::size_t>(bits[q] - '0');
  }
  StateVector state;
  state.n_qubits = n_qubits;
  state.amps = Vector::Zero(Eigen::Index(1) << n_qubits);
  state.amps[static_cast<Eigen::Index>(index)] = 1.0;
  return state;
}

StateVector from_amplitudes(int n_qubits, const Vector& amps) {
  if (amps.size() != (Eigen::Index(1) << n_qubits))
    throw std::invalid_argument("from_amplitudes: dimension mismatch");
  const double nrm = amps.norm();
  if (nrm < 1e-300)
    throw std::invalid_argument("from_amplitudes: zero vector");
  StateVector state;
  state.n_qubits = n_qubits;
  state.amps = amps / nrm;
  return state;
}

Matrix h_gate() {
  Matrix m(2, 2);
  const double s = 1.0 / std::sqrt(2.0);
  m << s, s, s, -s;
  return m;
}

Matrix x_gate() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix y_gate() {
  Matrix m(2, 2);
  m << cx(0, 0), cx(0, -1), cx(0, 1), cx(0, 0);
  return m;
}

Matrix z_gate() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Matrix phase_gate(double phi) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = std::exp(cx(0.0, phi));
  return m;
}

void apply_unitary(StateVector& state, const Matrix& u, const std::vector<int>& targets) {
  apply_impl(state, u, targets, -1);
}

void apply_controlled_unitary(StateVector& state, const Matrix& u, int control,
                              const std::vector<int>& targets) {
  if (control < 0)
    throw std::invalid_argument("apply_controlled_unitary: control out of range");
  apply_impl(state, u, targets, control);
}

std::pair<MeasurementRecord, StateVector> measure_qubit(const StateVector& state,
                                                        int qubit, RngStream& rng) {
  if (qubit < 0 || qubit >= state.n_qubits)
    throw std::invalid_argument("measure_qubit: qubit out of range");
  const std::size_t mask = std::size_t(1) << (state.n_qubits - 1 - qubit);
  double p1 = 0.0;
  for (Eigen::Index i = 0; i < state.dim(); ++i)
    if (static_cast<std::size_t>(i) & mask) p1 += std::norm(state.amps[i]);

  const double u = rng.uniform();
  const int outcome = (u < p1) ? 1 : 0;
  const double p = outcome ? p1 : 1.0 - p1;

  StateVector post = state;
  const double inv = 1.0 / std::sqrt(std::max(p, 1e-300));
  for (Eigen::Index i = 0; i < post.dim(); ++i) {
    const bool bit = static_cast<std::size_t>(i) & mask;
    post.amps[i] = (bit == static_cast<bool>(outcome)) ? post.amps[i] * inv : cx(0.0);
  }

  MeasurementRecord rec;
  rec.qubit = qubit;
  rec.outcome = outcome;
  rec.probability = p;
  return {rec, post};
}

double expectation_pauli(const StateVector& state, const std::string& pauli) {
  const int n = state.n_qubits;
  if (static_cast<int>(pauli.size()) != n)
    throw std::invalid_argument("expectation_pauli: string length mismatch");
  std::size_t flip = 0;
  for (int q = 0; q < n; ++q) {
    const char c = pauli[q];
    if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z')
      throw std::invalid_argument("expectation_pauli: invalid pauli op");
    if (c == 'X' || c == 'Y') flip |= std::size_t(1) << (n - 1 - q);
  }
  cx acc(0.0);
  for (Eigen::Index col = 0; col < state.dim(); ++col) {
    cx phase(1.0);
    for (int q = 0; q < n; ++q) {
      const bool bit = (static_cast<std::size_t>(col) >> (n - 1 - q)) & 1u;
      switch (pauli[q]) {
        case 'Y': phase *= bit ? cx(0, -1) : cx(0, 1); break;
        case 'Z': phase *= bit ? -1.0 : 1.0; break;
        default: break;
      }
    }
    const auto row = static_cast<Eigen::Index>(static_cast<std::size_t>(col) ^ flip);
    acc += std::conj(state.amps[row]) * phase * state.amps[col];
  }
  return acc.real();
}

std::pair<double, double> sampled_expectation_pauli(const StateVector& state,
                                                    const std::string& pauli,
                                                    int shots, RngStream& rng) {
  const int n = state.n_qubits;
  if (static_cast<int>(pauli.size()) != n)
    throw std::invalid_argument("sampled_expectation_pauli: string length mismatch");
  if (shots < 2)
    throw std::invalid_argument("sampled_expectation_pauli: need at least 2 shots");

  // Rotate into the measurement basis.
  StateVector rotated = state;
  std::size_t support = 0;
  for (int q = 0; q < n; ++q) {
    switch (pauli[q]) {
      case 'X':
        apply_unitary(rotated, h_gate(), {q});
        support |= std::size_t(1) << (n - 1 - q);
        break;
      case 'Y':
        apply_unitary(rotated, phase_gate(-std::numbers::pi / 2.0), {q});
        apply_unitary(rotated, h_gate(), {q});
        support |= std::size_t(1) << (n - 1 - q);
        break;
      case 'Z':
        support |= std::size_t(1) << (n - 1 - q);
        break;
      case 'I':
        break;
      default:
        throw std::invalid_argument("sampled_expectation_pauli: invalid pauli op");
    }
  }

  // Cumulative distribution over basis states, sampled by inversion.
  std::vector<double> cdf(static_cast<std::size_t>(rotated.dim()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < rotated.dim(); ++i) {
    acc += std::norm(rotated.amps[i]);
    cdf[static_cast<std::size_t>(i)] = acc;
  }

  long long sum = 0;
  for (int s = 0; s < shots; ++s) {
    const double u = rng.uniform() * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto idx = static_cast<std::size_t>(std::distance(cdf.begin(), it));
    const int parity = __builtin_popcountll(idx & support) & 1;
    sum += parity ? -1 : 1;
  }
  const double mean = static_cast<double>(sum) / shots;
  const double var =
      (static_cast<double>(shots) / (shots - 1)) * std::max(1.0 - mean * mean, 0.0);
  return {mean, std::sqrt(var / shots)};
}

Matrix density_from_shots(const std::vector<StateVector>& states) {
  if (states.empty())
    throw std::invalid_argument("density_from_shots: no states");
  const Eigen::Index dim = states.front().dim();
  Matrix rho = Matrix::Zero(dim, dim);
  for (const auto& s : states) {
    if (s.dim() != dim)
      throw std::invalid_argument("density_from_shots: dimension mismatch");
    rho.noalias() += s.amps * s.amps.adjoint();
  }
  return rho / static_cast<double>(states.size());
}

std::pair<StateVector, double> principal_state(const Matrix& rho) {
  const EigenDecomposition ed = eig_hermitian(rho);
  const Eigen::Index last = ed.values.size() - 1;
  Vector v = ed.vectors.col(last);
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const cx pivot = v[imax];
  if (std::abs(pivot) > 0) v *= std::conj(pivot) / std::abs(pivot);

  int n = 0;
  while ((Eigen::Index(1) << n) < v.size()) ++n;
  if ((Eigen::Index(1) << n) != v.size())
    throw std::invalid_argument("principal_state: dimension is not a power of two");
  StateVector state;
  state.n_qubits = n;
  state.amps = v / v.norm();
  return {state, ed.values[last]};
}

}  // namespace eigenprep
