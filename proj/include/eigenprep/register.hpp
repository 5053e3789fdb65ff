#pragma once

// n-qubit state-vector register. Conventions, used consistently everywhere:
//   * qubit 0 is the leftmost / most significant bit of a basis label;
//     basis index i = sum_q bit_q * 2^(n-1-q).
//   * multi-target unitaries read their row index from the target list in
//     order, first target most significant: apply_unitary(kron(A, B), {a, b})
//     equals applying A on qubit a and B on qubit b.
//   * controlled unitaries act on the control = |1> subspace.

#include <string>
#include <utility>
#include <vector>

#include "eigenprep/numerics.hpp"

namespace eigenprep {

struct StateVector {
  int n_qubits = 0;
  Vector amps;

  Eigen::Index dim() const { return amps.size(); }
};

// Throws std::runtime_error if the norm drifted beyond tolerance.
void validate_state(const StateVector& state);

// |bits>, bits given as a string of '0'/'1' with qubit 0 first.
StateVector init_basis(int n_qubits, const std::string& bits);
StateVector from_amplitudes(int n_qubits, const Vector& amps);  // normalizes

// Standard 2x2 gates.
Matrix h_gate();
Matrix x_gate();
Matrix y_gate();
Matrix z_gate();
Matrix phase_gate(double phi);  // diag(1, e^{i phi})

// In-place application of a 2^k x 2^k unitary to k distinct targets.
void apply_unitary(StateVector& state, const Matrix& u, const std::vector<int>& targets);
// Same, restricted to the subspace where `control` is |1>.
void apply_controlled_unitary(StateVector& state, const Matrix& u, int control,
                              const std::vector<int>& targets);

struct MeasurementRecord {
  int qubit = 0;
  int outcome = 0;       // 0 or 1
  double probability = 0;  // pre-collapse probability of this outcome
};
// Projective Z measurement of one qubit; returns the record and the
// renormalized post-measurement state. Outcome 1 is drawn iff u < P(1).
std::pair<MeasurementRecord, StateVector> measure_qubit(const StateVector& state,
                                                        int qubit, RngStream& rng);

// <psi| P |psi> for a Pauli string (leftmost character = qubit 0).
double expectation_pauli(const StateVector& state, const std::string& pauli);

// Shot-based estimate of the same quantity: rotate each X support qubit by H
// and each Y support qubit by P(-pi/2) then H, sample bitstrings, average the
// (-1)^parity eigenvalues. Returns (estimate, standard error of the mean).
std::pair<double, double> sampled_expectation_pauli(const StateVector& state,
                                                    const std::string& pauli,
                                                    int shots, RngStream& rng);

// rho = (1/N) sum_i |psi_i><psi_i|.
Matrix density_from_shots(const std::vector<StateVector>& states);

// Largest-eigenvalue eigenvector of a density matrix and its weight. The
// global phase is fixed so the largest-magnitude amplitude is real positive.
std::pair<StateVector, double> principal_state(const Matrix& rho);

}  // namespace eigenprep
