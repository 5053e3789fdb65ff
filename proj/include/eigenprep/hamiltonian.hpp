#pragma once

// Dense Hamiltonian builders. Qubit 0 is the leftmost (most significant)
// position in a Pauli string; basis index i encodes bits MSB-first, so
// string "ZI" acts on qubit 0 of a two-qubit register.

#include <string>
#include <utility>
#include <vector>

#include "eigenprep/numerics.hpp"

namespace eigenprep {

struct PauliTerm {
  std::string ops;  // one of I,X,Y,Z per qubit, leftmost = qubit 0
  double coeff = 0.0;
};

Matrix pauli_matrix(char op);                           // 2x2 I,X,Y,Z
Matrix pauli_string_matrix(const std::string& ops);     // dense kron chain
// Accumulate coeff * (Pauli string) onto h without forming kron products.
void add_pauli_term(Matrix& h, const std::string& ops, double coeff);
Matrix from_pauli_terms(int n_qubits, const std::vector<PauliTerm>& terms);

// c_I I + c_X X + c_Y Y + c_Z Z.
Matrix single_qubit(double c_i, double c_x, double c_y, double c_z);

// J * sum_<j,k> (X_j X_k + Y_j Y_k + Z_j Z_k) + h * sum_j Z_j on an L-site
// chain; periodic adds the (L-1, 0) bond. Dense-only: L > 14 is rejected.
Matrix heisenberg_chain(int length, double coupling, double field, bool periodic);

// Two-interacting-spins benchmark pair: start = X(1) + X(2); target =
// -X X + Y Y + 0.5 Z Z + Z(1) + Z(2), whose ground state is
// proportional to (sqrt(2)-1)|00> + |11> at energy 0.5 - 2 sqrt(2).
struct TwoSpinPair {
  Matrix h0;
  Matrix hT;
};
TwoSpinPair two_spin_pair();

// Dense random Hermitian on n qubits: strict upper entries have re/im
// uniform on [-1, 1], diagonal real uniform on [-1, 1], drawn row-major,
// then A + A^dag (diagonal doubles).
Matrix random_hermitian(int n_qubits, RngStream& rng);

// f * h0 + (1 - f) * hT.
Matrix interpolate(const Matrix& h0, const Matrix& hT, double f);

// One-parameter operator family H(phi) = base + phi * linear, used by the
// derivative-scan driver.
struct LinearFamily {
  Matrix base;
  Matrix linear;
};
Matrix family_at(const LinearFamily& family, double phi);

// sum_j X_j (transverse mixer; unique ground state |-...->).
Matrix x_mixer(int n_qubits);

}  // namespace eigenprep
