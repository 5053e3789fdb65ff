#include "eigenprep/hamiltonian.hpp"

#include <cmath>
#include <stdexcept>

namespace eigenprep {

namespace {
constexpr int kMaxDenseQubits = 14;

void validate_ops(const std::string& ops) {
  if (ops.empty())
    throw std::invalid_argument("pauli string must be non-empty");
  for (char c : ops)
    if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z')
      throw std::invalid_argument(std::string("invalid pauli op '") + c + "'");
}
}  // namespace

Matrix pauli_matrix(char op) {
  Matrix m(2, 2);
  switch (op) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << cx(0, 0), cx(0, -1), cx(0, 1), cx(0, 0); break;
    case 'Z': m << 1, 0, 0, -1; break;
    default:
      throw std::invalid_argument(std::string("invalid pauli op '") + op + "'");
  }
  return m;
}

Matrix pauli_string_matrix(const std::string& ops) {
  validate_ops(ops);
  Matrix m = pauli_matrix(ops[0]);
  for (std::size_t q = 1; q < ops.size(); ++q) m = kron(m, pauli_matrix(ops[q]));
  return m;
}

void add_pauli_term(Matrix& h, const std::string& ops, double coeff) {
  validate_ops(ops);
  const int n = static_cast<int>(ops.size());
  const std::size_t dim = std::size_t(1) << n;
  if (h.rows() != static_cast<Eigen::Index>(dim) || h.cols() != h.rows())
    throw std::invalid_argument("add_pauli_term: dimension mismatch");
  std::size_t flip = 0;
  for (int q = 0; q < n; ++q)
    if (ops[q] == 'X' || ops[q] == 'Y') flip |= std::size_t(1) << (n - 1 - q);
  for (std::size_t col = 0; col < dim; ++col) {
    cx phase(coeff, 0.0);
    for (int q = 0; q < n; ++q) {
      const bool bit = (col >> (n - 1 - q)) & 1u;
      switch (ops[q]) {
        case 'Y': phase *= bit ? cx(0, -1) : cx(0, 1); break;
        case 'Z': phase *= bit ? -1.0 : 1.0; break;
        default: break;
      }
    }
    h(static_cast<Eigen::Index>(col ^ flip), static_cast<Eigen::Index>(col)) += phase;
  }
}

Matrix from_pauli_terms(int n_qubits, const std::vector<PauliTerm>& terms) {
  if (n_qubits < 1 || n_qubits > kMaxDenseQubits)
    throw std::invalid_argument("from_pauli_terms: qubit count out of dense range");
  Matrix h = Matrix::Zero(Eigen::Index(1) << n_qubits, Eigen::Index(1) << n_qubits);
  for (const auto& t : terms) {
    if (static_cast<int>(t.ops.size()) != n_qubits)
      throw std::invalid_argument("from_pauli_terms: string length mismatch");
    add_pauli_term(h, t.ops, t.coeff);
  }
  return h;
}

Matrix single_qubit(double c_i, double c_x, double c_y, double c_z) {
  Matrix h = Matrix::Zero(2, 2);
  h += c_i * pauli_matrix('I');
  h += c_x * pauli_matrix('X');
  h += c_y * pauli_matrix('Y');
  h += c_z * pauli_matrix('Z');
  return h;
}

Matrix heisenberg_chain(int length, double coupling, double field, bool periodic) {
  if (length < 2)
    throw std::invalid_argument("heisenberg_chain: need at least 2 sites");
  if (length > kMaxDenseQubits)
    throw std::invalid_argument(
        "heisenberg_chain: length exceeds dense-matrix limit of 14 sites");
  const Eigen::Index dim = Eigen::Index(1) << length;
  Matrix h = Matrix::Zero(dim, dim);
  const int n_bonds = periodic ? length : length - 1;
  for (int b = 0; b < n_bonds; ++b) {
    const int j = b;
    const int k = (b + 1) % length;
    for (char op : {'X', 'Y', 'Z'}) {
      std::string ops(length, 'I');
      ops[j] = op;
      ops[k] = op;
      add_pauli_term(h, ops, coupling);
    }
  }
  for (int j = 0; j < length; ++j) {
    std::string ops(length, 'I');
    ops[j] = 'Z';
    add_pauli_term(h, ops, field);
  }
  return h;
}

TwoSpinPair two_spin_pair() {
  TwoSpinPair pair;
  pair.h0 = from_pauli_terms(2, {{"XI", 1.0}, {"IX", 1.0}});
  pair.hT = from_pauli_terms(
      2, {{"XX", -1.0}, {"YY", 1.0}, {"ZZ", 0.5}, {"ZI", 1.0}, {"IZ", 1.0}});
  return pair;
}

Matrix random_hermitian(int n_qubits, RngStream& rng) {
  if (n_qubits < 1 || n_qubits > kMaxDenseQubits)
    throw std::invalid_argument("random_hermitian: qubit count out of dense range");
  const Eigen::Index dim = Eigen::Index(1) << n_qubits;
  Matrix a = Matrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = i; j < dim; ++j) {
      if (i == j) {
        a(i, j) = 2.0 * rng.uniform() - 1.0;
      } else {
        const double re = 2.0 * rng.uniform() - 1.0;
        const double im = 2.0 * rng.uniform() - 1.0;
        a(i, j) = cx(re, im);
      }
    }
  return a + a.adjoint().eval();
}

Matrix interpolate(const Matrix& h0, const Matrix& hT, double f) {
  if (h0.rows() != hT.rows() || h0.cols() != hT.cols())
    throw std::invalid_argument("interpolate: dimension mismatch");
  return f * h0 + (1.0 - f) * hT;
}

Matrix family_at(const LinearFamily& family, double phi) {
  if (family.base.rows() != family.linear.rows())
    throw std::invalid_argument("family_at: dimension mismatch");
  return family.base + phi * family.linear;
}

Matrix x_mixer(int n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxDenseQubits)
    throw std::invalid_argument("x_mixer: qubit count out of dense range");
  const Eigen::Index dim = Eigen::Index(1) << n_qubits;
  Matrix h = Matrix::Zero(dim, dim);
  for (int j = 0; j < n_qubits; ++j) {
    std::string ops(n_qubits, 'I');
    ops[j] = 'X';
    add_pauli_term(h, ops, 1.0);
  }
  return h;
}

}  // namespace eigenprep
