#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "eigenprep/hamiltonian.hpp"
#include "eigenprep/register.hpp"
#include "oracles.hpp"

using namespace eigenprep;

namespace {
Matrix random_unitary(int dim_qubits, RngStream& rng) {
  return expm_unitary(oracle::random_hermitian(1 << dim_qubits, rng), 0.8);
}
}  // namespace

TEST_CASE("init_basis uses qubit 0 as most significant bit") {
  const StateVector s = init_basis(3, "010");
  REQUIRE(s.dim() == 8);
  CHECK(std::abs(s.amps[2] - 1.0) < 1e-15);
  CHECK(std::abs(s.amps.norm() - 1.0) < 1e-15);
  CHECK_THROWS_AS(init_basis(3, "01"), std::invalid_argument);
  CHECK_THROWS_AS(init_basis(2, "02"), std::invalid_argument);

  StateVector x = init_basis(2, "00");
  apply_unitary(x, x_gate(), {0});
  CHECK(std::abs(x.amps[2] - 1.0) < 1e-15);  // |10> lives at index 2
}

TEST_CASE("apply_unitary matches dense kron application") {
  RngStream rng(31);
  const Matrix u = random_unitary(2, rng);
  const Matrix id2 = Matrix::Identity(2, 2);

  Vector psi0 = Vector::Zero(8);
  for (int i = 0; i < 8; ++i) psi0[i] = cx(rng.uniform() - 0.5, rng.uniform() - 0.5);
  psi0 /= psi0.norm();

  // Targets {0,1}: u acts on the two leftmost qubits.
  StateVector s = from_amplitudes(3, psi0);
  apply_unitary(s, u, {0, 1});
  Vector ref = kron(u, id2) * psi0;
  CHECK((s.amps - ref).cwiseAbs().maxCoeff() < 1e-12);

  // Targets {1,2}.
  s = from_amplitudes(3, psi0);
  apply_unitary(s, u, {1, 2});
  ref = kron(id2, u) * psi0;
  CHECK((s.amps - ref).cwiseAbs().maxCoeff() < 1e-12);

  // Target-list order fixes bit significance: kron(A,B) on {a,b} equals
  // A on a and B on b, in either list order when factors are swapped.
  const Matrix a = random_unitary(1, rng);
  const Matrix b = random_unitary(1, rng);
  StateVector s1 = from_amplitudes(3, psi0);
  apply_unitary(s1, kron(a, b), {2, 0});
  StateVector s2 = from_amplitudes(3, psi0);
  apply_unitary(s2, a, {2});
  apply_unitary(s2, b, {0});
  CHECK((s1.amps - s2.amps).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(apply_unitary(s1, u, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(apply_unitary(s1, u, {0, 3}), std::invalid_argument);
  Matrix not_unitary = Matrix::Identity(4, 4) * 2.0;
  CHECK_THROWS_AS(apply_unitary(s1, not_unitary, {0, 1}), std::invalid_argument);
}

TEST_CASE("apply_controlled_unitary acts on the control=1 subspace") {
  RngStream rng(47);
  Vector psi0 = Vector::Zero(8);
  for (int i = 0; i < 8; ++i) psi0[i] = cx(rng.uniform() - 0.5, rng.uniform() - 0.5);
  psi0 /= psi0.norm();

  // CNOT(control 0 -> target 2) as dense reference.
  Matrix cnot = Matrix::Zero(8, 8);
  for (std::size_t i = 0; i < 8; ++i) {
    const std::size_t j = (i & 4u) ? (i ^ 1u) : i;
    cnot(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
  }
  StateVector s = from_amplitudes(3, psi0);
  apply_controlled_unitary(s, x_gate(), 0, {2});
  const Vector ref = cnot * psi0;
  CHECK((s.amps - ref).cwiseAbs().maxCoeff() < 1e-12);

  // Control |0> leaves the state untouched.
  StateVector z = init_basis(2, "01");
  apply_controlled_unitary(z, x_gate(), 0, {1});
  CHECK(std::abs(z.amps[1] - 1.0) < 1e-15);

  CHECK_THROWS_AS(apply_controlled_unitary(s, x_gate(), 2, {2}), std::invalid_argument);
}

TEST_CASE("measure_qubit: determinism on basis states, statistics on |+>") {
  RngStream rng(3);
  const StateVector one = init_basis(2, "10");
  auto [rec, post] = measure_qubit(one, 0, rng);
  CHECK(rec.outcome == 1);
  CHECK(rec.probability == doctest::Approx(1.0));
  CHECK(std::abs(post.amps[2] - 1.0) < 1e-15);

  auto [rec2, post2] = measure_qubit(one, 1, rng);
  CHECK(rec2.outcome == 0);

  StateVector plus = init_basis(1, "0");
  apply_unitary(plus, h_gate(), {0});
  int ones = 0;
  const int trials = 4000;
  for (int i = 0; i < trials; ++i) {
    auto [r, p] = measure_qubit(plus, 0, rng);
    ones += r.outcome;
    CHECK(std::abs(p.amps.norm() - 1.0) < 1e-12);
    CHECK(r.probability == doctest::Approx(0.5));
  }
  CHECK(std::abs(ones / double(trials) - 0.5) < 0.03);
}

TEST_CASE("expectation_pauli agrees with dense matrix route") {
  RngStream rng(8);
  Vector psi = Vector::Zero(8);
  for (int i = 0; i < 8; ++i) psi[i] = cx(rng.uniform() - 0.5, rng.uniform() - 0.5);
  psi /= psi.norm();
  const StateVector s = from_amplitudes(3, psi);
  for (const std::string& ops : {"XYZ", "ZIZ", "IIY", "XXX", "III", "ZZZ"}) {
    const Matrix p = pauli_string_matrix(ops);
    const double ref = (psi.adjoint() * p * psi)(0, 0).real();
    CHECK(expectation_pauli(s, ops) == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("sampled_expectation_pauli: basis rotations carry the right signs") {
  RngStream rng(12);
  // (|0> + i|1>)/sqrt(2) has <Y> = +1: every shot must land on +1.
  Vector yplus(2);
  yplus << cx(1.0 / std::sqrt(2.0), 0.0), cx(0.0, 1.0 / std::sqrt(2.0));
  const StateVector sy = from_amplitudes(1, yplus);
  auto [ey, se_y] = sampled_expectation_pauli(sy, "Y", 500, rng);
  CHECK(ey == doctest::Approx(1.0));
  CHECK(se_y == doctest::Approx(0.0));

  StateVector plus = init_basis(1, "0");
  apply_unitary(plus, h_gate(), {0});
  auto [ex, se_x] = sampled_expectation_pauli(plus, "X", 500, rng);
  CHECK(ex == doctest::Approx(1.0));

  // Random two-qubit state: sampled estimate within 5 standard errors.
  Vector psi = Vector::Zero(4);
  for (int i = 0; i < 4; ++i) psi[i] = cx(rng.uniform() - 0.5, rng.uniform() - 0.5);
  const StateVector s = from_amplitudes(2, psi);
  for (const std::string& ops : {"XY", "ZX", "YZ"}) {
    const double exact = expectation_pauli(s, ops);
    auto [est, se] = sampled_expectation_pauli(s, ops, 20000, rng);
    CHECK(se > 0.0);
    CHECK(std::abs(est - exact) < 5.0 * se + 1e-12);
  }
}

TEST_CASE("density_from_shots and principal_state") {
  RngStream rng(21);
  Vector a = Vector::Zero(4), b = Vector::Zero(4);
  a << 1, 0, 0, 0;
  b << 0, 1, 0, 0;
  const StateVector sa = from_amplitudes(2, a);
  const StateVector sb = from_amplitudes(2, b);

  const Matrix pure = density_from_shots({sa});
  CHECK(std::abs(pure.trace().real() - 1.0) < 1e-14);
  CHECK(std::abs(pure(0, 0).real() - 1.0) < 1e-14);

  // 9:1 mixture.
  std::vector<StateVector> shots;
  for (int i = 0; i < 9; ++i) shots.push_back(sa);
  shots.push_back(sb);
  const Matrix rho = density_from_shots(shots);
  auto [principal, weight] = principal_state(rho);
  CHECK(weight == doctest::Approx(0.9));
  CHECK(std::abs(std::abs(principal.amps.dot(a)) - 1.0) < 1e-12);

  // Phase convention: largest amplitude is real positive.
  Vector c(2);
  c << cx(0.0, 0.8), cx(0.6, 0.0);
  const Matrix rho_c = density_from_shots({from_amplitudes(1, c)});
  auto [pc, wc] = principal_state(rho_c);
  CHECK(wc == doctest::Approx(1.0));
  CHECK(pc.amps[0].imag() == doctest::Approx(0.0));
  CHECK(pc.amps[0].real() > 0.0);
}
