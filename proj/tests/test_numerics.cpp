#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "eigenprep/numerics.hpp"
#include "oracles.hpp"

using namespace eigenprep;

namespace {
void check_decomposition(const Matrix& h, const EigenDecomposition& ed) {
  const double scale = std::max(h.cwiseAbs().maxCoeff(), 1.0);
  // Ascending order.
  for (Eigen::Index k = 1; k < ed.values.size(); ++k)
    CHECK(ed.values[k] >= ed.values[k - 1]);
  // Orthonormality.
  const Matrix g = ed.vectors.adjoint() * ed.vectors;
  CHECK((g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() < 1e-10);
  // Residual.
  const Matrix r = h * ed.vectors - ed.vectors * ed.values.asDiagonal().toDenseMatrix().cast<cx>();
  CHECK(r.cwiseAbs().maxCoeff() < 1e-10 * scale * h.rows());
  // Eigenvalues against an independent solver.
  Eigen::SelfAdjointEigenSolver<Matrix> ref(h);
  for (Eigen::Index k = 0; k < ed.values.size(); ++k)
    CHECK(std::abs(ed.values[k] - ref.eigenvalues()[k]) < 1e-9 * scale);
}
}  // namespace

TEST_CASE("rng stream is deterministic and well distributed") {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream r(7);
  double sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 0.01);
  CHECK(std::abs(var - 1.0 / 12.0) < 0.01);
}

TEST_CASE("gaussian sampling: moments, sigma=0, reproducibility") {
  RngStream r(11);
  const auto xs = gaussian_sample(r, 1.5, 2.0, 200000);
  double m = 0.0;
  for (double x : xs) m += x;
  m /= xs.size();
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= xs.size();
  CHECK(std::abs(m - 1.5) < 0.02);
  CHECK(std::abs(v - 4.0) < 0.08);

  RngStream z(3);
  const auto zs = gaussian_sample(z, -2.25, 0.0, 5);
  for (double x : zs) CHECK(x == -2.25);

  RngStream r1(11), r2(11);
  CHECK(gaussian_sample(r1, 0, 1, 50) == gaussian_sample(r2, 0, 1, 50));
}

TEST_CASE("child streams are independent and deterministic") {
  RngStream parent(99);
  RngStream c0 = parent.child(0);
  RngStream c1 = parent.child(1);
  RngStream c0b = RngStream(99).child(0);
  CHECK(c0.next_u64() == c0b.next_u64());
  CHECK(RngStream(99).child(0).next_u64() != c1.next_u64());
  CHECK_FALSE(RngStream::algorithm_id().empty());
}

TEST_CASE("kron matches direct indexing and composes dimensions") {
  Matrix a(2, 2), b(2, 2);
  a << cx(1, 0), cx(2, 1), cx(0, -1), cx(3, 0);
  b << cx(0, 0), cx(1, 0), cx(1, 0), cx(0, 0);
  const Matrix k = kron(a, b);
  REQUIRE(k.rows() == 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(std::abs(k(i, j) - a(i / 2, j / 2) * b(i % 2, j % 2)) < 1e-15);

  RngStream rng(5);
  const Matrix m1 = oracle::random_hermitian(2, rng);
  const Matrix m2 = oracle::random_hermitian(3, rng);
  CHECK(kron(m1, m2).rows() == 6);
  // (A kron B)(x kron y) = Ax kron By
  Vector x = Vector::Random(2), y = Vector::Random(3);
  Vector lhs = kron(m1, m2) * kron(Matrix(x), Matrix(y)).col(0);
  Vector rhs = kron(Matrix(m1 * x), Matrix(m2 * y)).col(0);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("eig_hermitian: complex Hermitian across sizes") {
  RngStream rng(123);
  for (int n : {1, 2, 3, 5, 8, 16, 33, 64}) {
    const Matrix h = oracle::random_hermitian(n, rng);
    check_decomposition(h, eig_hermitian(h));
  }
}

TEST_CASE("eig_hermitian: real symmetric fast path and degenerate spectra") {
  RngStream rng(321);
  for (int n : {2, 7, 32, 100}) {
    const Matrix h = oracle::random_real_symmetric(n, rng);
    check_decomposition(h, eig_hermitian(h));
  }
  // Degenerate: identity and a projector.
  const Matrix id = Matrix::Identity(8, 8);
  auto ed = eig_hermitian(id);
  for (Eigen::Index k = 0; k < 8; ++k) CHECK(std::abs(ed.values[k] - 1.0) < 1e-12);
  check_decomposition(id, ed);

  Matrix proj = Matrix::Zero(4, 4);
  proj(0, 0) = proj(1, 1) = 1.0;
  check_decomposition(proj, eig_hermitian(proj));

  const Matrix zero = Matrix::Zero(5, 5);
  check_decomposition(zero, eig_hermitian(zero));
}

TEST_CASE("eig_hermitian: large real-symmetric route") {
  RngStream rng(77);
  const Matrix h = oracle::random_real_symmetric(300, rng);
  check_decomposition(h, eig_hermitian(h));
}

TEST_CASE("eig_hermitian rejects non-Hermitian input with diagnostic") {
  Matrix bad(2, 2);
  bad << cx(1, 0), cx(2, 0), cx(3, 0), cx(4, 0);
  CHECK_THROWS_WITH_AS(eig_hermitian(bad),
                       doctest::Contains("not Hermitian"), std::invalid_argument);
  Matrix rect(2, 3);
  rect.setZero();
  CHECK_THROWS_AS(eig_hermitian(rect), std::invalid_argument);
}

TEST_CASE("expm_unitary agrees with Taylor oracle and is unitary") {
  RngStream rng(9);
  for (int n : {1, 2, 4, 9}) {
    const Matrix h = oracle::random_hermitian(n, rng);
    for (double t : {0.0, 0.37, 2.0, -1.5}) {
      const Matrix u = expm_unitary(h, t);
      const Matrix ref = oracle::taylor_expm(h, t);
      CHECK((u - ref).cwiseAbs().maxCoeff() < 1e-11 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
      CHECK((u.adjoint() * u - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  const Matrix h1 = oracle::random_hermitian(3, rng);
  CHECK((expm_unitary(h1, 0.0) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("polyfit_quadratic recovers exact and noisy coefficients") {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 20; ++i) {
    const double x = -1.0 + 0.1 * i;
    xs.push_back(x);
    ys.push_back(2.0 - 3.0 * x + 0.5 * x * x);
  }
  auto fit = polyfit_quadratic(xs, ys);
  CHECK(std::abs(fit.c0 - 2.0) < 1e-12);
  CHECK(std::abs(fit.c1 + 3.0) < 1e-12);
  CHECK(std::abs(fit.c2 - 0.5) < 1e-12);
  CHECK(fit.rms_residual < 1e-12);

  RngStream rng(17);
  std::vector<double> noisy = ys;
  for (auto& y : noisy) y += rng.gaussian(0.0, 0.01);
  fit = polyfit_quadratic(xs, noisy);
  CHECK(std::abs(fit.c1 + 3.0) < 5.0 * fit.c1_err);
  CHECK(fit.c1_err > 0.0);

  CHECK_THROWS_AS(polyfit_quadratic({1.0, 2.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(polyfit_quadratic({1, 1, 1, 1}, {1, 2, 3, 4}), std::invalid_argument);
}

TEST_CASE("gaussian_peak_fit recovers parameters and flags bad input") {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 100; ++i) {
    const double x = -5.0 + 0.1 * i;
    xs.push_back(x);
    ys.push_back(0.3 + 2.0 * std::exp(-(x - 0.7) * (x - 0.7) / (2.0 * 0.8 * 0.8)));
  }
  auto fit = gaussian_peak_fit(xs, ys);
  CHECK(fit.converged);
  CHECK(std::abs(fit.center - 0.7) < 1e-7);
  CHECK(std::abs(fit.height - 2.0) < 1e-6);
  CHECK(std::abs(fit.width - 0.8) < 1e-6);
  CHECK(std::abs(fit.background - 0.3) < 1e-6);

  RngStream rng(23);
  std::vector<double> noisy = ys;
  for (auto& y : noisy) y += rng.gaussian(0.0, 0.02);
  fit = gaussian_peak_fit(xs, noisy);
  CHECK(std::abs(fit.center - 0.7) < 5.0 * std::max(fit.center_err, 1e-3));
  CHECK(fit.center_err > 0.0);

  // Flat data.
  std::vector<double> flat(xs.size(), 1.0);
  CHECK_THROWS_AS(gaussian_peak_fit(xs, flat), std::invalid_argument);
  // Monotone data peaks on the boundary.
  std::vector<double> ramp(xs);
  CHECK_THROWS_AS(gaussian_peak_fit(xs, ramp), std::invalid_argument);
}
