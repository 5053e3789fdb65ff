#pragma once

// Dense linear-algebra kernels, deterministic RNG streams, and small fitting
// routines shared by every higher-level module. Matrices are column-major
// Eigen containers; all Hermitian diagonalization goes through
// eig_hermitian() so invariants (ascending order, orthonormality, residual
// bound) hold everywhere.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace eigenprep {

using cx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Central tolerance record; every module reads these instead of scattering
// magic numbers.
struct NumericConfig {
  double hermiticity_tol = 1e-12;  // relative max |A - A^dag| entry
  double eig_residual_tol = 1e-10; // ||A V - V diag|| relative to ||A||
  double unitarity_tol = 1e-8;     // ||U^dag U - I|| max entry
  double state_norm_tol = 1e-10;   // state-vector normalization drift
};
const NumericConfig& numeric_config();

// ---------------------------------------------------------------------------
// Counter-based pseudo-random stream (SplitMix64 core, Box-Muller normals).
// Deterministic across platforms for a given seed; child() derives
// independent streams for parallel tasks from the parent seed and a task
// index, so results do not depend on scheduling order.
struct RngStream {
  explicit RngStream(std::uint64_t seed) : seed0_(seed), state_(seed) {}

  std::uint64_t next_u64();
  double uniform();                            // [0, 1)
  double gaussian(double mean, double sigma);  // sigma == 0 returns mean
  RngStream child(std::uint64_t task_index) const;

  std::uint64_t seed() const { return seed0_; }
  static std::string algorithm_id() { return "splitmix64+boxmuller"; }

 private:
  std::uint64_t seed0_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::vector<double> gaussian_sample(RngStream& rng, double mean, double sigma,
                                    std::size_t count);

// ---------------------------------------------------------------------------
// Linear algebra.

Matrix kron(const Matrix& a, const Matrix& b);

struct EigenDecomposition {
  RealVector values;  // ascending
  Matrix vectors;     // orthonormal columns, vectors.col(k) <-> values[k]
};

// Cyclic Jacobi diagonalization of a Hermitian matrix, with a real-symmetric
// fast path. Throws std::invalid_argument (reporting the largest asymmetry)
// if the input is not Hermitian within tolerance; throws std::runtime_error
// if the sweep limit is exceeded. Matrices above an internal size threshold
// on the real-symmetric path use Householder tridiagonalization + implicit
// QL, which satisfies the same postconditions at dense-1024 scale.
EigenDecomposition eig_hermitian(const Matrix& h);

// exp(-i h t) for Hermitian h, via eig_hermitian.
Matrix expm_unitary(const Matrix& h, double t);

// ---------------------------------------------------------------------------
// Fits.

struct QuadraticFit {
  double c0 = 0, c1 = 0, c2 = 0;             // y = c0 + c1 x + c2 x^2
  double c0_err = 0, c1_err = 0, c2_err = 0; // 1-sigma from (X^T X)^-1 s^2
  double rms_residual = 0;
};
QuadraticFit polyfit_quadratic(const std::vector<double>& xs,
                               const std::vector<double>& ys);

struct GaussianPeakFit {
  double center = 0, height = 0, width = 0, background = 0;
  double center_err = 0;
  bool converged = false;
  int iterations = 0;
  double rms_residual = 0;
};
// Levenberg-Marquardt fit of y = b + h exp(-(x-c)^2 / (2 w^2)) with analytic
// Jacobian. Throws std::invalid_argument for flat data or a maximum on the
// grid boundary; non-convergence returns best-so-far with converged = false.
GaussianPeakFit gaussian_peak_fit(const std::vector<double>& xs,
                                  const std::vector<double>& ys);
// Weighted variant; std_errs are per-point 1-sigma uncertainties (floored at
// 1e-4 of the data range so deterministic points keep a finite weight).
GaussianPeakFit gaussian_peak_fit(const std::vector<double>& xs,
                                  const std::vector<double>& ys,
                                  const std::vector<double>& std_errs);

}  // namespace eigenprep
