#pragma once

// Rodeo filtering: repeated ancilla-controlled evolution that projects an
// input state toward eigenstates near a target energy E. One cycle with time
// t applies (I + e^{-i(H-E)t})/2 on the ancilla-|0> branch, so a component at
// energy E_k survives with probability cos^2((E_k - E) t / 2) per cycle and
// the N-cycle success probability is
//     P = sum_k |c_k|^2 prod_n cos^2((E_k - E) t_n / 2).
// Cycle times are drawn from a zero-mean Gaussian of spread sigma; averaging
// over draws gives the per-component factor [ (1 + e^{-(E_k-E)^2 sigma^2/2}) / 2 ]^N.

#include <cstdint>
#include <string>
#include <vector>

#include "eigenprep/hamiltonian.hpp"
#include "eigenprep/numerics.hpp"
#include "eigenprep/register.hpp"

namespace eigenprep {

struct RodeoConfig {
  double target_energy = 0.0;
  std::vector<double> times;  // one entry per cycle; negatives are kept
};

// Draw cycle times ~ N(0, sigma).
std::vector<double> rodeo_times(RngStream& rng, double sigma, int cycles);

// Cached eigendecomposition of the objective Hamiltonian, reused across
// cycles, shots, and scan grid points.
struct SpectralBasis {
  EigenDecomposition ed;
  int n_qubits = 0;
};
SpectralBasis spectral_basis(const Matrix& h);

struct RodeoOutcome {
  double success_probability = 0.0;         // product of the per-cycle values
  std::vector<double> cycle_probabilities;  // P(ancilla 0 | previous successes)
  StateVector post_selected_state;          // filtered, renormalized
};

// Exact (state-vector) rodeo run in the spectral basis.
RodeoOutcome run_rodeo_exact(const StateVector& initial, const SpectralBasis& basis,
                             const RodeoConfig& config);
RodeoOutcome run_rodeo_exact(const StateVector& initial, const Matrix& h,
                             const RodeoConfig& config);

struct SampledRodeoOutcome {
  int shots = 0;
  int successes = 0;
  double success_fraction = 0.0;
  double std_error = 0.0;  // binomial
  bool any_success = false;
  StateVector post_selected_state;  // state after an all-|0> shot (if any)
};

// Shot-based rodeo: per shot, run the ancilla circuit (H, controlled
// evolution, ancilla phase E t_n, H, measure) for every cycle, aborting on an
// ancilla |1>. The ancilla is qubit 0 of the extended register.
SampledRodeoOutcome run_rodeo_sampled(const StateVector& initial, const Matrix& h,
                                      const RodeoConfig& config, int shots,
                                      RngStream& rng);

struct SpectralWeight {
  double energy = 0.0;
  double weight = 0.0;  // |c_k|^2
};

// Weights |<E_k|state>|^2 of a state in a basis, dropping components below
// 1e-16.
std::vector<SpectralWeight> spectral_weights(const SpectralBasis& basis,
                                             const StateVector& state);

// sum_k w_k prod_n cos^2((E_k - E) t_n / 2); equals the exact route's
// success probability when the weights come from the initial state.
double success_probability_formula(const std::vector<SpectralWeight>& weights,
                                   double target_energy,
                                   const std::vector<double>& times);

// Gaussian-averaged form: sum_k w_k [ (1 + exp(-(E_k-E)^2 s^2 / 2)) / 2 ]^N.
double success_probability_gaussian(const std::vector<SpectralWeight>& weights,
                                    double target_energy, double sigma, int cycles);

// Single-component asymptotic: p * [ (1 + exp(-dE^2 s^2 / 2)) / 2 ]^N.
double success_probability_asymptotic(double p, double delta_e, double sigma,
                                      int cycles);

// Residual infidelity estimates after N successful cycles for initial overlap
// p: arithmetic 2^-N and geometric 4^-N off-component suppression.
struct ResidualEstimates {
  double arithmetic = 0.0;
  double geometric = 0.0;
};
ResidualEstimates residual_estimates(double p, int cycles);

// Total weight of `state` on the eigenspace spanned by eigenvalues within
// tol of `energy` (degenerate levels are summed).
double eigenspace_overlap(const SpectralBasis& basis, double energy, double tol,
                          const StateVector& state);

// ---------------------------------------------------------------------------
// Energy scans.

struct ScanResult {
  std::vector<double> energies;   // strictly increasing grid
  std::vector<double> mean;       // success probability averaged over t-sets
  std::vector<double> std_error;  // sample std / sqrt(n_sets)
  double sigma = 0.0;
  int cycles = 0;
  int n_sets = 0;
};

// Scan the grid with n_sets Gaussian time draws shared across grid points.
ScanResult energy_scan(const StateVector& initial, const SpectralBasis& basis,
                       const std::vector<double>& grid, double sigma, int cycles,
                       int n_sets, RngStream& rng);
ScanResult energy_scan(const StateVector& initial, const Matrix& h,
                       const std::vector<double>& grid, double sigma, int cycles,
                       int n_sets, RngStream& rng);
// Same scan with caller-supplied time sets (all of equal cycle count).
ScanResult energy_scan(const StateVector& initial, const SpectralBasis& basis,
                       const std::vector<double>& grid,
                       const std::vector<std::vector<double>>& time_sets);

struct PeakEstimate {
  double center = 0.0;
  double center_err = 0.0;
  double height = 0.0;
  double width = 0.0;
  int pass_found = 0;
};

struct ScanPass {
  double sigma = 0.0;
  std::vector<ScanResult> windows;
};

struct SequentialScanConfig {
  double e_min = -1.0;
  double e_max = 1.0;
  int passes = 3;
  double shrink = 3.0;        // window divisor and sigma multiplier per pass
  int points_per_pass = 41;
  int cycles = 3;
  int n_sets = 20;
  double sigma0 = 2.0;        // first-pass time spread
  double significance = 3.0;  // peak must exceed background by this many SE
  int max_peaks = 8;
};

struct SequentialScanResult {
  std::vector<PeakEstimate> peaks;  // ascending in center
  std::vector<std::string> terminated_branches;
  std::vector<ScanPass> pass_log;
};

// Multi-pass scan: a broad first pass locates candidate peaks above the
// 2^-N background; each later pass shrinks the window around every surviving
// peak by `shrink` while multiplying sigma by the same factor, and re-fits.
SequentialScanResult sequential_scan(const StateVector& initial, const Matrix& h,
                                     const SequentialScanConfig& config,
                                     RngStream& rng);
SequentialScanResult sequential_scan(const StateVector& initial,
                                     const SpectralBasis& basis,
                                     const SequentialScanConfig& config,
                                     RngStream& rng);

// ---------------------------------------------------------------------------
// Energy-derivative scan (Hellmann-Feynman estimate): scan the level energy
// of H(phi) = base + phi * linear across phi_grid, fit a quadratic, and read
// the slope dE/dphi = <psi| linear |psi> at phi = 0.

struct DerivativeScanConfig {
  std::string initial_bits;    // starting register state, e.g. "0"
  double window = 0.5;         // scan half-width around the tracked energy
  int points = 41;
  double sigma = 12.0;         // time spread of the scan
  int cycles = 3;
  int n_sets = 20;
  bool exact_energies = false;  // bypass scans, use the eigensolver directly
};

struct DerivativeScanResult {
  std::vector<double> phis;
  std::vector<double> energies;
  std::vector<double> energy_errs;
  QuadraticFit fit;  // fit.c1 is the slope at phi = 0
};

// `level` indexes branches in descending energy order at the first grid
// point (level 0 = highest); branches are then tracked by continuity, and a
// fitted center jumping by more than `window` aborts with an error.
DerivativeScanResult hellmann_feynman(const LinearFamily& family, int level,
                                      const std::vector<double>& phi_grid,
                                      const DerivativeScanConfig& config,
                                      RngStream& rng);

}  // namespace eigenprep
