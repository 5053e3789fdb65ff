#pragma once

// Variational eigenstate preparation: a QAOA ansatz (alternating objective /
// mixer evolutions) optimized against one of three costs — plain energy,
// one minus exact ground overlap, or one minus the Gaussian-averaged rodeo
// success probability (the variational-rodeo cost). Multi-start BFGS with
// finite-difference gradients drives the optimization.

#include <functional>
#include <vector>

#include "eigenprep/numerics.hpp"
#include "eigenprep/register.hpp"
#include "eigenprep/rodeo.hpp"

namespace eigenprep {

enum class CostKind { energy, one_minus_overlap, one_minus_rodeo_success };

struct CostConfig {
  CostKind kind = CostKind::energy;
  double target_energy = 0.0;  // rodeo kind: filter energy E
  double sigma = 1.0;          // rodeo kind: time spread
  int cycles = 1;              // rodeo kind: N
};

struct QaoaAnsatz {
  int n_qubits = 0;
  int depth = 0;        // p; the parameter vector is (gamma_1..p, beta_1..p)
  SpectralBasis obj;    // objective Hamiltonian eigenbasis
  SpectralBasis mix;    // mixer eigenbasis
  StateVector initial;  // mixer ground state
};
QaoaAnsatz make_qaoa(const Matrix& h_obj, const Matrix& h_mix, int depth);

// |psi> = prod_{j=p..1} e^{-i h_mix beta_j} e^{-i h_obj gamma_j} |initial>,
// i.e. the gamma_1 evolution is applied first.
StateVector qaoa_state(const QaoaAnsatz& ansatz, const std::vector<double>& params);

// Cost on explicit spectral weights; `ground_energy` identifies the ground
// component(s) for the overlap kind.
double cost_from_weights(const std::vector<SpectralWeight>& weights,
                         const CostConfig& config, double ground_energy);
double evaluate_cost(const StateVector& state, const SpectralBasis& obj,
                     const CostConfig& config);

// Steepest-descent direction of the cost over the weight simplex, one entry
// per weight: -(g_n - sum_m w_m g_m) for the raw gradient g. Sums to zero
// against the weights within 1e-12.
std::vector<double> steepest_direction(const std::vector<SpectralWeight>& weights,
                                       const CostConfig& config,
                                       double ground_energy);

struct StateDiagnostics {
  double energy = 0.0;
  double ground_overlap = 0.0;
  double rodeo_success = 0.0;
};
// Energy, summed ground-eigenspace overlap, and Gaussian-averaged rodeo
// success (using rodeo_config's E / sigma / cycles).
StateDiagnostics diagnose_state(const StateVector& state, const SpectralBasis& obj,
                                const CostConfig& rodeo_config);

// ---------------------------------------------------------------------------
// Optimizer.

struct OptimizationOptions {
  int max_iterations = 100;
  double fd_step = 1e-5;       // central-difference gradient step
  double gradient_tol = 1e-8;  // stop when the gradient norm drops below
  double armijo_slope = 1e-4;
  double backtrack = 0.5;
  int max_line_steps = 40;
};

enum class OptimizerStatus { converged, max_iterations, line_search_failed };

struct OptimizationTrace {
  // Entry 0 is the start point; one entry per accepted step after that.
  std::vector<std::vector<double>> params;
  std::vector<double> costs;
  std::vector<StateDiagnostics> diagnostics;  // present when a probe is given
  OptimizerStatus status = OptimizerStatus::max_iterations;
  int iterations = 0;
  double final_cost = 0.0;
  std::vector<double> final_params;
};

using Objective = std::function<double(const std::vector<double>&)>;
using DiagnosticsProbe = std::function<StateDiagnostics(const std::vector<double>&)>;

// Quasi-Newton minimization (inverse-BFGS update, Armijo backtracking,
// central-difference gradients). Parameters are unconstrained; periodic
// reporting is the caller's concern (wrap_2pi).
OptimizationTrace bfgs_minimize(const Objective& f, const std::vector<double>& x0,
                                const OptimizationOptions& options,
                                const DiagnosticsProbe& probe = nullptr);

std::vector<double> wrap_2pi(const std::vector<double>& params);

struct MultistartResult {
  OptimizationTrace best;
  int best_index = 0;  // ties under 1e-12 go to the lower index
  std::vector<OptimizationTrace> all;
};
// Starts drawn uniformly on [0, 2pi)^{2p}; diag_config supplies the rodeo
// parameters used for the per-iteration diagnostics.
MultistartResult multistart(const QaoaAnsatz& ansatz, const CostConfig& config,
                            const CostConfig& diag_config, int n_starts,
                            const OptimizationOptions& options, RngStream& rng);

// ---------------------------------------------------------------------------
// Studies.

struct SweepPoint {
  double target_energy = 0.0;
  double best_cost = 0.0;
  std::vector<double> overlaps;  // |<E_k|psi>|^2 per eigenstate, ascending E_k
  int dominant_level = 0;        // argmax of overlaps
  int nearest_level = 0;         // eigenvalue closest to target_energy
  StateDiagnostics diag;
  std::vector<double> best_params;
};
// For each grid energy, optimize the rodeo cost centered there and record
// which eigenstate dominates the output. Requires a nondegenerate spectrum.
std::vector<SweepPoint> excited_sweep(const QaoaAnsatz& ansatz,
                                      const std::vector<double>& e_grid,
                                      double sigma, int cycles, int n_starts,
                                      const OptimizationOptions& options,
                                      RngStream& rng);

struct TwoStageResult {
  OptimizationTrace trace;  // stage-1 (energy) iterates then stage-2 iterates
  int switch_index = 0;     // first stage-2 entry in the trace arrays
  int best_index = 0;
  std::vector<double> all_final_costs;
};
// Energy minimization for stage1_iters, then the stage-2 cost restarted from
// the reached parameters; best restart by final cost. Diagnostics use the
// stage-2 rodeo parameters throughout so the switch is visible in one series.
TwoStageResult two_stage(const QaoaAnsatz& ansatz, const CostConfig& stage2,
                         int stage1_iters, int stage2_iters, int n_starts,
                         const OptimizationOptions& options, RngStream& rng);

struct LandscapeGrid {
  std::vector<double> gammas;       // axis 0 (rows)
  std::vector<double> betas;        // axis 1 (columns)
  std::vector<RealMatrix> costs;    // one matrix per requested config
};
// Dense cost maps for a depth-1 ansatz on an inclusive resolution^2 lattice
// over [0, gamma_max] x [0, beta_max].
LandscapeGrid landscape_grid(const QaoaAnsatz& ansatz,
                             const std::vector<CostConfig>& configs,
                             double gamma_max, double beta_max, int resolution);

}  // namespace eigenprep
