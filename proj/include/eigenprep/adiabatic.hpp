#pragma once

// Discretized adiabatic state preparation: H(t) = f(t) h0 + (1 - f(t)) hT
// with f(t) = cos^2(pi t / 2T), evolved by exact short-time propagators
// U(t_k) = exp(-i H(t_k) dt) on the grid t_k = k T / n.

#include <optional>
#include <vector>

#include "eigenprep/hamiltonian.hpp"
#include "eigenprep/numerics.hpp"
#include "eigenprep/register.hpp"

namespace eigenprep {

// cos^2(pi t / 2T); 1 at t = 0, 0 at t = T. Throws outside [0, T].
double interpolation_f(double t, double total_time);

struct Schedule {
  Schedule(double total_time_, int n_steps_);
  double total_time;
  int n_steps;
  double dt() const { return total_time / n_steps; }
  double time_at(int k) const { return total_time * k / n_steps; }
};

// U(t_k) for k = 1..n (index k-1 in the returned vector).
std::vector<Matrix> short_time_propagators(const Matrix& h0, const Matrix& hT,
                                           const Schedule& schedule);

struct Trajectory {
  std::vector<double> times;       // n+1 entries, t_0 = 0
  std::vector<Vector> states;      // evolved state at each t_k
  std::vector<Vector> eigenstates; // tracked instantaneous eigenstate phi(t_k)
  std::vector<double> fidelities;  // |<phi(t_k)|psi(t_k)>| vs tracked eigenstate
  std::vector<double> energies;    // <psi| hT |psi>
};

// Evolve `initial` through the schedule. The instantaneous eigenstate
// phi(t_k) starts at the ground state of h0 and is tracked through level
// crossings by maximum overlap with the previous step's eigenvector.
Trajectory run_adiabatic(const Matrix& h0, const Matrix& hT, const Schedule& schedule,
                         const StateVector& initial);

// Fidelity readout through the inverse-circuit trick: apply U(t_k)^dag ...
// U(t_1)^dag to the probe, then undo the ground-state preparation (H on all
// qubits, then X on all qubits) and report the |0...0> amplitude magnitude.
// The probe defaults to the tracked eigenstate phi(t_k), making the result
// equal to Trajectory.fidelities[k]; pass the evolved state to get the
// hardware reading (identically 1 in noiseless simulation). When the ground
// state of h0 is not the |-> product that H/X preparation reaches, the
// readout projects onto the actual h0 ground state instead.
double fidelity_via_uncompute(const Matrix& h0, const Matrix& hT,
                              const Schedule& schedule, int k,
                              const std::optional<StateVector>& probe = std::nullopt);

// Z-Y Euler decomposition of exp(-i h t) for h = cI I + cX X + cY Y + cZ Z:
// exp(-i h t) = e^{i xi} V(gamma, beta, delta) with
// V = [[cos g/2, -e^{i delta} sin g/2], [e^{i beta} sin g/2,
//       e^{i(delta+beta)} cos g/2]].
// In a controlled evolution the xi phase becomes a phase gate on the control.
struct EulerAngles {
  double gamma = 0, beta = 0, delta = 0, xi = 0;
};
EulerAngles controlled_evolution_angles(double c_i, double c_x, double c_y,
                                        double c_z, double t);
Matrix euler_v_matrix(const EulerAngles& angles);              // V(gamma, beta, delta)
Matrix euler_reconstruct(const EulerAngles& angles);           // e^{i xi} V

// Two-qubit readout confusion matrix kron(M_q1, M_q2) (qubit 1 = left/most
// significant factor) from per-qubit error rates p10 = P(read 1 | true 0) and
// p01 = P(read 0 | true 1). Columns sum to one; p01 + p10 >= 1 on either
// qubit makes the matrix singular and is rejected.
struct ConfusionMatrix {
  RealMatrix m;  // 4x4, column-stochastic
};
ConfusionMatrix confusion_build(double p01_q1, double p10_q1, double p01_q2,
                                double p10_q2);

struct MitigationResult {
  RealVector probabilities;  // clipped to [0,1] and renormalized
  RealVector raw;            // direct inverse-matrix solution, pre-clip
  bool clipped = false;
};
MitigationResult confusion_mitigate(const std::vector<double>& counts,
                                    const ConfusionMatrix& cm);

}  // namespace eigenprep
