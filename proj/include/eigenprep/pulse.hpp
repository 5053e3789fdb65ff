#pragma once

// Pulse-level emulation of a two-transmon device: three-level transmons with
// a fixed anharmonicity and exchange coupling, driven by piecewise-constant
// I/Q channels. Control pulses realizing a target unitary are found by
// gradient descent on a trace-fidelity objective with an amplitude penalty,
// and open-system dynamics run through a fixed-step master-equation solver
// with per-transmon T1/T2 damping terms.

#include <array>
#include <limits>
#include <utility>
#include <vector>

#include "eigenprep/adiabatic.hpp"
#include "eigenprep/numerics.hpp"
#include "eigenprep/register.hpp"

namespace eigenprep {

// omega[rad/ns] = 2 pi f[MHz] 1e-3.
double mhz_to_angular(double mhz);
double angular_to_mhz(double omega);

struct DeviceModel {
  int levels = 3;              // per transmon
  double anharmonicity = 0.0;  // alpha, rad/ns
  double coupling = 0.0;       // g, rad/ns
  // Relaxation / dephasing times per transmon, ns; infinity = closed system.
  std::array<double, 2> t1{std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity()};
  std::array<double, 2> t2{std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity()};
  int dim() const { return levels * levels; }
};
// alpha and g in MHz (stored as angular frequencies), T1/T2 in ns.
DeviceModel make_device(double alpha_mhz, double g_mhz,
                        std::array<double, 2> t1_ns, std::array<double, 2> t2_ns,
                        int levels = 3);

// Truncated annihilation operator, <n-1|a|n> = sqrt(n).
Matrix lowering_op(int levels);

// H_d = -alpha sum_i (a_i^dag a_i)^2 - g (a_1^dag a_2 + a_2^dag a_1).
Matrix drift_hamiltonian(const DeviceModel& device);

// H_c = sum_i [ e_I^i (a_i^dag + a_i) - i e_Q^i (a_i^dag - a_i) ],
// amplitudes in rad/ns.
Matrix control_hamiltonian(const DeviceModel& device, double ei1, double eq1,
                           double ei2, double eq2);

struct PulseSequence {
  double duration = 0.0;     // tau, ns
  double sample_rate = 8.0;  // samples per ns
  // Per-sample amplitudes in rad/ns: eI1, eQ1, eI2, eQ2.
  std::array<std::vector<double>, 4> channels;
  int samples() const { return static_cast<int>(channels[0].size()); }
  double dt() const { return 1.0 / sample_rate; }
};
PulseSequence zero_pulse(double duration, double sample_rate = 8.0);
// Channel lengths must equal round(duration * rate) >= 1, amplitudes finite.
void validate_pulse(const PulseSequence& pulse);
// Same waveform at `factor` times the sample rate (each sample repeated).
PulseSequence upsample_pulse(const PulseSequence& pulse, int factor);

// Ordered product of per-sample propagators e^{-i (H_d + H_c(t_j)) dt}.
Matrix propagate_pulse(const DeviceModel& device, const PulseSequence& pulse);

// |tr(target^dag actual)| / dim; 1 iff equal up to a global phase.
double gate_fidelity(const Matrix& target, const Matrix& actual);

// (1/eps_cut) sqrt[ (1/tau) sum_channels integral eps^2 dt ].
double rms_amplitude(const PulseSequence& pulse, double eps_cut);

struct GrapeConfig {
  double eps_cut = mhz_to_angular(30.0);  // penalty scale
  int harshness = 3;                      // exponent n in exp(rms^{2n})
  double chi = 1e-3;                      // penalty weight
  int max_iterations = 400;
  double gradient_tol = 1e-10;        // stop when the gradient norm drops below
  double target_infidelity = 0.0;     // stop early when 1 - F falls below (> 0)
  double sample_rate = 8.0;           // samples/ns of the optimized pulse
  double init_amplitude = 0.0;        // rad/ns; > 0 draws a uniform random start
  int memory = 10;                    // quasi-Newton history length
  double initial_step = 1.0;          // first line-search trial, scaled by 1/|g|
};

// Phi = 1 - F^2/2 + chi (e^{rms^{2n}} - 1)/(e - 1); 0.5 exactly at a perfect
// gate with a silent pulse, and the penalty contributes chi at rms = 1.
double grape_objective(const DeviceModel& device, const PulseSequence& pulse,
                       const Matrix& target, const GrapeConfig& config);

// Objective and its analytic gradient with respect to every channel sample,
// channel-major: grad[c * samples + j] for channels eI1, eQ1, eI2, eQ2.
std::pair<double, std::vector<double>> grape_objective_gradient(
    const DeviceModel& device, const PulseSequence& pulse, const Matrix& target,
    const GrapeConfig& config);

struct GrapeResult {
  PulseSequence pulse;
  double objective = 0.0;
  double fidelity = 0.0;
  double rms = 0.0;
  int iterations = 0;
  bool converged = false;  // gradient / infidelity threshold met before the cap
  std::vector<double> objective_trace;
};
// Quasi-Newton minimization of the objective over all channel samples with
// analytic gradients. Starts from `warm_start` when given (resampled lengths
// must match), else a zero or small-random pulse per the config.
GrapeResult grape_optimize(const DeviceModel& device, const Matrix& target,
                           double duration, const GrapeConfig& config,
                           RngStream& rng,
                           const PulseSequence* warm_start = nullptr);

// Basis indices of the computational subspace {0,1} x {0,1}.
std::vector<int> computational_indices(const DeviceModel& device);

// Block embedding: u4 on the computational subspace, identity on every state
// with a level-2 (or higher) occupation.
Matrix embed_two_qubit_unitary(const Matrix& u4, const DeviceModel& device);

struct LindbladTrajectory {
  std::vector<double> times;
  std::vector<Matrix> states;  // density matrix after each step (rho0 first)
  std::vector<double> traces;
};
// Fixed-step RK4 integration of
//   drho/dt = -i[H(t), rho] + sum_i (1/T1_i)(a_i rho a_i^dag - {a_i a_i^dag, rho}/2)
//                           + sum_i (1/T2_i)(a_i^dag a_i rho a_i a_i^dag
//                                            - {a_i a_i^dag a_i^dag a_i, rho}/2),
// with rho symmetrized after every step. The T1 channel written this way is
// not trace-preserving (amplitude loss shows up as trace loss); observables
// are therefore reported on the renormalized state. dt must divide the pulse
// sample length. When every damping term is trace-preserving, a trace drift
// beyond 1e-4 aborts with advice to shrink dt.
LindbladTrajectory lindblad_evolve(const DeviceModel& device, const Matrix& rho0,
                                   const PulseSequence& pulse, double dt);

struct GateEmulation {
  double gate_fidelity = 0.0;  // optimized pulse vs embedded target
  double objective = 0.0;
  double rms = 0.0;
  int iterations = 0;
  PulseSequence pulse;
};
struct PulseEmulationResult {
  std::vector<GateEmulation> gates;
  std::vector<double> times;       // t_k, k = 0..n
  std::vector<double> fidelities;  // <phi_k| rho~ |phi_k> on the renormalized
                                   // computational subspace
  std::vector<double> energies;    // tr(rho~ hT), same subspace
  std::vector<double> traces;      // tr rho of the full 9-dim state
  std::vector<double> leakages;    // population fraction outside the subspace
};
// Optimize a pulse for every short-time propagator of the schedule (each gate
// warm-started from the previous one), then propagate the embedded initial
// state through the pulse sequence with the device's T1/T2 and report
// per-step diagnostics against the tracked instantaneous eigenstate.
PulseEmulationResult emulate_adiabatic_with_pulses(
    const DeviceModel& device, const Matrix& h0, const Matrix& hT,
    const Schedule& schedule, const StateVector& initial, double tau_per_gate,
    const GrapeConfig& config, RngStream& rng);

}  // namespace eigenprep
