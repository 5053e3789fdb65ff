#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "eigenprep/hamiltonian.hpp"
#include "eigenprep/register.hpp"
#include "eigenprep/rodeo.hpp"
#include "oracles.hpp"

using namespace eigenprep;

namespace {

// Reference single-qubit benchmark: base operator, perturbation, and the
// closed-form level data derived from the Bloch decomposition
// H = c_I I + c . sigma  =>  E = c_I +/- |c|, slope = d_I +/- d.c/|c|.
constexpr double kC0 = -0.08496, kCX = -0.89134, kCY = 0.26536, kCZ = 0.57205;
constexpr double kD0 = -0.84537, kDX = 0.00673, kDY = -0.29354, kDZ = 0.18477;

double bloch_r() { return std::sqrt(kCX * kCX + kCY * kCY + kCZ * kCZ); }
double level_energy(int level) {  // level 0 = upper branch
  return kC0 + (level == 0 ? bloch_r() : -bloch_r());
}
double level_slope(int level) {
  const double dot = (kDX * kCX + kDY * kCY + kDZ * kCZ) / bloch_r();
  return kD0 + (level == 0 ? dot : -dot);
}
double level_weight_from_zero(int level) {  // |<psi_level|0>|^2
  const double nz = kCZ / bloch_r();
  return level == 0 ? 0.5 * (1.0 + nz) : 0.5 * (1.0 - nz);
}

StateVector random_state(int n_qubits, RngStream& rng) {
  Vector amps(Eigen::Index{1} << n_qubits);
  for (Eigen::Index i = 0; i < amps.size(); ++i)
    amps[i] = cx(rng.gaussian(0.0, 1.0), rng.gaussian(0.0, 1.0));
  return from_amplitudes(n_qubits, amps);
}

// Ancilla circuit built from the register layer only; used as an independent
// route against run_rodeo_sampled's block implementation.
struct CircuitShots {
  std::vector<int> outcomes;  // 1 = all-cycle success
  StateVector last_success;
};
CircuitShots register_layer_rodeo(const StateVector& initial, const Matrix& h,
                                  const RodeoConfig& config, int shots,
                                  RngStream& rng) {
  const int n = initial.n_qubits;
  const Eigen::Index dim = initial.dim();
  std::vector<Matrix> evos;
  for (const double t : config.times) evos.push_back(expm_unitary(h, t));
  std::vector<int> sys_targets(n);
  for (int q = 0; q < n; ++q) sys_targets[q] = q + 1;

  CircuitShots out;
  for (int shot = 0; shot < shots; ++shot) {
    StateVector reg;
    reg.n_qubits = n + 1;
    reg.amps = Vector::Zero(2 * dim);
    reg.amps.head(dim) = initial.amps;  // ancilla (qubit 0) starts in |0>
    bool ok = true;
    for (std::size_t c = 0; c < config.times.size(); ++c) {
      apply_unitary(reg, h_gate(), {0});
      apply_controlled_unitary(reg, evos[c], 0, sys_targets);
      apply_unitary(reg, phase_gate(config.target_energy * config.times[c]), {0});
      apply_unitary(reg, h_gate(), {0});
      auto [record, post] = measure_qubit(reg, 0, rng);
      if (record.outcome == 1) {
        ok = false;
        break;
      }
      reg = post;
    }
    out.outcomes.push_back(ok ? 1 : 0);
    if (ok) {
      out.last_success.n_qubits = n;
      out.last_success.amps = reg.amps.head(dim);
    }
  }
  return out;
}

double state_fidelity(const StateVector& a, const StateVector& b) {
  return std::abs(a.amps.dot(b.amps));
}

}  // namespace

TEST_CASE("rodeo_times draws Gaussian cycle times") {
  RngStream rng(77);
  const auto ts = rodeo_times(rng, 3.0, 4000);
  REQUIRE(ts.size() == 4000);
  double mean = 0.0, var = 0.0;
  for (double t : ts) mean += t;
  mean /= ts.size();
  for (double t : ts) var += (t - mean) * (t - mean);
  var /= (ts.size() - 1);
  CHECK(std::abs(mean) < 0.2);
  CHECK(std::abs(std::sqrt(var) - 3.0) < 0.15);
  CHECK(std::any_of(ts.begin(), ts.end(), [](double t) { return t < 0.0; }));

  RngStream rng2(77);
  CHECK(rodeo_times(rng2, 3.0, 4000) == ts);
  CHECK_THROWS_AS(rodeo_times(rng, 0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(rodeo_times(rng, 1.0, 0), std::invalid_argument);
}

TEST_CASE("exact rodeo run matches the hand-evaluated two-level form") {
  const Matrix h = single_qubit(kC0, kCX, kCY, kCZ);
  const StateVector psi0 = init_basis(1, "0");
  RodeoConfig config;
  config.target_energy = 0.3;
  config.times = {1.7, -0.4, 2.9};

  // Independent evaluation from the closed-form level data.
  double expected = 0.0;
  for (int level = 0; level < 2; ++level) {
    double f = level_weight_from_zero(level);
    for (double t : config.times) {
      const double c = std::cos(0.5 * (level_energy(level) - 0.3) * t);
      f *= c * c;
    }
    expected += f;
  }

  const RodeoOutcome out = run_rodeo_exact(psi0, h, config);
  CHECK(out.success_probability == doctest::Approx(expected).epsilon(1e-12));
  REQUIRE(out.cycle_probabilities.size() == 3);
  double prod = 1.0;
  for (double p : out.cycle_probabilities) {
    CHECK(p > 0.0);
    CHECK(p <= 1.0 + 1e-12);
    prod *= p;
  }
  CHECK(std::abs(prod - out.success_probability) < 1e-12);
  CHECK(out.post_selected_state.amps.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("targeting an eigenvalue filters onto that eigenstate") {
  RngStream rng(5);
  const Matrix h = single_qubit(kC0, kCX, kCY, kCZ);
  const SpectralBasis basis = spectral_basis(h);
  RodeoConfig config;
  config.target_energy = level_energy(1);  // lower branch
  config.times = rodeo_times(rng, 4.0, 12);

  const RodeoOutcome out = run_rodeo_exact(init_basis(1, "0"), basis, config);
  const double w = eigenspace_overlap(basis, level_energy(1), 1e-9,
                                      out.post_selected_state);
  CHECK(w > 1.0 - 5e-3);
  // The resonant component passes every cycle with probability one, so the
  // success probability approaches its weight from above.
  CHECK(out.success_probability >= level_weight_from_zero(1) - 1e-12);
  CHECK(out.success_probability < level_weight_from_zero(1) + 0.01);
}

TEST_CASE("exact route equals the spectral success formula") {
  RngStream rng(901);
  for (int rep = 0; rep < 12; ++rep) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 4);  // 1..4 qubits
    const Matrix h = random_hermitian(n, rng);
    const StateVector psi = random_state(n, rng);
    RodeoConfig config;
    config.target_energy = 3.0 * (rng.uniform() - 0.5);
    config.times = rodeo_times(rng, 1.5, 1 + static_cast<int>(rng.next_u64() % 6));

    const SpectralBasis basis = spectral_basis(h);
    std::vector<SpectralWeight> weights;
    const Vector d = basis.ed.vectors.adjoint() * psi.amps;
    for (Eigen::Index k = 0; k < d.size(); ++k)
      weights.push_back({basis.ed.values[k], std::norm(d[k])});

    const double formula =
        success_probability_formula(weights, config.target_energy, config.times);
    const RodeoOutcome out = run_rodeo_exact(psi, basis, config);
    CHECK(std::abs(out.success_probability - formula) < 1e-10);
  }
}

TEST_CASE("exact rodeo guards") {
  const Matrix h = single_qubit(0, 0, 0, 1);  // Z, eigenvalues -1 and 1
  RodeoConfig config;
  CHECK_THROWS_AS(run_rodeo_exact(init_basis(1, "0"), h, config),
                  std::invalid_argument);
  config.times = {1.0};
  CHECK_THROWS_AS(run_rodeo_exact(init_basis(2, "00"), h, config),
                  std::invalid_argument);
  // |1> filtered against the +1 eigenspace with a pi kick has amplitude
  // cos(pi/2) = 0: the state is annihilated.
  config.target_energy = 1.0;
  const double pi = std::acos(-1.0);
  config.times = {pi / 2.0};
  CHECK_THROWS_WITH_AS(run_rodeo_exact(init_basis(1, "1"), h, config),
                       doctest::Contains("filtered to nothing"),
                       std::runtime_error);
}

TEST_CASE("sampled route agrees with the exact success probability") {
  RngStream rng(4242);
  const Matrix h = random_hermitian(2, rng);
  const StateVector psi = random_state(2, rng);
  RodeoConfig config;
  config.target_energy = 0.4;
  config.times = rodeo_times(rng, 1.0, 3);

  const RodeoOutcome exact = run_rodeo_exact(psi, h, config);
  RngStream shot_rng(99);
  const SampledRodeoOutcome sampled =
      run_rodeo_sampled(psi, h, config, 4000, shot_rng);

  CHECK(sampled.shots == 4000);
  CHECK(sampled.successes > 0);
  CHECK(sampled.std_error > 0.0);
  CHECK(std::abs(sampled.success_fraction - exact.success_probability) <
        5.0 * sampled.std_error);
  // Post-selection is a projection: every successful shot lands on the same
  // state the exact route produces.
  REQUIRE(sampled.any_success);
  CHECK(state_fidelity(sampled.post_selected_state, exact.post_selected_state) ==
        doctest::Approx(1.0).epsilon(1e-9));

  RngStream shot_rng2(99);
  const SampledRodeoOutcome again = run_rodeo_sampled(psi, h, config, 4000, shot_rng2);
  CHECK(again.successes == sampled.successes);
}

TEST_CASE("sampled route reproduces the register-layer ancilla circuit") {
  RngStream rng(11);
  const Matrix h = random_hermitian(2, rng);
  const StateVector psi = random_state(2, rng);
  RodeoConfig config;
  config.target_energy = -0.7;
  config.times = rodeo_times(rng, 1.3, 3);

  RngStream rng_a(314);
  const SampledRodeoOutcome block = run_rodeo_sampled(psi, h, config, 60, rng_a);
  RngStream rng_b(314);
  const CircuitShots gates = register_layer_rodeo(psi, h, config, 60, rng_b);

  int gate_successes = 0;
  for (int o : gates.outcomes) gate_successes += o;
  CHECK(gate_successes == block.successes);
  REQUIRE(block.any_success);
  REQUIRE(gate_successes > 0);
  CHECK(state_fidelity(block.post_selected_state, gates.last_success) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Gaussian-averaged per-cycle factor matches Monte Carlo") {
  for (const double de : {1.0, 2.0}) {
    for (const double sigma : {1.0, 3.0}) {
      RngStream rng(static_cast<std::uint64_t>(1000 * de + sigma));
      double mc = 0.0;
      const int draws = 20000;
      for (int i = 0; i < draws; ++i) {
        const double t = rng.gaussian(0.0, sigma);
        const double c = std::cos(0.5 * de * t);
        mc += c * c;
      }
      mc /= draws;
      const double analytic = 0.5 * (1.0 + std::exp(-0.5 * de * de * sigma * sigma));
      CHECK(std::abs(mc - analytic) < 0.01);
    }
  }
}

TEST_CASE("asymptotic form is the single-component Gaussian average") {
  const std::vector<SpectralWeight> w = {{2.5, 0.37}};
  for (int cycles : {0, 1, 4, 9}) {
    const double a = success_probability_asymptotic(0.37, 2.5 - 1.1, 2.0, cycles);
    const double g = success_probability_gaussian(w, 1.1, 2.0, cycles);
    CHECK(a == doctest::Approx(g).epsilon(1e-14));
  }
  // Multi-component averaging from |0> on the reference qubit.
  const std::vector<SpectralWeight> both = {
      {level_energy(0), level_weight_from_zero(0)},
      {level_energy(1), level_weight_from_zero(1)}};
  const double p = success_probability_gaussian(both, level_energy(0), 3.0, 5);
  const double on = success_probability_asymptotic(level_weight_from_zero(0), 0.0, 3.0, 5);
  CHECK(p > on);  // the off-resonant component only adds
  CHECK(p - on < level_weight_from_zero(1) * std::pow(0.51, 5) + 1e-6);
}

TEST_CASE("residual estimates") {
  // With zero cycles nothing is filtered: residual = sqrt(1 - p).
  const ResidualEstimates r0 = residual_estimates(0.4, 0);
  CHECK(r0.arithmetic == doctest::Approx(std::sqrt(0.6)).epsilon(1e-12));
  CHECK(r0.geometric == doctest::Approx(std::sqrt(0.6)).epsilon(1e-12));

  const ResidualEstimates r5 = residual_estimates(0.4, 5);
  CHECK(r5.arithmetic ==
        doctest::Approx(std::sqrt((0.6 / 32.0) / (0.4 + 0.6 / 32.0))).epsilon(1e-12));
  CHECK(r5.geometric <
        r5.arithmetic);  // geometric suppression is quadratically faster
  const ResidualEstimates r6 = residual_estimates(0.4, 6);
  CHECK(r6.arithmetic < r5.arithmetic);
  CHECK(residual_estimates(1.0, 3).arithmetic == doctest::Approx(0.0));
  CHECK_THROWS_AS(residual_estimates(0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(residual_estimates(0.5, -1), std::invalid_argument);
}

TEST_CASE("eigenspace overlap sums degenerate components") {
  // L = 2 periodic Heisenberg at zero field: singlet at -6, triplet at +2.
  const Matrix h = heisenberg_chain(2, 1.0, 0.0, true);
  const SpectralBasis basis = spectral_basis(h);
  const StateVector psi = init_basis(2, "01");  // (singlet + triplet)/sqrt(2)
  CHECK(eigenspace_overlap(basis, -6.0, 1e-8, psi) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(eigenspace_overlap(basis, 2.0, 1e-8, psi) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(eigenspace_overlap(basis, 0.0, 1e-8, psi) == doctest::Approx(0.0));
}

TEST_CASE("energy scan resolves both levels over a 2^-N background") {
  RngStream rng(2024);
  const Matrix h = single_qubit(kC0, kCX, kCY, kCZ);
  const SpectralBasis basis = spectral_basis(h);
  const StateVector psi = init_basis(1, "0");

  std::vector<double> grid;
  for (int i = 0; i <= 160; ++i) grid.push_back(-4.0 + 8.0 * i / 160.0);
  const int cycles = 3, n_sets = 60;
  const ScanResult sr = energy_scan(psi, basis, grid, 5.0, cycles, n_sets, rng);

  REQUIRE(sr.mean.size() == grid.size());
  REQUIRE(sr.std_error.size() == grid.size());
  CHECK(sr.sigma == 5.0);
  CHECK(sr.cycles == cycles);
  CHECK(sr.n_sets == n_sets);

  // Peak locations: the exact success probability is maximal at the levels.
  for (int level = 0; level < 2; ++level) {
    const double e = level_energy(level);
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (std::abs(grid[i] - e) < 0.6 && sr.mean[i] > sr.mean[best]) best = i;
    }
    CHECK(std::abs(grid[best] - e) < 0.11);  // within ~two grid steps
    CHECK(sr.mean[best] > level_weight_from_zero(level) * 0.8);
  }

  // Background: far off resonance the mean sits at 2^-N within 3 SE.
  const double bg = std::pow(2.0, -cycles);
  int checked = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(grid[i] - level_energy(0)) > 1.5 &&
        std::abs(grid[i] - level_energy(1)) > 1.5) {
      if (++checked % 20 == 1)
        CHECK(std::abs(sr.mean[i] - bg) < 3.0 * sr.std_error[i] + 0.02);
    }
  }
  CHECK(checked > 20);

  RngStream rng2(2024);
  const ScanResult again = energy_scan(psi, basis, grid, 5.0, cycles, n_sets, rng2);
  CHECK(again.mean == sr.mean);

  CHECK_THROWS_AS(energy_scan(psi, basis, {0.0}, 5.0, 3, 10, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(energy_scan(psi, basis, {1.0, 0.5}, 5.0, 3, 10, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(energy_scan(psi, basis, {0.0, 1.0}, 5.0, 3, 1, rng),
                  std::invalid_argument);
}

TEST_CASE("sequential scan pins both levels of the reference qubit") {
  RngStream rng(31);
  const Matrix h = single_qubit(kC0, kCX, kCY, kCZ);
  SequentialScanConfig config;
  config.e_min = -2.0;
  config.e_max = 2.0;
  config.passes = 4;
  config.shrink = 2.45;
  config.points_per_pass = 41;
  config.cycles = 3;
  // The weak peak rides on the strong component's frozen time-draw wiggles;
  // its center error scales like 1/(sigma * sqrt(n_sets)).
  config.n_sets = 150;
  config.sigma0 = 2.0;

  const SequentialScanResult res =
      sequential_scan(init_basis(1, "0"), h, config, rng);
  REQUIRE(res.peaks.size() == 2);
  CHECK(std::abs(res.peaks[0].center - level_energy(1)) < 4e-3);
  CHECK(std::abs(res.peaks[1].center - level_energy(0)) < 4e-3);
  CHECK(res.peaks[0].center_err > 0.0);
  CHECK(res.peaks[1].height > res.peaks[0].height);  // weights 0.76 vs 0.24
  CHECK(res.pass_log.size() == 4);
  CHECK(res.pass_log[3].sigma == doctest::Approx(2.0 * std::pow(2.45, 3)));

  RngStream rng2(31);
  const SequentialScanResult again =
      sequential_scan(init_basis(1, "0"), h, config, rng2);
  CHECK(again.peaks[0].center == res.peaks[0].center);
  CHECK(again.peaks[1].center == res.peaks[1].center);
}

TEST_CASE("sequential scan reports an empty window as an error") {
  RngStream rng(32);
  const Matrix h = single_qubit(kC0, kCX, kCY, kCZ);
  SequentialScanConfig config;
  config.e_min = 5.0;  // no level anywhere near
  config.e_max = 9.0;
  config.n_sets = 20;
  CHECK_THROWS_WITH_AS(sequential_scan(init_basis(1, "0"), h, config, rng),
                       doctest::Contains("no significant peak"),
                       std::runtime_error);

  config.e_max = 4.0;
  config.e_min = 4.5;
  CHECK_THROWS_AS(sequential_scan(init_basis(1, "0"), h, config, rng),
                  std::invalid_argument);
  config.e_min = -2.0;
  config.e_max = 2.0;
  config.shrink = 1.0;
  CHECK_THROWS_AS(sequential_scan(init_basis(1, "0"), h, config, rng),
                  std::invalid_argument);
}

TEST_CASE("derivative scan recovers the perturbation slopes") {
  LinearFamily family;
  family.base = single_qubit(kC0, kCX, kCY, kCZ);
  family.linear = single_qubit(kD0, kDX, kDY, kDZ);

  std::vector<double> phis;
  for (int i = -4; i <= 4; ++i) phis.push_back(0.05 * i);

  DerivativeScanConfig config;
  config.initial_bits = "0";

  SUBCASE("exact energies") {
    config.exact_energies = true;
    RngStream rng(7);
    for (int level = 0; level < 2; ++level) {
      const DerivativeScanResult res = hellmann_feynman(family, level, phis, config, rng);
      CHECK(std::abs(res.fit.c1 - level_slope(level)) < 1e-4);
      CHECK(std::abs(res.fit.c0 - level_energy(level)) < 1e-4);
      REQUIRE(res.energies.size() == phis.size());
    }
  }

  SUBCASE("scanned energies") {
    config.window = 0.5;
    config.sigma = 12.0;
    config.cycles = 3;
    config.n_sets = 20;
    RngStream rng(8);
    for (int level = 0; level < 2; ++level) {
      const DerivativeScanResult res = hellmann_feynman(family, level, phis, config, rng);
      CHECK(std::abs(res.fit.c1 - level_slope(level)) <
            0.01 * std::abs(level_slope(level)));
      CHECK(res.fit.c1_err > 0.0);
      for (double e : res.energy_errs) CHECK(e >= 0.0);
    }
  }

  SUBCASE("guards") {
    RngStream rng(9);
    CHECK_THROWS_AS(hellmann_feynman(family, 2, phis, config, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(hellmann_feynman(family, 0, {0.0, 0.1}, config, rng),
                    std::invalid_argument);
    DerivativeScanConfig tiny = config;
    tiny.exact_energies = true;
    tiny.window = 1e-4;  // energy moves further than this between grid points
    CHECK_THROWS_WITH_AS(hellmann_feynman(family, 0, phis, tiny, rng),
                         doctest::Contains("branch jump"), std::runtime_error);
  }
}
