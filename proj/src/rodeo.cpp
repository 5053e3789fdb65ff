#include "eigenprep/rodeo.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace eigenprep {

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = lo + (hi - lo) * i / (n - 1);
  return xs;
}

int qubits_from_dim(Eigen::Index dim) {
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim)
    throw std::invalid_argument("rodeo: operator dimension is not a power of two");
  return n;
}

void check_scan_args(double sigma, int cycles, int n_sets) {
  if (!(sigma > 0.0)) throw std::invalid_argument("scan: sigma must be positive");
  if (cycles < 1) throw std::invalid_argument("scan: need at least one cycle");
  if (n_sets < 2) throw std::invalid_argument("scan: need at least two time sets");
}

}  // namespace

std::vector<double> rodeo_times(RngStream& rng, double sigma, int cycles) {
  if (!(sigma > 0.0)) throw std::invalid_argument("rodeo_times: sigma must be positive");
  if (cycles < 1) throw std::invalid_argument("rodeo_times: need at least one cycle");
  std::vector<double> ts(cycles);
  for (auto& t : ts) t = rng.gaussian(0.0, sigma);
  return ts;
}

SpectralBasis spectral_basis(const Matrix& h) {
  SpectralBasis basis;
  basis.n_qubits = qubits_from_dim(h.rows());
  basis.ed = eig_hermitian(h);
  return basis;
}

std::vector<SpectralWeight> spectral_weights(const SpectralBasis& basis,
                                             const StateVector& state) {
  const Vector d = basis.ed.vectors.adjoint() * state.amps;
  std::vector<SpectralWeight> ws;
  ws.reserve(static_cast<std::size_t>(d.size()));
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    const double w = std::norm(d[k]);
    if (w > 1e-16) ws.push_back({basis.ed.values[k], w});
  }
  return ws;
}

RodeoOutcome run_rodeo_exact(const StateVector& initial, const SpectralBasis& basis,
                             const RodeoConfig& config) {
  if (initial.dim() != basis.ed.values.size())
    throw std::invalid_argument("run_rodeo_exact: state/operator dimension mismatch");
  if (config.times.empty())
    throw std::invalid_argument("run_rodeo_exact: no cycle times given");
  validate_state(initial);

  Vector d = basis.ed.vectors.adjoint() * initial.amps;
  RodeoOutcome out;
  out.cycle_probabilities.reserve(config.times.size());
  out.success_probability = 1.0;
  for (const double t : config.times) {
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      const double phase = -(basis.ed.values[k] - config.target_energy) * t;
      d[k] *= 0.5 * (1.0 + std::polar(1.0, phase));
    }
    const double p = d.squaredNorm();
    // Below ~1e-28 the surviving amplitudes are pure roundoff noise.
    if (p < 1e-28)
      throw std::runtime_error(
          "run_rodeo_exact: state filtered to nothing (cycle survival ~ 0)");
    out.cycle_probabilities.push_back(p);
    out.success_probability *= p;
    d /= std::sqrt(p);
  }
  out.post_selected_state.n_qubits = basis.n_qubits;
  out.post_selected_state.amps = basis.ed.vectors * d;
  return out;
}

RodeoOutcome run_rodeo_exact(const StateVector& initial, const Matrix& h,
                             const RodeoConfig& config) {
  return run_rodeo_exact(initial, spectral_basis(h), config);
}

SampledRodeoOutcome run_rodeo_sampled(const StateVector& initial, const Matrix& h,
                                      const RodeoConfig& config, int shots,
                                      RngStream& rng) {
  if (shots < 1) throw std::invalid_argument("run_rodeo_sampled: shots must be positive");
  if (config.times.empty())
    throw std::invalid_argument("run_rodeo_sampled: no cycle times given");
  validate_state(initial);
  const SpectralBasis basis = spectral_basis(h);
  if (initial.dim() != basis.ed.values.size())
    throw std::invalid_argument("run_rodeo_sampled: state/operator dimension mismatch");

  // One evolution operator per cycle, built once and reused across shots.
  std::vector<Matrix> evos;
  evos.reserve(config.times.size());
  for (const double t : config.times) {
    Vector phases(basis.ed.values.size());
    for (Eigen::Index k = 0; k < phases.size(); ++k)
      phases[k] = std::polar(1.0, -basis.ed.values[k] * t);
    evos.push_back(basis.ed.vectors * phases.asDiagonal() *
                   basis.ed.vectors.adjoint());
  }

  SampledRodeoOutcome out;
  out.shots = shots;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  // Ancilla-major layout: the extended register is [a0; a1] with the ancilla
  // as qubit 0, so each gate acts block-wise on the two halves.
  Vector a0, a1;
  for (int shot = 0; shot < shots; ++shot) {
    a0 = initial.amps;
    a1 = Vector::Zero(initial.dim());
    bool success = true;
    for (std::size_t c = 0; c < config.times.size(); ++c) {
      const double t = config.times[c];
      // H on the ancilla.
      Vector sum = inv_sqrt2 * (a0 + a1);
      a1 = inv_sqrt2 * (a0 - a1);
      a0.swap(sum);
      // Controlled evolution, then the target-energy phase, on the |1> branch.
      a1 = evos[c] * a1;
      a1 *= std::polar(1.0, config.target_energy * t);
      // H on the ancilla again.
      sum = inv_sqrt2 * (a0 + a1);
      a1 = inv_sqrt2 * (a0 - a1);
      a0.swap(sum);
      // Measure the ancilla; abort the shot on |1>.
      const double p1 = a1.squaredNorm();
      if (rng.uniform() < p1) {
        success = false;
        break;
      }
      a0 /= std::sqrt(std::max(1.0 - p1, 1e-300));
      a1.setZero();
    }
    if (success) {
      ++out.successes;
      if (!out.any_success) {
        out.any_success = true;
        out.post_selected_state.n_qubits = basis.n_qubits;
        out.post_selected_state.amps = a0;
      }
    }
  }
  out.success_fraction = static_cast<double>(out.successes) / shots;
  out.std_error =
      std::sqrt(out.success_fraction * (1.0 - out.success_fraction) / shots);
  return out;
}

double success_probability_formula(const std::vector<SpectralWeight>& weights,
                                   double target_energy,
                                   const std::vector<double>& times) {
  if (times.empty())
    throw std::invalid_argument("success_probability_formula: no cycle times");
  double total = 0.0;
  for (const auto& w : weights) {
    double factor = w.weight;
    for (const double t : times) {
      const double c = std::cos(0.5 * (w.energy - target_energy) * t);
      factor *= c * c;
    }
    total += factor;
  }
  return total;
}

double success_probability_gaussian(const std::vector<SpectralWeight>& weights,
                                    double target_energy, double sigma, int cycles) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("success_probability_gaussian: sigma must be positive");
  if (cycles < 0)
    throw std::invalid_argument("success_probability_gaussian: negative cycle count");
  double total = 0.0;
  for (const auto& w : weights) {
    const double de = w.energy - target_energy;
    const double per_cycle = 0.5 * (1.0 + std::exp(-0.5 * de * de * sigma * sigma));
    total += w.weight * std::pow(per_cycle, cycles);
  }
  return total;
}

double success_probability_asymptotic(double p, double delta_e, double sigma,
                                      int cycles) {
  if (cycles < 0)
    throw std::invalid_argument("success_probability_asymptotic: negative cycle count");
  const double per_cycle =
      0.5 * (1.0 + std::exp(-0.5 * delta_e * delta_e * sigma * sigma));
  return p * std::pow(per_cycle, cycles);
}

ResidualEstimates residual_estimates(double p, int cycles) {
  if (!(p > 0.0) || p > 1.0)
    throw std::invalid_argument("residual_estimates: overlap p must be in (0, 1]");
  if (cycles < 0)
    throw std::invalid_argument("residual_estimates: negative cycle count");
  ResidualEstimates r;
  const double a = std::pow(2.0, -cycles) * (1.0 - p);
  r.arithmetic = std::sqrt(a / (p + a));
  const double g = std::pow(4.0, -cycles) * (1.0 - p);
  r.geometric = std::sqrt(g / (p + g));
  return r;
}

double eigenspace_overlap(const SpectralBasis& basis, double energy, double tol,
                          const StateVector& state) {
  if (state.dim() != basis.ed.values.size())
    throw std::invalid_argument("eigenspace_overlap: dimension mismatch");
  const Vector d = basis.ed.vectors.adjoint() * state.amps;
  double total = 0.0;
  for (Eigen::Index k = 0; k < d.size(); ++k)
    if (std::abs(basis.ed.values[k] - energy) <= tol) total += std::norm(d[k]);
  return total;
}

namespace {

void check_grid(const std::vector<double>& grid) {
  if (grid.size() < 2) throw std::invalid_argument("energy_scan: grid too small");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument("energy_scan: grid must be strictly increasing");
}

ScanResult scan_with_sets(const StateVector& initial, const SpectralBasis& basis,
                          const std::vector<double>& grid,
                          const std::vector<std::vector<double>>& time_sets,
                          double sigma) {
  validate_state(initial);
  const std::vector<SpectralWeight> weights = spectral_weights(basis, initial);
  const int n_sets = static_cast<int>(time_sets.size());

  ScanResult sr;
  sr.energies = grid;
  sr.sigma = sigma;
  sr.cycles = static_cast<int>(time_sets.front().size());
  sr.n_sets = n_sets;
  sr.mean.resize(grid.size());
  sr.std_error.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double sum = 0.0, sum2 = 0.0;
    for (const auto& ts : time_sets) {
      const double p = success_probability_formula(weights, grid[i], ts);
      sum += p;
      sum2 += p * p;
    }
    const double mean = sum / n_sets;
    const double var = std::max(0.0, (sum2 - n_sets * mean * mean) / (n_sets - 1));
    sr.mean[i] = mean;
    sr.std_error[i] = std::sqrt(var / n_sets);
  }
  return sr;
}

}  // namespace

ScanResult energy_scan(const StateVector& initial, const SpectralBasis& basis,
                       const std::vector<double>& grid, double sigma, int cycles,
                       int n_sets, RngStream& rng) {
  check_scan_args(sigma, cycles, n_sets);
  check_grid(grid);
  std::vector<std::vector<double>> time_sets(n_sets);
  for (auto& ts : time_sets) ts = rodeo_times(rng, sigma, cycles);
  return scan_with_sets(initial, basis, grid, time_sets, sigma);
}

ScanResult energy_scan(const StateVector& initial, const Matrix& h,
                       const std::vector<double>& grid, double sigma, int cycles,
                       int n_sets, RngStream& rng) {
  return energy_scan(initial, spectral_basis(h), grid, sigma, cycles, n_sets, rng);
}

ScanResult energy_scan(const StateVector& initial, const SpectralBasis& basis,
                       const std::vector<double>& grid,
                       const std::vector<std::vector<double>>& time_sets) {
  check_grid(grid);
  if (time_sets.size() < 2)
    throw std::invalid_argument("energy_scan: need at least two time sets");
  for (const auto& ts : time_sets)
    if (ts.empty() || ts.size() != time_sets.front().size())
      throw std::invalid_argument("energy_scan: ragged or empty time sets");
  return scan_with_sets(initial, basis, grid, time_sets, 0.0);
}

namespace {

struct Branch {
  PeakEstimate peak;
  bool alive = true;
};

// Fit a Gaussian to the top of the peak at grid index `center_idx`; throws on
// failure. Only the contiguous descent above ~25% of the peak's rise over the
// background enters, and points are weighted by their time-set standard
// errors: near resonance every time set gives the same value, so the nearly
// deterministic top points pin the center against flank wiggles.
PeakEstimate fit_local_peak(const ScanResult& sr, std::size_t center_idx, int pass) {
  const double bg = std::pow(2.0, -sr.cycles);
  const double cutoff = bg + 0.25 * (sr.mean[center_idx] - bg);
  std::size_t lo = center_idx, hi = center_idx;
  while (lo > 0 && sr.mean[lo - 1] >= cutoff && sr.mean[lo - 1] <= sr.mean[lo])
    --lo;
  while (hi + 1 < sr.mean.size() && sr.mean[hi + 1] >= cutoff &&
         sr.mean[hi + 1] <= sr.mean[hi])
    ++hi;
  while (hi - lo + 1 < 9) {  // pad so the fit has enough points
    const bool can_lo = lo > 0, can_hi = hi + 1 < sr.mean.size();
    if (!can_lo && !can_hi) break;
    if (can_lo) --lo;
    if (can_hi) ++hi;
  }
  std::vector<double> xs(sr.energies.begin() + lo, sr.energies.begin() + hi + 1);
  std::vector<double> ys(sr.mean.begin() + lo, sr.mean.begin() + hi + 1);
  std::vector<double> es(sr.std_error.begin() + lo, sr.std_error.begin() + hi + 1);
  const GaussianPeakFit fit = gaussian_peak_fit(xs, ys, es);
  PeakEstimate pe;
  pe.center = fit.center;
  pe.center_err = fit.center_err;
  pe.height = fit.height;
  pe.width = fit.width;
  pe.pass_found = pass;
  return pe;
}

}  // namespace

SequentialScanResult sequential_scan(const StateVector& initial,
                                     const SpectralBasis& basis,
                                     const SequentialScanConfig& config,
                                     RngStream& rng) {
  if (!(config.e_max > config.e_min))
    throw std::invalid_argument("sequential_scan: empty energy range");
  if (config.passes < 1)
    throw std::invalid_argument("sequential_scan: need at least one pass");
  if (!(config.shrink > 1.0))
    throw std::invalid_argument("sequential_scan: shrink factor must exceed 1");
  if (config.points_per_pass < 7)
    throw std::invalid_argument("sequential_scan: need at least 7 points per pass");
  check_scan_args(config.sigma0, config.cycles, config.n_sets);

  const double background = std::pow(2.0, -config.cycles);
  SequentialScanResult result;

  // Broad pass: locate candidate peaks above the background.
  ScanPass pass0;
  pass0.sigma = config.sigma0;
  const ScanResult broad =
      energy_scan(initial, basis, linspace(config.e_min, config.e_max, config.points_per_pass),
                  config.sigma0, config.cycles, config.n_sets, rng);
  pass0.windows.push_back(broad);
  result.pass_log.push_back(pass0);

  std::vector<std::size_t> cand;
  for (std::size_t i = 1; i + 1 < broad.mean.size(); ++i) {
    if (broad.mean[i] > broad.mean[i - 1] && broad.mean[i] >= broad.mean[i + 1] &&
        broad.mean[i] > background + config.significance * broad.std_error[i])
      cand.push_back(i);
  }
  std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
    return broad.mean[a] > broad.mean[b];
  });
  if (cand.size() > static_cast<std::size_t>(config.max_peaks))
    cand.resize(static_cast<std::size_t>(config.max_peaks));

  std::vector<Branch> branches;
  for (const std::size_t idx : cand) {
    try {
      Branch b;
      b.peak = fit_local_peak(broad, idx, 0);
      branches.push_back(b);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "pass 0: candidate near " << broad.energies[idx]
          << " dropped (" << e.what() << ")";
      result.terminated_branches.push_back(msg.str());
    }
  }

  // Refinement passes: shrink the window and narrow the filter around each
  // surviving peak.
  double halfwidth = 0.5 * (config.e_max - config.e_min);
  double sigma = config.sigma0;
  for (int pass = 1; pass < config.passes; ++pass) {
    halfwidth /= config.shrink;
    sigma *= config.shrink;
    ScanPass log;
    log.sigma = sigma;
    for (auto& b : branches) {
      if (!b.alive) continue;
      const double lo = b.peak.center - halfwidth;
      const double hi = b.peak.center + halfwidth;
      const ScanResult sr =
          energy_scan(initial, basis, linspace(lo, hi, config.points_per_pass),
                      sigma, config.cycles, config.n_sets, rng);
      log.windows.push_back(sr);
      const std::size_t arg = static_cast<std::size_t>(
          std::max_element(sr.mean.begin(), sr.mean.end()) - sr.mean.begin());
      std::ostringstream msg;
      if (arg < 2 || arg + 2 >= sr.mean.size()) {
        msg << "pass " << pass << ": peak near " << b.peak.center
            << " drifted to the window edge";
        result.terminated_branches.push_back(msg.str());
        b.alive = false;
        continue;
      }
      if (!(sr.mean[arg] > background + config.significance * sr.std_error[arg])) {
        msg << "pass " << pass << ": peak near " << b.peak.center
            << " fell below the " << background << " background";
        result.terminated_branches.push_back(msg.str());
        b.alive = false;
        continue;
      }
      try {
        b.peak = fit_local_peak(sr, arg, pass);
      } catch (const std::exception& e) {
        msg << "pass " << pass << ": fit near " << b.peak.center << " failed ("
            << e.what() << ")";
        result.terminated_branches.push_back(msg.str());
        b.alive = false;
      }
    }
    result.pass_log.push_back(log);

    // Merge branches that converged onto the same line.
    for (std::size_t i = 0; i < branches.size(); ++i) {
      if (!branches[i].alive) continue;
      for (std::size_t j = i + 1; j < branches.size(); ++j) {
        if (!branches[j].alive) continue;
        const double gap = std::abs(branches[i].peak.center - branches[j].peak.center);
        const double scale =
            std::max({branches[i].peak.width, branches[j].peak.width, 1e-12});
        if (gap < scale) {
          if (branches[j].peak.height > branches[i].peak.height)
            branches[i].peak = branches[j].peak;
          branches[j].alive = false;
        }
      }
    }
  }

  for (const auto& b : branches)
    if (b.alive) result.peaks.push_back(b.peak);
  std::sort(result.peaks.begin(), result.peaks.end(),
            [](const PeakEstimate& a, const PeakEstimate& b) {
              return a.center < b.center;
            });
  if (result.peaks.empty()) {
    std::ostringstream msg;
    msg << "sequential_scan: no significant peak in [" << config.e_min << ", "
        << config.e_max << "]";
    for (const auto& t : result.terminated_branches) msg << "; " << t;
    throw std::runtime_error(msg.str());
  }
  return result;
}

SequentialScanResult sequential_scan(const StateVector& initial, const Matrix& h,
                                     const SequentialScanConfig& config,
                                     RngStream& rng) {
  return sequential_scan(initial, spectral_basis(h), config, rng);
}

DerivativeScanResult hellmann_feynman(const LinearFamily& family, int level,
                                      const std::vector<double>& phi_grid,
                                      const DerivativeScanConfig& config,
                                      RngStream& rng) {
  if (phi_grid.size() < 5)
    throw std::invalid_argument("hellmann_feynman: need at least 5 grid points");
  for (std::size_t i = 1; i < phi_grid.size(); ++i)
    if (!(phi_grid[i] > phi_grid[i - 1]))
      throw std::invalid_argument("hellmann_feynman: phi grid must be increasing");
  const Eigen::Index dim = family.base.rows();
  if (level < 0 || level >= dim)
    throw std::invalid_argument("hellmann_feynman: level out of range");
  if (!(config.window > 0.0))
    throw std::invalid_argument("hellmann_feynman: window must be positive");

  const int n_qubits = qubits_from_dim(dim);
  std::string bits = config.initial_bits;
  if (bits.empty()) bits.assign(static_cast<std::size_t>(n_qubits), '0');
  const StateVector initial = init_basis(n_qubits, bits);

  DerivativeScanResult res;
  res.phis = phi_grid;
  res.energies.resize(phi_grid.size());
  res.energy_errs.assign(phi_grid.size(), 0.0);

  // One batch of time sets shared by every phi: the systematic part of the
  // peak-center estimate is then common mode and cancels in the slope.
  std::vector<std::vector<double>> time_sets;
  if (!config.exact_energies) {
    time_sets.resize(config.n_sets);
    for (auto& ts : time_sets) ts = rodeo_times(rng, config.sigma, config.cycles);
  }

  // Seed the branch from the spectrum at the first grid point, descending.
  {
    const EigenDecomposition ed = eig_hermitian(family_at(family, phi_grid[0]));
    res.energies[0] = ed.values[dim - 1 - level];
  }

  double tracked = res.energies[0];
  for (std::size_t i = 0; i < phi_grid.size(); ++i) {
    double predict = tracked;
    if (i >= 2) {
      const double slope = (res.energies[i - 1] - res.energies[i - 2]) /
                           (phi_grid[i - 1] - phi_grid[i - 2]);
      predict = res.energies[i - 1] + slope * (phi_grid[i] - phi_grid[i - 1]);
    } else if (i == 1) {
      predict = res.energies[0];
    }

    const Matrix h = family_at(family, phi_grid[i]);
    double energy, err = 0.0;
    if (config.exact_energies) {
      const EigenDecomposition ed = eig_hermitian(h);
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < dim; ++k)
        if (std::abs(ed.values[k] - predict) < std::abs(ed.values[best] - predict))
          best = k;
      energy = ed.values[best];
    } else {
      const SpectralBasis basis = spectral_basis(h);
      const ScanResult sr = energy_scan(
          initial, basis,
          linspace(predict - config.window, predict + config.window, config.points),
          time_sets);
      const std::size_t arg = static_cast<std::size_t>(
          std::max_element(sr.mean.begin(), sr.mean.end()) - sr.mean.begin());
      if (arg < 2 || arg + 2 >= sr.mean.size())
        throw std::runtime_error(
            "hellmann_feynman: peak drifted to the scan window edge");
      const PeakEstimate pe = fit_local_peak(sr, arg, 0);
      energy = pe.center;
      err = pe.center_err;
    }
    if (std::abs(energy - predict) > config.window)
      throw std::runtime_error(
          "hellmann_feynman: branch jump exceeds the scan window "
          "(level crossing or lost peak)");
    res.energies[i] = energy;
    res.energy_errs[i] = err;
    tracked = energy;
  }

  res.fit = polyfit_quadratic(res.phis, res.energies);
  return res;
}

}  // namespace eigenprep
