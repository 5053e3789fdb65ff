#include "eigenprep/vra.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace eigenprep {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Tolerance for "same eigenvalue" when summing a degenerate eigenspace.
double ground_tol(double ground_energy) {
  return 1e-9 * std::max(1.0, std::abs(ground_energy));
}

// state <- exp(-i h theta) state via the cached eigenbasis of h.
void apply_evolution(const SpectralBasis& basis, double theta, Vector& amps) {
  Vector d = basis.ed.vectors.adjoint() * amps;
  for (Eigen::Index k = 0; k < d.size(); ++k)
    d[k] *= std::polar(1.0, -basis.ed.values[k] * theta);
  amps = basis.ed.vectors * d;
}

void check_cost_config(const CostConfig& config) {
  if (config.kind != CostKind::one_minus_rodeo_success) return;
  if (!(config.sigma > 0.0))
    throw std::invalid_argument("cost: sigma must be positive");
  if (config.cycles < 1)
    throw std::invalid_argument("cost: need at least one cycle");
}

// Raw gradient dC/dw_n of the cost at fixed energies.
std::vector<double> weight_gradient(const std::vector<SpectralWeight>& weights,
                                    const CostConfig& config,
                                    double ground_energy) {
  std::vector<double> g(weights.size());
  const double gtol = ground_tol(ground_energy);
  for (std::size_t n = 0; n < weights.size(); ++n) {
    const double de = weights[n].energy - config.target_energy;
    switch (config.kind) {
      case CostKind::energy:
        g[n] = weights[n].energy;
        break;
      case CostKind::one_minus_overlap:
        g[n] = std::abs(weights[n].energy - ground_energy) <= gtol ? -1.0 : 0.0;
        break;
      case CostKind::one_minus_rodeo_success:
        g[n] = -std::pow(
            0.5 + 0.5 * std::exp(-0.5 * de * de * config.sigma * config.sigma),
            config.cycles);
        break;
    }
  }
  return g;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

std::vector<double> random_start(RngStream& rng, int n_params) {
  std::vector<double> x(n_params);
  for (auto& v : x) v = kTwoPi * rng.uniform();
  return x;
}

// Objective / diagnostics closures for an ansatz-driven optimization.
Objective ansatz_objective(const QaoaAnsatz& ansatz, const CostConfig& config) {
  return [&ansatz, config](const std::vector<double>& x) {
    return evaluate_cost(qaoa_state(ansatz, x), ansatz.obj, config);
  };
}

DiagnosticsProbe ansatz_probe(const QaoaAnsatz& ansatz,
                              const CostConfig& diag_config) {
  return [&ansatz, diag_config](const std::vector<double>& x) {
    return diagnose_state(qaoa_state(ansatz, x), ansatz.obj, diag_config);
  };
}

}  // namespace

QaoaAnsatz make_qaoa(const Matrix& h_obj, const Matrix& h_mix, int depth) {
  if (depth < 1) throw std::invalid_argument("make_qaoa: depth must be positive");
  if (h_obj.rows() != h_mix.rows())
    throw std::invalid_argument("make_qaoa: objective and mixer dimensions differ");
  QaoaAnsatz ansatz;
  ansatz.obj = spectral_basis(h_obj);
  ansatz.mix = spectral_basis(h_mix);
  ansatz.depth = depth;
  ansatz.n_qubits = ansatz.obj.n_qubits;

  // Mixer ground state with a deterministic global phase: the first
  // amplitude within a factor two of the largest is made real and positive
  // (a plain argmax is unstable when magnitudes tie up to roundoff).
  Vector ground = ansatz.mix.ed.vectors.col(0);
  const double amax = ground.cwiseAbs().maxCoeff();
  Eigen::Index ref = 0;
  while (std::abs(ground[ref]) < 0.5 * amax) ++ref;
  ground *= std::polar(1.0, -std::arg(ground[ref]));
  ansatz.initial = StateVector{ansatz.n_qubits, ground};
  return ansatz;
}

StateVector qaoa_state(const QaoaAnsatz& ansatz, const std::vector<double>& params) {
  const std::size_t p = static_cast<std::size_t>(ansatz.depth);
  if (params.size() != 2 * p)
    throw std::invalid_argument(
        "qaoa_state: expected 2*depth parameters (gammas then betas)");
  StateVector state = ansatz.initial;
  for (std::size_t j = 0; j < p; ++j) {
    apply_evolution(ansatz.obj, params[j], state.amps);
    apply_evolution(ansatz.mix, params[p + j], state.amps);
  }
  return state;
}

double cost_from_weights(const std::vector<SpectralWeight>& weights,
                         const CostConfig& config, double ground_energy) {
  check_cost_config(config);
  switch (config.kind) {
    case CostKind::energy: {
      double e = 0.0;
      for (const auto& w : weights) e += w.weight * w.energy;
      return e;
    }
    case CostKind::one_minus_overlap: {
      const double gtol = ground_tol(ground_energy);
      double p0 = 0.0;
      for (const auto& w : weights)
        if (std::abs(w.energy - ground_energy) <= gtol) p0 += w.weight;
      return 1.0 - p0;
    }
    case CostKind::one_minus_rodeo_success:
      return 1.0 - success_probability_gaussian(weights, config.target_energy,
                                                config.sigma, config.cycles);
  }
  throw std::logic_error("cost_from_weights: unknown cost kind");
}

double evaluate_cost(const StateVector& state, const SpectralBasis& obj,
                     const CostConfig& config) {
  return cost_from_weights(spectral_weights(obj, state), config,
                           obj.ed.values[0]);
}

std::vector<double> steepest_direction(const std::vector<SpectralWeight>& weights,
                                       const CostConfig& config,
                                       double ground_energy) {
  check_cost_config(config);
  if (weights.empty())
    throw std::invalid_argument("steepest_direction: no weights");
  const std::vector<double> g = weight_gradient(weights, config, ground_energy);
  double wsum = 0.0, mean = 0.0;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    wsum += weights[n].weight;
    mean += weights[n].weight * g[n];
  }
  if (!(wsum > 0.0))
    throw std::invalid_argument("steepest_direction: weights sum to zero");
  mean /= wsum;  // exact weighted tangency even for unnormalized input
  std::vector<double> dir(weights.size());
  for (std::size_t n = 0; n < weights.size(); ++n) dir[n] = -(g[n] - mean);
  return dir;
}

StateDiagnostics diagnose_state(const StateVector& state, const SpectralBasis& obj,
                                const CostConfig& rodeo_config) {
  const std::vector<SpectralWeight> ws = spectral_weights(obj, state);
  StateDiagnostics d;
  for (const auto& w : ws) d.energy += w.weight * w.energy;
  const double ground = obj.ed.values[0];
  d.ground_overlap = eigenspace_overlap(obj, ground, ground_tol(ground), state);
  d.rodeo_success = success_probability_gaussian(
      ws, rodeo_config.target_energy, rodeo_config.sigma,
      std::max(rodeo_config.cycles, 1));
  return d;
}

// ---------------------------------------------------------------------------
// Optimizer.

OptimizationTrace bfgs_minimize(const Objective& f, const std::vector<double>& x0,
                                const OptimizationOptions& options,
                                const DiagnosticsProbe& probe) {
  const Eigen::Index n = static_cast<Eigen::Index>(x0.size());
  if (n < 1) throw std::invalid_argument("bfgs_minimize: empty start point");
  if (options.max_iterations < 0)
    throw std::invalid_argument("bfgs_minimize: negative iteration limit");
  if (!(options.fd_step > 0.0))
    throw std::invalid_argument("bfgs_minimize: fd_step must be positive");
  if (!(options.backtrack > 0.0 && options.backtrack < 1.0))
    throw std::invalid_argument("bfgs_minimize: backtrack factor must be in (0,1)");

  auto eval = [&f](const Eigen::VectorXd& x) {
    const double v = f(to_std(x));
    if (!std::isfinite(v))
      throw std::runtime_error("bfgs_minimize: objective returned a non-finite value");
    return v;
  };
  auto grad = [&eval, &options, n](const Eigen::VectorXd& x) {
    Eigen::VectorXd g(n);
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi = x[i];
      xp[i] = xi + options.fd_step;
      const double fp = eval(xp);
      xp[i] = xi - options.fd_step;
      const double fm = eval(xp);
      xp[i] = xi;
      g[i] = (fp - fm) / (2.0 * options.fd_step);
    }
    return g;
  };

  OptimizationTrace trace;
  auto record = [&trace, &probe](const Eigen::VectorXd& x, double fx) {
    trace.params.push_back(to_std(x));
    trace.costs.push_back(fx);
    if (probe) trace.diagnostics.push_back(probe(to_std(x)));
  };

  Eigen::VectorXd x = to_eigen(x0);
  double fx = eval(x);
  record(x, fx);
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g = grad(x);

  trace.status = OptimizerStatus::max_iterations;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (g.norm() < options.gradient_tol) {
      trace.status = OptimizerStatus::converged;
      break;
    }
    Eigen::VectorXd d = -(hinv * g);
    double slope = g.dot(d);
    if (!(slope < 0.0)) {  // stale curvature; fall back to steepest descent
      hinv.setIdentity();
      d = -g;
      slope = g.dot(d);
    }

    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd xn;
    double fn = 0.0;
    for (int ls = 0; ls <= options.max_line_steps; ++ls) {
      xn = x + t * d;
      fn = eval(xn);
      if (fn <= fx + options.armijo_slope * t * slope) {
        accepted = true;
        break;
      }
      t *= options.backtrack;
    }
    if (!accepted) {
      trace.status = OptimizerStatus::line_search_failed;
      break;
    }
    // One quadratic-interpolation refinement of the accepted step; exact
    // line minimization whenever the objective is quadratic along d.
    const double q = fn - fx - slope * t;
    if (q > 0.0) {
      const double tq = std::min(-0.5 * slope * t * t / q, 4.0 * t);
      if (tq > 0.0 && tq != t) {
        const Eigen::VectorXd xq = x + tq * d;
        const double fq = eval(xq);
        if (fq < fn) {
          xn = xq;
          fn = fq;
        }
      }
    }

    const Eigen::VectorXd gn = grad(xn);
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = hinv * y;
      hinv -= rho * (s * hy.transpose() + hy * s.transpose());
      hinv += rho * rho * (y.dot(hy) + sy) * (s * s.transpose());
    }
    x = xn;
    fx = fn;
    g = gn;
    record(x, fx);
    trace.iterations = iter + 1;
  }
  if (trace.status == OptimizerStatus::max_iterations &&
      g.norm() < options.gradient_tol)
    trace.status = OptimizerStatus::converged;

  trace.final_params = to_std(x);
  trace.final_cost = fx;
  return trace;
}

std::vector<double> wrap_2pi(const std::vector<double>& params) {
  std::vector<double> w(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    double v = std::fmod(params[i], kTwoPi);
    if (v < 0.0) v += kTwoPi;
    w[i] = v;
  }
  return w;
}

MultistartResult multistart(const QaoaAnsatz& ansatz, const CostConfig& config,
                            const CostConfig& diag_config, int n_starts,
                            const OptimizationOptions& options, RngStream& rng) {
  if (n_starts < 1)
    throw std::invalid_argument("multistart: need at least one start");
  const Objective f = ansatz_objective(ansatz, config);
  const DiagnosticsProbe probe = ansatz_probe(ansatz, diag_config);

  MultistartResult result;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_starts; ++s) {
    const std::vector<double> x0 = random_start(rng, 2 * ansatz.depth);
    OptimizationTrace tr = bfgs_minimize(f, x0, options, probe);
    if (tr.final_cost < best_cost - 1e-12) {  // ties keep the earlier start
      best_cost = tr.final_cost;
      result.best_index = s;
    }
    result.all.push_back(std::move(tr));
  }
  result.best = result.all[static_cast<std::size_t>(result.best_index)];
  return result;
}

// ---------------------------------------------------------------------------
// Studies.

std::vector<SweepPoint> excited_sweep(const QaoaAnsatz& ansatz,
                                      const std::vector<double>& e_grid,
                                      double sigma, int cycles, int n_starts,
                                      const OptimizationOptions& options,
                                      RngStream& rng) {
  if (e_grid.empty()) throw std::invalid_argument("excited_sweep: empty grid");
  const RealVector& vals = ansatz.obj.ed.values;
  const double scale = std::max(std::abs(vals[0]), std::abs(vals[vals.size() - 1]));
  for (Eigen::Index k = 0; k + 1 < vals.size(); ++k)
    if (vals[k + 1] - vals[k] <= 1e-8 * std::max(1.0, scale))
      throw std::runtime_error(
          "excited_sweep: spectrum has a (near-)degenerate pair; eigenstate "
          "labels would be ambiguous");

  std::vector<SweepPoint> points;
  points.reserve(e_grid.size());
  for (const double e : e_grid) {
    CostConfig config{CostKind::one_minus_rodeo_success, e, sigma, cycles};
    const MultistartResult ms =
        multistart(ansatz, config, config, n_starts, options, rng);
    const StateVector psi = qaoa_state(ansatz, ms.best.final_params);

    SweepPoint pt;
    pt.target_energy = e;
    pt.best_cost = ms.best.final_cost;
    pt.best_params = ms.best.final_params;
    const Vector d = ansatz.obj.ed.vectors.adjoint() * psi.amps;
    pt.overlaps.resize(static_cast<std::size_t>(d.size()));
    for (Eigen::Index k = 0; k < d.size(); ++k)
      pt.overlaps[static_cast<std::size_t>(k)] = std::norm(d[k]);
    pt.dominant_level = static_cast<int>(
        std::max_element(pt.overlaps.begin(), pt.overlaps.end()) -
        pt.overlaps.begin());
    Eigen::Index nearest = 0;
    (vals.array() - e).abs().minCoeff(&nearest);
    pt.nearest_level = static_cast<int>(nearest);
    pt.diag = diagnose_state(psi, ansatz.obj, config);
    points.push_back(std::move(pt));
  }
  return points;
}

TwoStageResult two_stage(const QaoaAnsatz& ansatz, const CostConfig& stage2,
                         int stage1_iters, int stage2_iters, int n_starts,
                         const OptimizationOptions& options, RngStream& rng) {
  if (stage1_iters < 0 || stage2_iters < 0)
    throw std::invalid_argument("two_stage: negative iteration budget");
  if (n_starts < 1) throw std::invalid_argument("two_stage: need at least one start");

  const Objective f1 = ansatz_objective(ansatz, CostConfig{CostKind::energy});
  const Objective f2 = ansatz_objective(ansatz, stage2);
  const DiagnosticsProbe probe = ansatz_probe(ansatz, stage2);

  OptimizationOptions opt1 = options;
  opt1.max_iterations = stage1_iters;
  OptimizationOptions opt2 = options;
  opt2.max_iterations = stage2_iters;

  TwoStageResult result;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_starts; ++s) {
    const std::vector<double> x0 = random_start(rng, 2 * ansatz.depth);
    OptimizationTrace tr = bfgs_minimize(f1, x0, opt1, probe);
    int switch_index = static_cast<int>(tr.params.size());
    if (stage2_iters > 0) {
      OptimizationTrace tr2 = bfgs_minimize(f2, tr.final_params, opt2, probe);
      // Entry 0 of stage 2 re-states the switch point in stage-2 cost terms.
      tr.params.insert(tr.params.end(), tr2.params.begin(), tr2.params.end());
      tr.costs.insert(tr.costs.end(), tr2.costs.begin(), tr2.costs.end());
      tr.diagnostics.insert(tr.diagnostics.end(), tr2.diagnostics.begin(),
                            tr2.diagnostics.end());
      tr.iterations += tr2.iterations;
      tr.status = tr2.status;
      tr.final_params = tr2.final_params;
      tr.final_cost = tr2.final_cost;
    }
    result.all_final_costs.push_back(tr.final_cost);
    if (tr.final_cost < best_cost - 1e-12) {
      best_cost = tr.final_cost;
      result.best_index = s;
      result.trace = std::move(tr);
      result.switch_index = switch_index;
    }
  }
  return result;
}

LandscapeGrid landscape_grid(const QaoaAnsatz& ansatz,
                             const std::vector<CostConfig>& configs,
                             double gamma_max, double beta_max, int resolution) {
  if (ansatz.depth != 1)
    throw std::invalid_argument("landscape_grid: requires a depth-1 ansatz");
  if (configs.empty())
    throw std::invalid_argument("landscape_grid: no cost configs given");
  if (resolution < 2)
    throw std::invalid_argument("landscape_grid: resolution must be at least 2");
  if (!(gamma_max > 0.0 && beta_max > 0.0))
    throw std::invalid_argument("landscape_grid: axis ranges must be positive");

  LandscapeGrid grid;
  grid.gammas.resize(static_cast<std::size_t>(resolution));
  grid.betas.resize(static_cast<std::size_t>(resolution));
  for (int i = 0; i < resolution; ++i) {
    grid.gammas[static_cast<std::size_t>(i)] = gamma_max * i / (resolution - 1);
    grid.betas[static_cast<std::size_t>(i)] = beta_max * i / (resolution - 1);
  }
  grid.costs.assign(configs.size(), RealMatrix::Zero(resolution, resolution));
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const StateVector psi = qaoa_state(
          ansatz, {grid.gammas[static_cast<std::size_t>(i)],
                   grid.betas[static_cast<std::size_t>(j)]});
      for (std::size_t k = 0; k < configs.size(); ++k)
        grid.costs[k](i, j) = evaluate_cost(psi, ansatz.obj, configs[k]);
    }
  }
  return grid;
}

}  // namespace eigenprep
