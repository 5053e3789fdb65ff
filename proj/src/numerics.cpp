#include "eigenprep/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace eigenprep {

const NumericConfig& numeric_config() {
  static const NumericConfig cfg{};
  return cfg;
}

// ---------------------------------------------------------------------------
// RngStream

std::uint64_t RngStream::next_u64() {
  // SplitMix64: Weyl increment + avalanche mix.
  state_ += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::gaussian(double mean, double sigma) {
  if (sigma == 0.0) return mean;
  if (has_spare_) {
    has_spare_ = false;
    return mean + sigma * spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return mean + sigma * r * std::cos(a);
}

namespace {
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace

RngStream RngStream::child(std::uint64_t task_index) const {
  return RngStream(mix64(seed0_ ^ (0x9E3779B97F4A7C15ull * (task_index + 1))));
}

std::vector<double> gaussian_sample(RngStream& rng, double mean, double sigma,
                                    std::size_t count) {
  std::vector<double> out(count);
  for (auto& x : out) x = rng.gaussian(mean, sigma);
  return out;
}

// ---------------------------------------------------------------------------
// kron

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// ---------------------------------------------------------------------------
// Hermitian eigensolver: cyclic Jacobi with threshold skipping; the
// real-symmetric path switches to Householder tridiagonalization + implicit
// QL above a size threshold where Jacobi's O(n^3 per sweep) cost dominates.

namespace {

inline double conj_s(double x) { return x; }
inline cx conj_s(const cx& x) { return std::conj(x); }

// One cyclic Jacobi pass over all (p, q) pairs; returns rotation count.
// Works for double (real symmetric) and std::complex<double> (Hermitian).
template <class Mat>
int jacobi_sweep(Mat& a, Mat& v, double abs_floor, double rel_skip) {
  using Scalar = typename Mat::Scalar;
  const Eigen::Index n = a.rows();
  int rotations = 0;
  for (Eigen::Index p = 0; p + 1 < n; ++p) {
    for (Eigen::Index q = p + 1; q < n; ++q) {
      const Scalar apq_s = a(p, q);
      const double apq = std::abs(apq_s);
      if (apq == 0.0) continue;
      const double app = std::real(a(p, p));
      const double aqq = std::real(a(q, q));
      if (apq <= abs_floor ||
          apq * apq <= rel_skip * rel_skip * std::abs(app * aqq)) {
        a(p, q) = Scalar(0);
        a(q, p) = Scalar(0);
        continue;
      }
      const double tau = (aqq - app) / (2.0 * apq);
      const double t =
          (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
      const double c = 1.0 / std::sqrt(1.0 + t * t);
      const Scalar w = (apq_s / apq) * Scalar(t * c);

      Scalar* cp = a.col(p).data();
      Scalar* cq = a.col(q).data();
      for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar aip = cp[i], aiq = cq[i];
        cp[i] = Scalar(c) * aip - conj_s(w) * aiq;
        cq[i] = w * aip + Scalar(c) * aiq;
      }
      // Mirror rows from the rotated columns, then fix the 2x2 block exactly.
      for (Eigen::Index i = 0; i < n; ++i) {
        a(p, i) = conj_s(cp[i]);
        a(q, i) = conj_s(cq[i]);
      }
      a(p, p) = Scalar(app - t * apq);
      a(q, q) = Scalar(aqq + t * apq);
      a(p, q) = Scalar(0);
      a(q, p) = Scalar(0);

      Scalar* vp = v.col(p).data();
      Scalar* vq = v.col(q).data();
      for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar vip = vp[i], viq = vq[i];
        vp[i] = Scalar(c) * vip - conj_s(w) * viq;
        vq[i] = w * vip + Scalar(c) * viq;
      }
      ++rotations;
    }
  }
  return rotations;
}

template <class Mat>
void jacobi_diagonalize(Mat& a, Mat& v) {
  const Eigen::Index n = a.rows();
  v = Mat::Identity(n, n);
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  const double eps = std::numeric_limits<double>::epsilon();
  const double abs_floor = eps * scale;
  const double rel_skip = 0.5 * eps;
  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (jacobi_sweep(a, v, abs_floor, rel_skip) == 0) return;
  }
  throw std::runtime_error("eig_hermitian: Jacobi sweeps did not converge");
}

// Householder reduction to tridiagonal form with accumulated transformations
// (classic tred2), followed by implicit-shift QL with eigenvector updates
// (classic tqli). Used on the real-symmetric path for large matrices.
void tred2(RealMatrix& a, RealVector& d, RealVector& e) {
  const int n = static_cast<int>(a.rows());
  for (int i = n - 1; i >= 1; --i) {
    const int l = i - 1;
    double h = 0.0, scale = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k) scale += std::abs(a(i, k));
      if (scale == 0.0) {
        e[i] = a(i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          a(i, k) /= scale;
          h += a(i, k) * a(i, k);
        }
        double f = a(i, l);
        double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        a(i, l) = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          a(j, i) = a(i, j) / h;
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
          for (int k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
          e[j] = g / h;
          f += e[j] * a(i, j);
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = a(i, j);
          e[j] = g = e[j] - hh * f;
          for (int k = 0; k <= j; ++k) a(j, k) -= f * e[k] + g * a(i, k);
        }
      }
    } else {
      e[i] = a(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    const int l = i - 1;
    if (d[i] != 0.0) {
      for (int j = 0; j <= l; ++j) {
        double g = 0.0;
        for (int k = 0; k <= l; ++k) g += a(i, k) * a(k, j);
        for (int k = 0; k <= l; ++k) a(k, j) -= g * a(k, i);
      }
    }
    d[i] = a(i, i);
    a(i, i) = 1.0;
    for (int j = 0; j <= l; ++j) {
      a(j, i) = 0.0;
      a(i, j) = 0.0;
    }
  }
}

void tqli(RealVector& d, RealVector& e, RealMatrix& z) {
  const int n = static_cast<int>(d.size());
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (iter++ == 50)
          throw std::runtime_error("eig_hermitian: QL iteration did not converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i = m - 1;
        for (; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          double* zi = z.col(i).data();
          double* zi1 = z.col(i + 1).data();
          for (int k = 0; k < n; ++k) {
            f = zi1[k];
            zi1[k] = s * zi[k] + c * f;
            zi[k] = c * zi[k] - s * f;
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

// Jacobi is quadratic-per-sweep cheap at small sizes but its sweep cost grows
// as n^3; beyond this dimension the tridiagonal route wins by a wide margin.
constexpr Eigen::Index kJacobiMaxDim = 256;

void sort_ascending(RealVector& values, Matrix& vectors) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index(0));
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
  RealVector sv(n);
  Matrix svec(vectors.rows(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    sv[k] = values[idx[k]];
    svec.col(k) = vectors.col(idx[k]);
  }
  values.swap(sv);
  vectors.swap(svec);
}

// Spot-check the residual and orthonormality on a sample of columns; full
// O(n^3) verification lives in the tests.
void verify_decomposition(const Matrix& h, const EigenDecomposition& ed,
                          double hnorm) {
  const Eigen::Index n = h.rows();
  if (n == 0) return;
  const double tol = numeric_config().eig_residual_tol * std::max(hnorm, 1.0);
  const Eigen::Index samples = std::min<Eigen::Index>(n, 6);
  for (Eigen::Index s = 0; s < samples; ++s) {
    const Eigen::Index k = (n - 1) * s / std::max<Eigen::Index>(samples - 1, 1);
    const Vector r = h * ed.vectors.col(k) - ed.values[k] * ed.vectors.col(k);
    if (r.cwiseAbs().maxCoeff() > tol)
      throw std::runtime_error("eig_hermitian: residual check failed");
    const double nrm = ed.vectors.col(k).norm();
    if (std::abs(nrm - 1.0) > numeric_config().eig_residual_tol * 10)
      throw std::runtime_error("eig_hermitian: eigenvector normalization failed");
  }
}

}  // namespace

EigenDecomposition eig_hermitian(const Matrix& h) {
  if (h.rows() != h.cols())
    throw std::invalid_argument("eig_hermitian: matrix must be square");
  const Eigen::Index n = h.rows();
  EigenDecomposition ed;
  if (n == 0) {
    ed.values = RealVector(0);
    ed.vectors = Matrix(0, 0);
    return ed;
  }
  const double scale = h.cwiseAbs().maxCoeff();
  double max_asym = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i <= j; ++i)
      max_asym = std::max(max_asym, std::abs(h(i, j) - std::conj(h(j, i))));
  if (max_asym > numeric_config().hermiticity_tol * std::max(scale, 1.0)) {
    std::ostringstream msg;
    msg << "eig_hermitian: input is not Hermitian (max asymmetry " << max_asym
        << ", scale " << scale << ")";
    throw std::invalid_argument(msg.str());
  }

  double max_imag = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      max_imag = std::max(max_imag, std::abs(h(i, j).imag()));

  if (max_imag <= numeric_config().hermiticity_tol * std::max(scale, 1.0)) {
    // Real-symmetric path.
    RealMatrix a = ((h + h.adjoint()) * 0.5).real();
    if (n <= kJacobiMaxDim) {
      RealMatrix v;
      jacobi_diagonalize(a, v);
      ed.values = a.diagonal();
      ed.vectors = v.cast<cx>();
    } else {
      RealVector d(n), e(n);
      tred2(a, d, e);
      tqli(d, e, a);
      ed.values = d;
      ed.vectors = a.cast<cx>();
    }
  } else {
    Matrix a = (h + h.adjoint()) * 0.5;
    Matrix v;
    jacobi_diagonalize(a, v);
    ed.values = a.diagonal().real();
    ed.vectors = v;
  }
  sort_ascending(ed.values, ed.vectors);
  verify_decomposition(h, ed, scale);
  return ed;
}

Matrix expm_unitary(const Matrix& h, double t) {
  const EigenDecomposition ed = eig_hermitian(h);
  Vector phases(ed.values.size());
  for (Eigen::Index k = 0; k < ed.values.size(); ++k)
    phases[k] = std::exp(cx(0.0, -ed.values[k] * t));
  return ed.vectors * phases.asDiagonal() * ed.vectors.adjoint();
}

// ---------------------------------------------------------------------------
// Quadratic least squares.

QuadraticFit polyfit_quadratic(const std::vector<double>& xs,
                               const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("polyfit_quadratic: size mismatch");
  const Eigen::Index m = static_cast<Eigen::Index>(xs.size());
  if (m < 3)
    throw std::invalid_argument("polyfit_quadratic: need at least 3 points");
  RealMatrix X(m, 3);
  RealVector y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = xs[i];
    X(i, 2) = xs[i] * xs[i];
    y[i] = ys[i];
  }
  Eigen::ColPivHouseholderQR<RealMatrix> qr(X);
  if (qr.rank() < 3)
    throw std::invalid_argument("polyfit_quadratic: degenerate abscissae");
  const RealVector coef = qr.solve(y);
  const RealVector resid = y - X * coef;
  const double ssr = resid.squaredNorm();
  const double dof = static_cast<double>(m - 3);
  const double s2 = dof > 0 ? ssr / dof : 0.0;
  const RealMatrix cov = (X.transpose() * X).ldlt().solve(RealMatrix::Identity(3, 3)) * s2;
  QuadraticFit fit;
  fit.c0 = coef[0];
  fit.c1 = coef[1];
  fit.c2 = coef[2];
  fit.c0_err = std::sqrt(std::max(cov(0, 0), 0.0));
  fit.c1_err = std::sqrt(std::max(cov(1, 1), 0.0));
  fit.c2_err = std::sqrt(std::max(cov(2, 2), 0.0));
  fit.rms_residual = std::sqrt(ssr / static_cast<double>(m));
  return fit;
}

// ---------------------------------------------------------------------------
// Gaussian peak fit (Levenberg-Marquardt, analytic Jacobian).

namespace {
// Weighted residuals: r_i = w_i * (y_i - model_i), chi2 = sum r_i^2.
double peak_chi2(const std::vector<double>& xs, const std::vector<double>& ys,
                 const RealVector& w, const Eigen::Vector4d& th,
                 RealVector* resid) {
  double chi2 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - th[0];
    const double model = th[3] + th[1] * std::exp(-dx * dx / (2.0 * th[2] * th[2]));
    const double r = w[static_cast<Eigen::Index>(i)] * (ys[i] - model);
    if (resid) (*resid)[static_cast<Eigen::Index>(i)] = r;
    chi2 += r * r;
  }
  return chi2;
}

GaussianPeakFit peak_fit_impl(const std::vector<double>& xs,
                              const std::vector<double>& ys, const RealVector& w,
                              bool scale_errors);
}  // namespace

GaussianPeakFit gaussian_peak_fit(const std::vector<double>& xs,
                                  const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("gaussian_peak_fit: size mismatch");
  return peak_fit_impl(xs, ys, RealVector::Ones(static_cast<Eigen::Index>(xs.size())),
                       /*scale_errors=*/true);
}

GaussianPeakFit gaussian_peak_fit(const std::vector<double>& xs,
                                  const std::vector<double>& ys,
                                  const std::vector<double>& std_errs) {
  if (xs.size() != ys.size() || xs.size() != std_errs.size())
    throw std::invalid_argument("gaussian_peak_fit: size mismatch");
  // Floor the uncertainties so an exactly-deterministic point cannot give an
  // infinite weight; the floor is tied to the data scale.
  double ymin = std_errs.empty() ? 0.0 : ys[0], ymax = ymin;
  for (const double y : ys) {
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  const double floor = 1e-4 * std::max(ymax - ymin, 1e-300);
  RealVector w(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < std_errs.size(); ++i) {
    if (std_errs[i] < 0.0)
      throw std::invalid_argument("gaussian_peak_fit: negative uncertainty");
    w[static_cast<Eigen::Index>(i)] = 1.0 / std::max(std_errs[i], floor);
  }
  return peak_fit_impl(xs, ys, w, /*scale_errors=*/false);
}

namespace {
GaussianPeakFit peak_fit_impl(const std::vector<double>& xs,
                              const std::vector<double>& ys, const RealVector& w,
                              bool scale_errors) {
  const Eigen::Index m = static_cast<Eigen::Index>(xs.size());
  if (m < 5)
    throw std::invalid_argument("gaussian_peak_fit: need at least 5 points");
  const auto imax = static_cast<Eigen::Index>(
      std::max_element(ys.begin(), ys.end()) - ys.begin());
  const double ymin = *std::min_element(ys.begin(), ys.end());
  const double ymax = ys[static_cast<std::size_t>(imax)];
  if (!(ymax > ymin))
    throw std::invalid_argument("gaussian_peak_fit: flat data, no peak");
  if (imax == 0 || imax == m - 1)
    throw std::invalid_argument("gaussian_peak_fit: maximum on grid boundary");

  const double span = std::abs(xs.back() - xs.front());
  const double wfloor = 1e-12 * std::max(span, 1.0);
  // theta = (center, height, width, background)
  Eigen::Vector4d th(xs[static_cast<std::size_t>(imax)], ymax - ymin,
                     std::max(span / 6.0, wfloor), ymin);

  RealVector resid(m);
  double chi2 = peak_chi2(xs, ys, w, th, &resid);
  double lambda = 1e-3;
  GaussianPeakFit fit;
  int iter = 0;
  const int max_iter = 200;
  bool converged = false;
  Eigen::Matrix4d JtJ;
  for (; iter < max_iter; ++iter) {
    Eigen::MatrixXd J(m, 4);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double dx = xs[static_cast<std::size_t>(i)] - th[0];
      const double w2 = th[2] * th[2];
      const double e = std::exp(-dx * dx / (2.0 * w2));
      J(i, 0) = w[i] * th[1] * e * dx / w2;
      J(i, 1) = w[i] * e;
      J(i, 2) = w[i] * th[1] * e * dx * dx / (w2 * th[2]);
      J(i, 3) = w[i];
    }
    JtJ = J.transpose() * J;
    const Eigen::Vector4d g = J.transpose() * resid;
    bool accepted = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::Matrix4d A = JtJ;
      A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-30);
      const Eigen::Vector4d delta = A.ldlt().solve(g);
      Eigen::Vector4d trial = th + delta;
      trial[2] = std::copysign(std::max(std::abs(trial[2]), wfloor), 1.0);
      RealVector trial_resid(m);
      const double trial_chi2 = peak_chi2(xs, ys, w, trial, &trial_resid);
      if (trial_chi2 <= chi2) {
        const double rel_drop = (chi2 - trial_chi2) / std::max(chi2, 1e-300);
        const double step = delta.cwiseAbs().maxCoeff();
        th = trial;
        resid.swap(trial_resid);
        chi2 = trial_chi2;
        lambda = std::max(lambda * 0.1, 1e-14);
        accepted = true;
        if (rel_drop < 1e-14 || step < 1e-13 * (1.0 + th.cwiseAbs().maxCoeff()))
          converged = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e14) break;
    }
    if (!accepted || converged) {
      converged = converged || !accepted;  // stalled == stationary
      break;
    }
  }

  fit.center = th[0];
  fit.height = th[1];
  fit.width = std::abs(th[2]);
  fit.background = th[3];
  fit.converged = converged;
  fit.iterations = iter;
  fit.rms_residual = std::sqrt(chi2 / static_cast<double>(m));
  const double dof = static_cast<double>(m - 4);
  // With caller-supplied uncertainties the covariance is (J^T J)^-1 as is;
  // otherwise scale by the reduced chi-square.
  const double s2 = scale_errors ? (dof > 0 ? chi2 / dof : 0.0) : 1.0;
  const Eigen::Matrix4d cov =
      JtJ.ldlt().solve(Eigen::Matrix4d::Identity()) * s2;
  fit.center_err = std::sqrt(std::max(cov(0, 0), 0.0));
  return fit;
}
}  // namespace

}  // namespace eigenprep
