#include "emz/gle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "emz/errors.hpp"
#include "emz/parallel.hpp"

namespace emz {

std::vector<double> gregory_weights(int n) {
  switch (n) {
    case 0: return {0.0};
    case 1: return {0.5, 0.5};
    case 2: return {1.0 / 3, 4.0 / 3, 1.0 / 3};
    case 3: return {3.0 / 8, 9.0 / 8, 9.0 / 8, 3.0 / 8};
    case 4: return {1.0 / 3, 4.0 / 3, 2.0 / 3, 4.0 / 3, 1.0 / 3};
    default: break;
  }
  std::vector<double> w(n + 1, 1.0);
  const double end[3] = {3.0 / 8, 7.0 / 6, 23.0 / 24};
  for (int i = 0; i < 3; ++i) {
    w[i] = end[i];
    w[n - i] = end[i];
  }
  return w;
}

namespace {

double magnitude(double v) { return std::abs(v); }
double magnitude(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

constexpr double kBlowUp = 1e6;

// Generic integrator shared by the scalar and matrix solvers. V is double or
// Eigen::MatrixXd; Om multiplies like omega * u.
template <class V, class Om>
std::vector<V> integrate(const Om& omega, const std::vector<V>& k_coarse,
                         const std::vector<V>& k_fine, int sub, const V& u0, double dt, int steps,
                         const std::function<V(double)>& forcing, const std::vector<double>* noise,
                         double scale) {
  const V zero = u0 * 0.0;
  auto force = [&](double t) -> V { return forcing ? forcing(t) : zero; };
  auto check = [&](const V& u, double t) {
    const double m = magnitude(u);
    if (!std::isfinite(m) || m > kBlowUp * scale) {
      std::ostringstream os;
      os << "GLE solution unstable: |u| = " << m << " exceeds 1e6 x " << scale << " at t = " << t;
      throw NumericalError(os.str());
    }
  };
  auto add_noise = [&](V& u, int k) {
    if constexpr (std::is_same_v<V, double>) {
      if (noise && !noise->empty()) u += (*noise)[k];
    }
  };

  std::vector<V> u(static_cast<std::size_t>(steps) + 1, zero);
  u[0] = u0;

  // Bootstrap: explicit midpoint on h = dt/sub up to t = min(2, steps) dt.
  const int boot = std::min(2, steps);
  const double h = dt / sub;
  std::vector<V> fine;
  fine.reserve(2 * sub + 1);
  fine.push_back(u0);
  for (int j = 0; j < boot * sub; ++j) {
    const double tj = j * h;
    V mem = zero;
    for (int i = 0; i <= j; ++i) {
      const double w = (i == 0 || i == j) ? 0.5 : 1.0;
      mem += (w * h) * (k_fine[2 * (j - i)] * fine[i]);
    }
    if (j == 0) mem = zero;
    const V k1 = omega * fine[j] + mem + force(tj);
    const V mid = fine[j] + (0.5 * h) * k1;
    V mem_mid = zero;
    for (int i = 0; i <= j; ++i) {
      const double w = (i == 0 || i == j) ? 0.5 : 1.0;
      mem_mid += (w * h) * (k_fine[2 * (j - i) + 1] * fine[i]);
    }
    if (j == 0) mem_mid = zero;
    mem_mid += (0.25 * h) * (k_fine[1] * fine[j] + k_fine[0] * mid);
    const V k2 = omega * mid + mem_mid + force(tj + 0.5 * h);
    V next = fine[j] + h * k2;
    if ((j + 1) % sub == 0) {
      const int k = (j + 1) / sub;
      add_noise(next, k - 1);
      check(next, k * dt);
      u[k] = next;
    }
    fine.push_back(next);
  }
  if (steps <= 2) return u;

  std::vector<V> rhs(static_cast<std::size_t>(steps) + 1, zero);
  auto memory = [&](int n) -> V {
    V acc = zero;
    if (n == 0) return acc;
    if (n < 5) {
      const auto w = gregory_weights(n);
      for (int j = 0; j <= n; ++j) acc += w[j] * (k_coarse[n - j] * u[j]);
    } else {
      for (int j = 0; j <= n; ++j) acc += k_coarse[n - j] * u[j];
      const double corr[3] = {3.0 / 8 - 1.0, 7.0 / 6 - 1.0, 23.0 / 24 - 1.0};
      for (int i = 0; i < 3; ++i) {
        acc += corr[i] * (k_coarse[n - i] * u[i]);
        acc += corr[i] * (k_coarse[i] * u[n - i]);
      }
    }
    return dt * acc;
  };
  for (int n = 0; n <= 2; ++n) rhs[n] = omega * u[n] + memory(n) + force(n * dt);
  for (int n = 2; n < steps; ++n) {
    V next = u[n] + (dt / 12.0) * (23.0 * rhs[n] - 16.0 * rhs[n - 1] + 5.0 * rhs[n - 2]);
    add_noise(next, n);
    check(next, (n + 1) * dt);
    u[n + 1] = next;
    if (n + 1 < steps) rhs[n + 1] = omega * u[n + 1] + memory(n + 1) + force((n + 1) * dt);
  }
  return u;
}

int bootstrap_refinement(double dt) {
  // The midpoint bootstrap is second order in the substep; keep its error
  // below the third-order global error of the main scheme.
  return std::max(8, static_cast<int>(std::ceil(4.0 / std::sqrt(dt))));
}

}  // namespace

VolterraSolver::VolterraSolver(double omega, const std::function<double(double)>& kernel,
                               double dt, int steps)
    : omega_(omega), dt_(dt), steps_(steps) {
  if (!(dt > 0.0) || steps < 1) throw ConfigError("GLE solver: need dt > 0 and steps >= 1");
  if (!kernel) throw ConfigError("GLE solver: kernel is empty");
  sub_ = bootstrap_refinement(dt);
  k_coarse_.resize(steps + 1);
  for (int k = 0; k <= steps; ++k) k_coarse_[k] = kernel(k * dt);
  k_fine_.resize(4 * sub_ + 2);
  for (std::size_t k = 0; k < k_fine_.size(); ++k) k_fine_[k] = kernel(k * dt / (2.0 * sub_));
  for (double v : k_coarse_)
    if (!std::isfinite(v)) throw NumericalError("GLE solver: kernel is not finite on the grid");
}

std::vector<double> VolterraSolver::solve(double u0, const std::function<double(double)>& forcing,
                                          const std::vector<double>& noise, double scale) const {
  if (!noise.empty() && static_cast<int>(noise.size()) < steps_)
    throw ConfigError("GLE solver: noise increments shorter than the step count");
  if (scale <= 0.0) scale = std::abs(u0) > 0.0 ? std::abs(u0) : 1.0;
  return integrate<double>(omega_, k_coarse_, k_fine_, sub_, u0, dt_, steps_, forcing, &noise,
                           scale);
}

SampledFunction solve_projected_gle(const KernelModel& kernel, double c0, double dt, int steps) {
  if (c0 == 0.0) throw ConfigError("GLE: C(0) must be nonzero");
  VolterraSolver solver(kernel.omega, [&](double t) { return kernel(t); }, dt, steps);
  SampledFunction out;
  out.t0 = 0.0;
  out.dt = dt;
  out.values = solver.solve(c0);
  return out;
}

MatrixSampledFunction solve_projected_gle_matrix(
    const Eigen::MatrixXd& omega, const std::function<Eigen::MatrixXd(double)>& kernel,
    const Eigen::MatrixXd& c0, double dt, int steps) {
  if (!(dt > 0.0) || steps < 1) throw ConfigError("GLE solver: need dt > 0 and steps >= 1");
  if (omega.rows() != omega.cols() || omega.cols() != c0.rows())
    throw ConfigError("GLE solver: inconsistent matrix dimensions");
  const int sub = bootstrap_refinement(dt);
  std::vector<Eigen::MatrixXd> kc(steps + 1), kf(4 * sub + 2);
  for (int k = 0; k <= steps; ++k) kc[k] = kernel(k * dt);
  for (std::size_t k = 0; k < kf.size(); ++k) kf[k] = kernel(k * dt / (2.0 * sub));
  const double scale = std::max(magnitude(c0), 1e-300);
  MatrixSampledFunction out;
  out.dt = dt;
  out.values = integrate<Eigen::MatrixXd>(omega, kc, kf, sub, c0, dt, steps, {}, nullptr, scale);
  return out;
}

std::vector<double> KLModel::trapezoid_weights() const {
  std::vector<double> w(points, dt);
  if (points > 0) {
    w.front() *= 0.5;
    w.back() *= 0.5;
  }
  return w;
}

KLModel kl_decompose(const SampledFunction& covariance, int modes, double psd_tolerance) {
  covariance.validate();
  if (!(psd_tolerance >= 0.0)) throw ConfigError("KL: psd tolerance must be >= 0");
  const int n = static_cast<int>(covariance.size());
  if (n < 3) throw ConfigError("KL: grid too coarse (need at least 3 points)");
  if (modes < 0 || modes > n) throw ConfigError("KL: modes must lie in [0, grid points]");
  KLModel kl;
  kl.dt = covariance.dt;
  kl.points = n;
  const auto w = kl.trapezoid_weights();
  Eigen::VectorXd sw(n);
  for (int i = 0; i < n; ++i) sw[i] = std::sqrt(w[i]);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = sw[i] * covariance.values[std::abs(i - j)] * sw[j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) throw NumericalError("KL: eigensolver failed");
  const Eigen::VectorXd& ev = eig.eigenvalues();  // ascending
  const double top = ev[n - 1];
  const double bottom = ev[0];
  kl.lambda_max = std::max(top, 0.0);
  kl.min_eigenvalue = bottom;
  if (bottom < -psd_tolerance * std::max(std::abs(top), 1e-300) && bottom < 0.0) {
    std::ostringstream os;
    os << "KL: covariance not PSD (most negative eigenvalue " << bottom << ", largest " << top
       << "); kernel unsuitable for a Gaussian KL model";
    throw NumericalError(os.str());
  }
  kl.eigenvalues.resize(modes);
  kl.eigenfunctions.resize(n, modes);
  for (int k = 0; k < modes; ++k) {
    const int idx = n - 1 - k;
    kl.eigenvalues[k] = std::max(ev[idx], 0.0);
    Eigen::VectorXd v = eig.eigenvectors().col(idx);
    // Fix the sign so the largest-magnitude entry is positive.
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    kl.eigenfunctions.col(k) = v.cwiseQuotient(sw);
  }
  for (int idx = n - 1 - modes; idx >= 0; --idx) kl.discarded_trace += std::max(ev[idx], 0.0);
  return kl;
}

SampledFunction sample_fluctuation(const KLModel& kl, NormalStream& rng) {
  SampledFunction f;
  f.dt = kl.dt;
  f.values.assign(kl.points, 0.0);
  for (int k = 0; k < kl.modes(); ++k) {
    const double a = rng() * std::sqrt(kl.eigenvalues[k]);
    for (int i = 0; i < kl.points; ++i) f.values[i] += a * kl.eigenfunctions(i, k);
  }
  return f;
}

SampledFunction fluctuation_covariance(const KernelModel& kernel, double c0, double dt,
                                       int points) {
  SampledFunction r;
  r.dt = dt;
  r.values = kernel.sample(dt, points);
  for (double& v : r.values) v *= -c0;
  return r;
}

TrajectoryStore run_rom(const KernelModel& kernel, const KLModel& kl, const RomOptions& options,
                        const EnsembleSpec& ens) {
  ens.validate();
  if (!(options.u0_variance > 0.0)) throw ConfigError("ROM: u0 variance must be > 0");
  if (ens.t_end > kl.horizon() * (1.0 + 1e-12))
    throw ConfigError("ROM: horizon exceeds the KL grid horizon");
  const int steps = ens.steps();
  const VolterraSolver solver(kernel.omega, [&](double t) { return kernel(t); }, ens.dt, steps);
  const double sd = std::sqrt(options.u0_variance);
  const double white =
      (options.markovian_noise && kernel.omega < 0.0)
          ? std::sqrt(2.0 * (-kernel.omega) * options.u0_variance * ens.dt)
          : 0.0;

  TrajectoryStore store({kernel.observable.name}, ens.paths, ens.saved_times(), 0.0,
                        ens.dt * ens.save_stride);
  auto run_path = [&](int path) {
    NormalStream rng(ens.seed, static_cast<std::uint64_t>(path));
    const double u0 = sd * rng();
    const SampledFunction f = sample_fluctuation(kl, rng);
    std::vector<double> noise;
    if (white > 0.0) {
      noise.resize(steps);
      for (double& v : noise) v = white * rng();
    }
    auto forcing = [&f](double t) {
      const double x = t / f.dt;
      const int i = std::min(static_cast<int>(x), static_cast<int>(f.size()) - 2);
      const double frac = x - i;
      return (1.0 - frac) * f.values[i] + frac * f.values[i + 1];
    };
    const auto u = solver.solve(u0, kl.modes() > 0 ? std::function<double(double)>(forcing)
                                                   : std::function<double(double)>(),
                                noise, sd);
    for (int k = 0; k < store.times; ++k) store.at(path, 0, k) = u[k * ens.save_stride];
  };

  parallel_for(ens.paths, ens.threads, [&](int path) { run_path(path); });
  return store;
}

}  // namespace emz
