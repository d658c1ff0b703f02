#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "emz/kernel_model.hpp"
#include "emz/sim.hpp"

namespace emz {

// Explicit solver for
//   du/dt = omega u + int_0^t K(t-s) u(s) ds + f(t) [+ white noise]
// on t_k = k dt, k = 0..steps. Third-order Adams-Bashforth in time; the
// memory integral uses the trapezoid rule with Gregory end corrections so the
// quadrature matches the time stepper's order. The first two steps run the
// explicit midpoint rule on refined substeps. Kernel samples are cached at
// construction, so one solver serves a whole ensemble.
class VolterraSolver {
 public:
  VolterraSolver(double omega, const std::function<double(double)>& kernel, double dt, int steps);

  double dt() const { return dt_; }
  int steps() const { return steps_; }
  double omega() const { return omega_; }

  // forcing(t) may be empty. `noise` (size steps, may be empty) is added to
  // each step as an increment u_{k+1} += noise[k]. Throws NumericalError when
  // |u| exceeds 1e6 * scale (scale defaults to |u0|).
  std::vector<double> solve(double u0, const std::function<double(double)>& forcing = {},
                            const std::vector<double>& noise = {}, double scale = 0.0) const;

 private:
  double omega_;
  double dt_;
  int steps_;
  int sub_;  // bootstrap refinement factor
  std::vector<double> k_coarse_;
  std::vector<double> k_fine_;  // K at multiples of dt / (2 sub_)
};

// Quadrature weights w_0..w_n (to be scaled by dt) for int_0^{n dt}.
std::vector<double> gregory_weights(int n);

// C(t) for the projected GLE with C(0) = c0 on t_k = k dt, k = 0..steps.
SampledFunction solve_projected_gle(const KernelModel& kernel, double c0, double dt, int steps);

// Matrix-valued variant dC/dt = Omega C + int_0^t K(t-s) C(s) ds, same scheme.
struct MatrixSampledFunction {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<Eigen::MatrixXd> values;
};

MatrixSampledFunction solve_projected_gle_matrix(
    const Eigen::MatrixXd& omega, const std::function<Eigen::MatrixXd(double)>& kernel,
    const Eigen::MatrixXd& c0, double dt, int steps);

// Truncated Karhunen-Loeve model of a stationary zero-mean Gaussian process on
// the grid t_i = i dt, i = 0..points-1.
struct KLModel {
  double dt = 1.0;
  int points = 0;
  std::vector<double> eigenvalues;  // descending, >= 0
  Eigen::MatrixXd eigenfunctions;   // points x modes
  double lambda_max = 0.0;          // largest eigenvalue before truncation
  double discarded_trace = 0.0;     // sum of the eigenvalues not kept
  double min_eigenvalue = 0.0;      // before clipping

  int modes() const { return static_cast<int>(eigenvalues.size()); }
  double horizon() const { return dt * (points - 1); }
  std::vector<double> trapezoid_weights() const;
};

// Nystrom discretization of int_0^T R(|t-s|) e(s) ds = lambda e(t) with
// trapezoid weights. Throws NumericalError when the covariance is not PSD
// (most negative eigenvalue below -psd_tolerance lambda_1); smaller negative
// eigenvalues are clipped to 0.
inline constexpr double kKlPsdTolerance = 1e-8;
KLModel kl_decompose(const SampledFunction& covariance, int modes,
                     double psd_tolerance = kKlPsdTolerance);

// f(t_i) = sum_k eta_k sqrt(lambda_k) e_k(t_i), eta_k ~ N(0, 1).
SampledFunction sample_fluctuation(const KLModel& kl, NormalStream& rng);

// Covariance of the fluctuation force under the second FDT:
// <f(t) f(s)> = -c0 K(|t - s|), sampled at k dt, k = 0..points-1.
SampledFunction fluctuation_covariance(const KernelModel& kernel, double c0, double dt, int points);

struct RomOptions {
  double u0_variance = 1.0;
  // Add white noise of intensity 2 (-omega) u0_variance when omega < 0, the
  // Markovian counterpart of the streaming term.
  bool markovian_noise = true;
};

// Surrogate trajectories of the observable; path k uses NormalStream(seed, k).
TrajectoryStore run_rom(const KernelModel& kernel, const KLModel& kl, const RomOptions& options,
                        const EnsembleSpec& ens);

}  // namespace emz
