#pragma once

#include <vector>

#include <Eigen/Dense>

#include "emz/basis.hpp"
#include "emz/kernel_model.hpp"
#include "emz/sim.hpp"

namespace emz {

// Least-squares form of the GLE for an observed correlation function:
//   y_i = C'(t_i) - omega C(t_i),   X_{i,n} = int_0^{t_i} g_n(s) C(t_i - s) ds.
struct Regression {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

// C' by fourth-order differences (one-sided near the ends), the convolution
// by the composite trapezoid rule on the grid of C. weight_rate > 0 scales
// row i by sqrt(exp(-weight_rate t_i)).
Regression assemble_regression(const SampledFunction& c, double omega, const BasisSpec& basis,
                               int order, double weight_rate = 0.0);

// Fourth-order finite-difference derivative of uniformly sampled values.
std::vector<double> derivative4(const std::vector<double>& v, double dt);

struct LassoResult {
  Eigen::VectorXd coeffs;   // original column scale
  int sweeps = 0;
  bool converged = false;   // false: stopped at the sweep cap
  double max_change = 0.0;  // last sweep, standardized scale
  double kkt_residual = 0.0;  // subgradient violation, standardized scale
  double objective = 0.0;
};

inline constexpr int kLassoMaxSweeps = 100000;
inline constexpr double kLassoTolerance = 1e-10;

// argmin (1/2J) |y - X k|^2 + lambda |k|_1 over standardized columns
// (x_n / sqrt(x_n^T x_n / J)), by cyclic coordinate descent on the Gram
// matrix. All-zero columns get a zero coefficient.
LassoResult lasso_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda);

struct LambdaScore {
  double lambda = 0.0;
  double replay_error = 0.0;  // sup |C_model - C| / |C(0)|, inf if the replay blew up
  double residual = 0.0;      // regression RMS residual
  double kkt_residual = 0.0;
  int nonzeros = 0;
  int sweeps = 0;
  bool converged = false;
};

struct DdFit {
  KernelModel model;
  double lambda = 0.0;
  double replay_error = 0.0;
  std::vector<LambdaScore> scores;
};

// Fits K(t) = sum_n k_n g_n(t) for each lambda and keeps the one whose GLE
// replay best reproduces C.
DdFit fit_kernel_dd(const SampledFunction& c, double omega, const BasisSpec& basis, int order,
                    const std::vector<double>& lambda_grid, double weight_rate = 0.0,
                    int threads = 1);

// sigma = 2 alpha, alpha the fitted decay rate of |C(t)/C(0)|.
double default_laguerre_sigma(const SampledFunction& c);

}  // namespace emz
