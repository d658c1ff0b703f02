#include "emz/dd_kernel.hpp"

#include <cmath>
#include <limits>

#include "emz/errors.hpp"
#include "emz/gle.hpp"
#include "emz/parallel.hpp"

namespace emz {

std::vector<double> derivative4(const std::vector<double>& v, double dt) {
  const int n = static_cast<int>(v.size());
  if (n < 5) throw ConfigError("derivative: need at least 5 samples");
  std::vector<double> d(n);
  const double s = 1.0 / (12.0 * dt);
  for (int i = 2; i < n - 2; ++i) d[i] = s * (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]);
  d[0] = s * (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]);
  d[1] = s * (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]);
  d[n - 1] = -s * (-25.0 * v[n - 1] + 48.0 * v[n - 2] - 36.0 * v[n - 3] + 16.0 * v[n - 4] -
                   3.0 * v[n - 5]);
  d[n - 2] = -s * (-3.0 * v[n - 1] - 10.0 * v[n - 2] + 18.0 * v[n - 3] - 6.0 * v[n - 4] + v[n - 5]);
  return d;
}

Regression assemble_regression(const SampledFunction& c, double omega, const BasisSpec& basis,
                               int order, double weight_rate) {
  c.validate();
  basis.validate();
  if (order < 0) throw ConfigError("regression: order must be >= 0");
  const int rows = static_cast<int>(c.size());
  const int j_max = rows - 1;
  if (j_max < 3 * (order + 1))
    throw ConfigError("regression: grid too short for " + std::to_string(order + 1) +
                      " basis functions (need at least " + std::to_string(3 * (order + 1) + 1) +
                      " samples)");

  const double dt = c.dt;
  Eigen::MatrixXd g(rows, order + 1);
  for (int i = 0; i < rows; ++i) {
    const auto gi = basis.evaluate(order, i * dt);
    for (int n = 0; n <= order; ++n) g(i, n) = gi[n];
  }
  const auto dc = derivative4(c.values, dt);

  Regression reg;
  reg.x.setZero(rows, order + 1);
  reg.y.resize(rows);
  for (int i = 0; i < rows; ++i) {
    reg.y[i] = dc[i] - omega * c.values[i];
    if (i == 0) continue;
    for (int n = 0; n <= order; ++n) {
      double acc = 0.5 * (g(0, n) * c.values[i] + g(i, n) * c.values[0]);
      for (int j = 1; j < i; ++j) acc += g(j, n) * c.values[i - j];
      reg.x(i, n) = dt * acc;
    }
  }
  if (weight_rate > 0.0) {
    for (int i = 0; i < rows; ++i) {
      const double w = std::exp(-0.5 * weight_rate * i * dt);
      reg.x.row(i) *= w;
      reg.y[i] *= w;
    }
  }
  return reg;
}

namespace {

double soft(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

}  // namespace

LassoResult lasso_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("lasso: lambda must be >= 0");
  if (x.rows() != y.size() || x.rows() == 0) throw ConfigError("lasso: dimension mismatch");
  if (!x.allFinite() || !y.allFinite()) throw NumericalError("lasso: non-finite input");
  const int p = static_cast<int>(x.cols());
  const double rows = static_cast<double>(x.rows());

  Eigen::VectorXd scale(p);
  for (int n = 0; n < p; ++n) scale[n] = std::sqrt(x.col(n).squaredNorm() / rows);
  Eigen::MatrixXd z = x;
  for (int n = 0; n < p; ++n)
    if (scale[n] > 0.0) z.col(n) /= scale[n];
  const Eigen::MatrixXd gram = (z.transpose() * z) / rows;
  const Eigen::VectorXd cy = (z.transpose() * y) / rows;

  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd gb = Eigen::VectorXd::Zero(p);  // gram * b
  LassoResult res;
  for (res.sweeps = 1; res.sweeps <= kLassoMaxSweeps; ++res.sweeps) {
    double change = 0.0;
    for (int n = 0; n < p; ++n) {
      if (scale[n] == 0.0) continue;
      const double rho = cy[n] - gb[n] + gram(n, n) * b[n];
      const double nb = soft(rho, lambda) / gram(n, n);
      const double delta = nb - b[n];
      if (delta != 0.0) {
        gb += delta * gram.col(n);
        b[n] = nb;
        change = std::max(change, std::abs(delta));
      }
    }
    res.max_change = change;
    if (change < kLassoTolerance) {
      res.converged = true;
      break;
    }
  }
  // the sweep cap is a stopping rule, not an error; callers see converged = false
  res.sweeps = std::min(res.sweeps, kLassoMaxSweeps);

  gb = gram * b;
  double kkt = 0.0;
  for (int n = 0; n < p; ++n) {
    if (scale[n] == 0.0) continue;
    const double grad = cy[n] - gb[n];
    const double v = b[n] != 0.0 ? std::abs(grad - lambda * (b[n] > 0 ? 1.0 : -1.0))
                                 : std::max(0.0, std::abs(grad) - lambda);
    kkt = std::max(kkt, v);
  }
  res.kkt_residual = kkt;
  res.objective = 0.5 * (y - z * b).squaredNorm() / rows + lambda * b.lpNorm<1>();
  res.coeffs.resize(p);
  for (int n = 0; n < p; ++n) res.coeffs[n] = scale[n] > 0.0 ? b[n] / scale[n] : 0.0;
  return res;
}

DdFit fit_kernel_dd(const SampledFunction& c, double omega, const BasisSpec& basis, int order,
                    const std::vector<double>& lambda_grid, double weight_rate, int threads) {
  if (lambda_grid.empty()) throw ConfigError("data-driven fit: empty lambda grid");
  if (c.values.empty() || c.values[0] == 0.0) throw ConfigError("data-driven fit: C(0) must be nonzero");
  const Regression reg = assemble_regression(c, omega, basis, order, weight_rate);
  const int steps = static_cast<int>(c.size()) - 1;
  const double c0 = c.values[0];

  std::vector<LambdaScore> scores(lambda_grid.size());
  std::vector<KernelModel> models(lambda_grid.size());
  parallel_for(static_cast<int>(lambda_grid.size()), threads, [&](int i) {
    const auto lasso = lasso_fit(reg.x, reg.y, lambda_grid[i]);
    KernelModel m;
    m.omega = omega;
    m.basis = basis;
    m.coeffs.assign(lasso.coeffs.data(), lasso.coeffs.data() + lasso.coeffs.size());
    m.observable.c0 = c0;
    LambdaScore& s = scores[i];
    s.lambda = lambda_grid[i];
    s.kkt_residual = lasso.kkt_residual;
    s.sweeps = lasso.sweeps;
    s.converged = lasso.converged;
    s.residual = (reg.y - reg.x * lasso.coeffs).norm() / std::sqrt(static_cast<double>(reg.y.size()));
    for (double k : m.coeffs) s.nonzeros += k != 0.0;
    try {
      const auto replay = solve_projected_gle(m, c0, c.dt, steps);
      double err = 0.0;
      for (int k = 0; k <= steps; ++k) err = std::max(err, std::abs(replay.values[k] - c.values[k]));
      s.replay_error = err / std::abs(c0);
    } catch (const NumericalError&) {
      s.replay_error = std::numeric_limits<double>::infinity();
    }
    models[i] = std::move(m);
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i].replay_error < scores[best].replay_error) best = i;
  if (!std::isfinite(scores[best].replay_error))
    throw NumericalError("data-driven fit: every lambda produced an unstable GLE replay");
  DdFit fit;
  fit.model = models[best];
  fit.lambda = scores[best].lambda;
  fit.replay_error = scores[best].replay_error;
  fit.scores = std::move(scores);
  return fit;
}

double default_laguerre_sigma(const SampledFunction& c) {
  const DecayFit d = fit_exponential_bound(c);
  if (!d.decays) throw NumericalError("laguerre scale: correlation shows no exponential decay");
  return 2.0 * d.alpha;
}

}  // namespace emz
