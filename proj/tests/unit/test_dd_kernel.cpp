#include <doctest.h>

#include <cmath>

#include "emz/basis.hpp"
#include "emz/dd_kernel.hpp"
#include "emz/errors.hpp"
#include "emz/gle.hpp"

using namespace emz;

namespace {

SampledFunction sampled(double dt, int points, double (*f)(double)) {
  SampledFunction s;
  s.dt = dt;
  for (int i = 0; i < points; ++i) s.values.push_back(f(i * dt));
  return s;
}

// K = g_0 - 0.5 g_2 in the Laguerre basis with sigma = 1, omega = -0.5.
KernelModel manufactured() {
  KernelModel k;
  k.omega = -0.5;
  k.basis = BasisSpec::laguerre(1.0);
  k.coeffs = {1.0, 0.0, -0.5};
  return k;
}

}  // namespace

TEST_CASE("fourth-order derivative") {
  std::vector<double> e2, e4;
  for (double dt : {0.02, 0.01}) {
    std::vector<double> v;
    for (int i = 0; i <= static_cast<int>(1.0 / dt); ++i) v.push_back(std::sin(3.0 * i * dt));
    const auto d = derivative4(v, dt);
    double e = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) e = std::max(e, std::abs(d[i] - 3.0 * std::cos(3.0 * i * dt)));
    e4.push_back(e);
  }
  CHECK(e4[0] / e4[1] > 14.0);
  CHECK_THROWS_AS(derivative4({1.0, 2.0, 3.0}, 0.1), ConfigError);
}

TEST_CASE("regression assembly") {
  SampledFunction zero;
  zero.dt = 0.1;
  zero.values.assign(40, 0.0);
  const auto r0 = assemble_regression(zero, -1.0, BasisSpec::laguerre(1.0), 4);
  CHECK(r0.x.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r0.y.cwiseAbs().maxCoeff() == 0.0);

  // C = exp(omega t) solves the memoryless equation: y vanishes
  const auto c = sampled(0.01, 501, [](double t) { return std::exp(-0.7 * t); });
  const auto r = assemble_regression(c, -0.7, BasisSpec::laguerre(1.0), 3);
  CHECK(r.y.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(r.x.rows() == 501);
  CHECK(r.x.cols() == 4);
  CHECK(r.x.row(0).cwiseAbs().maxCoeff() == 0.0);

  // too few samples for the requested order
  CHECK_THROWS_AS(assemble_regression(sampled(0.1, 12, [](double t) { return t; }), 0.0,
                                      BasisSpec::laguerre(1.0), 3),
                  ConfigError);
  const auto w = assemble_regression(c, -0.7, BasisSpec::laguerre(1.0), 3, 2.0);
  CHECK(w.x(300, 1) == doctest::Approx(r.x(300, 1) * std::exp(-3.0)).epsilon(1e-12));
}

TEST_CASE("manufactured kernel satisfies the regression") {
  const double dt = 1e-3;
  const auto k = manufactured();
  const auto c = solve_projected_gle(k, 1.0, dt, 10000);
  const auto r = assemble_regression(c, k.omega, k.basis, 2);
  Eigen::Vector3d kv(1.0, 0.0, -0.5);
  CHECK((r.y - r.x * kv).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("LASSO") {
  NormalStream rng(3, 0);
  const int rows = 200, cols = 6;
  Eigen::MatrixXd x(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) x(i, j) = rng() * (1.0 + j);
  Eigen::VectorXd truth(cols);
  truth << 1.0, 0.0, -2.0, 0.5, 0.0, 3.0;
  const Eigen::VectorXd y = x * truth;

  SUBCASE("lambda = 0 recovers the exact coefficients") {
    const auto f = lasso_fit(x, y, 0.0);
    CHECK((f.coeffs - truth).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(f.kkt_residual < 1e-8);
    CHECK(f.converged);
  }
  SUBCASE("KKT conditions at the optimum") {
    for (double lambda : {1e-3, 0.1, 1.0}) {
      const auto f = lasso_fit(x, y, lambda);
      CHECK(f.kkt_residual < 1e-8);
      CHECK(f.max_change < kLassoTolerance);
    }
  }
  SUBCASE("large lambda zeroes everything") {
    const auto f = lasso_fit(x, y, 1e6);
    CHECK(f.coeffs.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("single unit-scale column is soft thresholding") {
    Eigen::MatrixXd c(4, 1);
    c << 1.0, -1.0, 1.0, -1.0;
    Eigen::VectorXd v(4);
    v << 2.0, -1.0, 0.5, 0.5;
    const double z = c.col(0).dot(v) / 4.0;  // 0.75
    CHECK(lasso_fit(c, v, 0.25).coeffs[0] == doctest::Approx(0.5));
    CHECK(lasso_fit(c, v, 1.0).coeffs[0] == 0.0);
    CHECK(lasso_fit(c, v, 0.0).coeffs[0] == doctest::Approx(z));
  }
  SUBCASE("bad input") {
    Eigen::VectorXd bad = y;
    bad[3] = std::nan("");
    CHECK_THROWS_AS(lasso_fit(x, bad, 0.0), NumericalError);
    CHECK_THROWS_AS(lasso_fit(x, y, -1.0), ConfigError);
    CHECK_THROWS_AS(lasso_fit(x, y.head(10), 0.0), ConfigError);
  }
  SUBCASE("zero column") {
    Eigen::MatrixXd z = x;
    z.col(1).setZero();
    const auto f = lasso_fit(z, y - x.col(1) * truth[1], 0.0);
    CHECK(f.coeffs[1] == 0.0);
  }
}

TEST_CASE("data-driven fit recovers a manufactured kernel") {
  const double dt = 1e-3;
  const auto k = manufactured();
  const auto c = solve_projected_gle(k, 1.0, dt, 10000);
  const auto fit = fit_kernel_dd(c, k.omega, k.basis, 2, {0.0, 1e-8, 1e-6});
  CHECK(fit.replay_error < 1e-3);
  REQUIRE(fit.model.coeffs.size() == 3);
  CHECK(std::abs(fit.model.coeffs[0] - 1.0) < 1e-3);
  CHECK(std::abs(fit.model.coeffs[1]) < 1e-3);
  CHECK(std::abs(fit.model.coeffs[2] + 0.5) < 1e-3);
  CHECK(fit.scores.size() == 3);
  CHECK(fit.model.observable.c0 == 1.0);
  CHECK_THROWS_AS(fit_kernel_dd(c, k.omega, k.basis, 2, {}), ConfigError);
}

TEST_CASE("Laguerre expansion converges for a smooth kernel") {
  // K(t) = -exp(-t) cos(t), not a finite Laguerre sum
  const double dt = 0.005;
  const auto c = solve_projected_gle_matrix(
      Eigen::MatrixXd::Constant(1, 1, -0.3),
      [](double t) { return Eigen::MatrixXd::Constant(1, 1, -std::exp(-t) * std::cos(t)); },
      Eigen::MatrixXd::Identity(1, 1), dt, 3000);
  SampledFunction cs;
  cs.dt = dt;
  for (const auto& m : c.values) cs.values.push_back(m(0, 0));
  std::vector<double> err;
  for (int order : {1, 4, 8}) {
    const auto fit = fit_kernel_dd(cs, -0.3, BasisSpec::laguerre(2.0), order, {0.0});
    double e = 0.0;
    for (int i = 0; i < 3000; i += 10) {
      const double t = i * dt;
      e = std::max(e, std::abs(fit.model(t) + std::exp(-t) * std::cos(t)));
    }
    err.push_back(e);
  }
  CHECK(err[1] < err[0]);
  CHECK(err[2] < err[1]);
  CHECK(err[2] < 0.1 * err[0]);
}

TEST_CASE("OU correlation yields a vanishing kernel") {
  // free sites (nu = theta = 0): every p_j is an OU process with C(t) = exp(-t)
  ChainSpec spec = ChainSpec::fpu(4, 1.0, 0.0, 0.0, 1.0, 1.0);
  const double dt = 0.01;
  const int steps = 400, batches = 32, per_batch = 500;
  std::vector<Eigen::VectorXd> coeffs;
  SampledFunction all;
  all.dt = dt;
  all.values.assign(steps + 1, 0.0);
  for (int b = 0; b < batches; ++b) {
    SampledFunction c;
    c.dt = dt;
    c.values.assign(steps + 1, 0.0);
    for (int path = 0; path < per_batch; ++path) {
      NormalStream rng(21, b * per_batch + path);
      ChainState s;
      s.x.assign(4, 0.0);
      s.p.resize(4);
      for (double& p : s.p) p = rng();
      const double p0 = s.p[0];
      c.values[0] += p0 * p0;
      for (int k = 1; k <= steps; ++k) {
        step_fpu(s, spec, dt, rng);
        c.values[k] += p0 * s.p[0];
      }
    }
    for (int k = 0; k <= steps; ++k) {
      all.values[k] += c.values[k] / (batches * per_batch);
      c.values[k] /= per_batch;
    }
    const auto r = assemble_regression(c, -1.0, BasisSpec::laguerre(2.0), 3);
    coeffs.push_back(lasso_fit(r.x, r.y, 0.0).coeffs);
  }
  const auto r = assemble_regression(all, -1.0, BasisSpec::laguerre(2.0), 3);
  const Eigen::VectorXd k = lasso_fit(r.x, r.y, 0.0).coeffs;
  for (int n = 0; n < 4; ++n) {
    double m = 0.0, v = 0.0;
    for (const auto& c : coeffs) m += c[n] / batches;
    for (const auto& c : coeffs) v += (c[n] - m) * (c[n] - m) / (batches - 1);
    const double floor = std::sqrt(v / batches);
    CHECK(std::abs(k[n]) <= 3.0 * floor);
  }
}

TEST_CASE("default Laguerre scale") {
  const auto c = sampled(0.01, 1001, [](double t) { return std::exp(-0.4 * t); });
  CHECK(default_laguerre_sigma(c) == doctest::Approx(0.8).epsilon(1e-6));
}
