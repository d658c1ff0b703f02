#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include <boost/math/tools/roots.hpp>

#include "emz/errors.hpp"
#include "emz/gle.hpp"

using namespace emz;

namespace {

SampledFunction covariance(double dt, int points, const std::function<double(double)>& r) {
  SampledFunction f;
  f.dt = dt;
  for (int i = 0; i < points; ++i) f.values.push_back(r(i * dt));
  return f;
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  boost::math::tools::eps_tolerance<double> tol(50);
  const auto r = boost::math::tools::bisect(f, lo, hi, tol);
  return 0.5 * (r.first + r.second);
}

}  // namespace

TEST_CASE("constant covariance has rank one") {
  const auto kl = kl_decompose(covariance(0.01, 201, [](double) { return 3.0; }), 5);
  REQUIRE(kl.modes() == 5);
  CHECK(kl.eigenvalues[0] == doctest::Approx(3.0 * 2.0).epsilon(1e-12));
  for (int k = 1; k < 5; ++k) CHECK(std::abs(kl.eigenvalues[k]) < 1e-12);
  for (int i = 0; i < 201; i += 20) CHECK(kl.eigenfunctions(i, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(kl.horizon() == doctest::Approx(2.0));
}

TEST_CASE("exponential covariance matches the transcendental spectrum") {
  // R(tau) = exp(-|tau|) on [0, T]: lambda = 2 / (1 + w^2) with
  // w tan(w a) = 1 (even) or w cot(w a) = -1 (odd), a = T / 2.
  const double t_end = 2.0, a = 1.0;
  const int n = 2048;
  const auto kl = kl_decompose(covariance(t_end / (n - 1), n, [](double t) { return std::exp(-t); }), 8);
  std::vector<double> exact;
  const double pi = std::acos(-1.0);
  for (int k = 0; k < 6; ++k) {
    const double e = 1e-12;
    exact.push_back(bisect([&](double w) { return w * std::tan(w * a) - 1.0; }, k * pi / a + e,
                           (k + 0.5) * pi / a - e));
    exact.push_back(bisect([&](double w) { return w / std::tan(w * a) + 1.0; },
                           (k + 0.5) * pi / a + e, (k + 1) * pi / a - e));
  }
  for (double& w : exact) w = 2.0 / (1.0 + w * w);
  std::sort(exact.rbegin(), exact.rend());
  for (int k = 0; k < 8; ++k) CHECK(std::abs(kl.eigenvalues[k] - exact[k]) < 1e-4);
  CHECK(kl.lambda_max == doctest::Approx(kl.eigenvalues[0]));
}

TEST_CASE("KL eigenfunctions and truncation error") {
  const int n = 300;
  const double dt = 0.02;
  const auto r = [](double t) { return std::exp(-0.5 * t) * std::cos(2.0 * t); };
  const auto cov = covariance(dt, n, r);
  for (int modes : {3, 10, 40}) {
    const auto kl = kl_decompose(cov, modes);
    const auto w = kl.trapezoid_weights();
    // weighted orthonormality
    Eigen::MatrixXd g = kl.eigenfunctions.transpose() * Eigen::VectorXd::Map(w.data(), n).asDiagonal() *
                        kl.eigenfunctions;
    CHECK((g - Eigen::MatrixXd::Identity(modes, modes)).cwiseAbs().maxCoeff() < 1e-8);
    // weighted Frobenius error of the truncated expansion is bounded by the discarded trace
    double err = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < modes; ++k)
          s += kl.eigenvalues[k] * kl.eigenfunctions(i, k) * kl.eigenfunctions(j, k);
        const double d = cov.values[std::abs(i - j)] - s;
        err += w[i] * w[j] * d * d;
      }
    CHECK(std::sqrt(err) <= kl.discarded_trace * (1.0 + 1e-8) + 1e-12);
    for (int k = 1; k < modes; ++k) CHECK(kl.eigenvalues[k] <= kl.eigenvalues[k - 1]);
  }
}

TEST_CASE("non-PSD covariance is rejected") {
  CHECK_THROWS_AS(kl_decompose(covariance(0.01, 301, [](double t) { return 1.0 - t; }), 4),
                  NumericalError);
  CHECK_THROWS_AS(kl_decompose(covariance(0.01, 2, [](double) { return 1.0; }), 1), ConfigError);
  CHECK_THROWS_AS(kl_decompose(covariance(0.01, 20, [](double) { return 1.0; }), 21), ConfigError);
}

TEST_CASE("sampled fluctuations carry the target covariance") {
  const int n = 101;
  const auto cov = covariance(0.05, n, [](double t) { return std::exp(-t); });
  const auto kl = kl_decompose(cov, 60);
  const int draws = 20000;
  std::vector<double> mean(n, 0.0), c00(n, 0.0), c0k(n, 0.0);
  for (int d = 0; d < draws; ++d) {
    NormalStream rng(11, d);
    const auto f = sample_fluctuation(kl, rng);
    for (int i = 0; i < n; ++i) {
      mean[i] += f[i];
      c0k[i] += f[0] * f[i];
    }
  }
  // the KL expansion is exact up to the discarded trace, MC error ~ sqrt(2/draws)
  const double tol = 4.0 * std::sqrt(2.0 / draws) + 0.02;
  for (int i = 0; i < n; i += 10) {
    CHECK(std::abs(mean[i] / draws) < 4.0 / std::sqrt(draws));
    CHECK(std::abs(c0k[i] / draws - cov[i]) < tol);
  }
  KLModel empty = kl_decompose(cov, 0);
  NormalStream rng(1, 0);
  const auto z = sample_fluctuation(empty, rng);
  CHECK(std::all_of(z.values.begin(), z.values.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("fluctuation covariance from a kernel") {
  KernelModel k;
  k.basis = BasisSpec::laguerre(2.0);
  k.coeffs = {-1.5};
  const auto r = fluctuation_covariance(k, 2.0, 0.1, 5);
  for (int i = 0; i < 5; ++i) CHECK(r[i] == doctest::Approx(3.0 * std::exp(-0.1 * i)));
}
