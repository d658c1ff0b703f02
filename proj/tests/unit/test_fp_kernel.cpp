#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "emz/errors.hpp"
#include "emz/fp_kernel.hpp"
#include "linear_chain.hpp"

using namespace emz;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  return m;
}

// Orthonormal n x k basis from a random Gaussian matrix.
Eigen::MatrixXd random_frame(std::mt19937_64& rng, int n, int k) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = g(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
}

}  // namespace

TEST_CASE("gamma coefficients: examples") {
  const ChainSpec s = ChainSpec::fpu(10, 1.0, 1.0, 1.0, 1.0, 1.0);
  const auto gp = gamma_coefficients(SparsePoly::variable(VarKind::p, 4), 3, s);
  CHECK(gp[0] == doctest::Approx(-1.0).epsilon(1e-14));
  const auto gr = gamma_coefficients(SparsePoly::variable(VarKind::r, 4), 3, s);
  CHECK(gr[0] == 0.0);
  const ChainSpec lin = ChainSpec::fpu(10, 1.0, 1.0, 0.0, 1.0, 1.0);
  const auto gl = gamma_coefficients(SparsePoly::variable(VarKind::p, 4), 2, lin);
  CHECK(gl[1] == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("mu recurrence") {
  CHECK(mu_from_gamma({0.7}) == std::vector<double>{0.7});
  const auto mu = mu_from_gamma({-1.0, -1.0});
  CHECK(mu[0] == -1.0);
  CHECK(mu[1] == -2.0);
  for (double m : mu_from_gamma(std::vector<double>(6, 0.0))) CHECK(m == 0.0);
  CHECK_THROWS(mu_from_gamma({}));
}

TEST_CASE("matrix mu recurrence") {
  std::mt19937_64 rng(3);
  SUBCASE("reduces to the scalar recurrence") {
    std::vector<double> g{0.3, -1.2, 2.5, 0.1, -0.7};
    std::vector<Eigen::MatrixXd> gm;
    for (double v : g) gm.push_back(Eigen::MatrixXd::Constant(1, 1, v));
    const auto mm = mu_from_gamma_matrix(gm);
    const auto ms = mu_from_gamma(g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(mm[i](0, 0) == doctest::Approx(ms[i]).epsilon(1e-15));
  }
  SUBCASE("projected moments of a random operator") {
    // Operator L on R^7, observables u_1..u_3 orthonormal. With
    //   (Gamma_n)_{lj} = <u_j, L^n u_l>,  (M_n)_{lj} = <u_j, L (QL)^{n-1} u_l>
    // the recurrence must reproduce M_n exactly.
    const int d = 7, m = 3, n_max = 7;
    const Eigen::MatrixXd L = random_matrix(rng, d) * 0.5;
    const Eigen::MatrixXd U = random_frame(rng, d, m);
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(d, d) - U * U.transpose();
    std::vector<Eigen::MatrixXd> gamma, oracle;
    Eigen::MatrixXd Ln = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd QLn = Eigen::MatrixXd::Identity(d, d);
    for (int n = 1; n <= n_max; ++n) {
      Ln = L * Ln;
      gamma.push_back((U.transpose() * Ln * U).transpose());
      oracle.push_back((U.transpose() * L * QLn * U).transpose());
      QLn = Q * L * QLn;
    }
    const auto mu = mu_from_gamma_matrix(gamma);
    for (int n = 0; n < n_max; ++n) CHECK((mu[n] - oracle[n]).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("zero input") {
    for (const auto& z : mu_from_gamma_matrix(std::vector<Eigen::MatrixXd>(4, Eigen::MatrixXd::Zero(2, 2))))
      CHECK(z.isZero(0.0));
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS(mu_from_gamma_matrix({Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(3, 3)}));
  }
}

TEST_CASE("projection identity P K (QK)^q") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 7;
    const int rank = 1 + trial % std::min(3, n - 1);
    const Eigen::MatrixXd K = random_matrix(rng, n);
    const Eigen::MatrixXd U = random_frame(rng, n, rank);
    const Eigen::MatrixXd P = U * U.transpose();
    const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n) - P;
    for (int q = 0; q <= 6; ++q) {
      Eigen::MatrixXd lhs = P * K;
      for (int i = 0; i < q; ++i) lhs = lhs * Q * K;
      Eigen::MatrixXd rhs = P * K.pow(q + 1);
      Eigen::MatrixXd pkqk = P * K;  // P K (QK)^{i-1}
      for (int i = 1; i <= q; ++i) {
        rhs -= pkqk * P * K.pow(q - i + 1);
        pkqk = pkqk * Q * K;
      }
      const double scale = std::max(1.0, lhs.cwiseAbs().maxCoeff());
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() / scale < 1e-10);
    }
  }
}

TEST_CASE("linear chain cumulants match the Lyapunov oracle") {
  for (int n : {2, 3, 4, 6}) {
    for (int site : {0, n - 1}) {
      ChainSpec s = ChainSpec::fpu(n, 1.3, 0.8, 0.0, 1.7, 0.0);
      for (int j = 0; j < n; ++j) s.gamma[j] = 0.2 + 0.3 * j;
      const testing::LinearChain lc(s);
      CHECK(lc.lyapunov_residual() < 1e-13);
      for (VarKind kind : {VarKind::p, VarKind::r}) {
        const auto g = gamma_coefficients(SparsePoly::variable(kind, site), 8, s);
        const auto oracle = lc.gamma(kind, site, 8);
        for (int k = 0; k < 8; ++k)
          CHECK(std::abs(g[k] - oracle[k]) < 1e-10 * std::max(1.0, std::abs(oracle[k])));
      }
    }
  }
}

TEST_CASE("Faber polynomials reproduce exp(tx) through the Bessel series") {
  const double a = 0.8, b = 1.3;
  const auto phi = faber_polynomials(30, a, b);
  for (double x : {-0.8, -1.5, 0.1, -0.3}) {
    for (double t : {0.0, 0.5, 2.0, 4.0}) {
      const auto jn = bessel_j_all(30, b * t);
      double sum = 0.0;
      for (int n = 0; n <= 30; ++n) {
        double pn = 0.0;
        for (std::size_t j = phi[n].size(); j-- > 0;) pn = pn * x + phi[n][j];
        sum += std::exp(-a * t) * jn[n] * pn;
      }
      CHECK(std::abs(sum - std::exp(t * x)) < 1e-10 * std::max(1.0, std::exp(t * x)));
    }
  }
}

TEST_CASE("Faber kernel matches the matrix-exponential oracle") {
  // Observable u = e_0 of R^8 with the Euclidean inner product; the
  // orthogonal dynamics QA acts on range(Q) as the lower-right block, built
  // with eigenvalues -a + i y, |y| < b, on the Faber segment.
  std::mt19937_64 rng(7);
  const int d = 8;
  const double a = 1.0, b = 1.5;
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(d - 1, d - 1);
  const double ys[3] = {0.4, 0.9, 1.3};
  for (int k = 0; k < 3; ++k) {
    block(2 * k, 2 * k) = block(2 * k + 1, 2 * k + 1) = -a;
    block(2 * k, 2 * k + 1) = ys[k];
    block(2 * k + 1, 2 * k) = -ys[k];
  }
  block(d - 2, d - 2) = -a;
  const Eigen::MatrixXd V = random_frame(rng, d - 1, d - 1);
  Eigen::MatrixXd A = random_matrix(rng, d) * 0.6;
  A.bottomRightCorner(d - 1, d - 1) = V * block * V.transpose();

  Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
  u[0] = 1.0;
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(d, d) - u * u.transpose();
  std::vector<double> gamma;
  Eigen::VectorXd v = u;
  for (int n = 1; n <= 24; ++n) {
    v = A * v;
    gamma.push_back(u.dot(v));
  }
  const auto mu = mu_from_gamma(gamma);
  const KernelModel faber = kernel_from_mu(mu, BasisSpec::faber(a, b), 20);
  const KernelModel taylor = kernel_from_mu(mu, BasisSpec::taylor(), 20);
  CHECK(faber.omega == doctest::Approx(gamma[0]));
  const Eigen::MatrixXd QA = Q * A;
  double err = 0.0, err_taylor = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double t = 0.05 * i;
    const double exact = u.dot(A * (QA * t).exp() * QA * u);
    err = std::max(err, std::abs(faber(t) - exact));
    if (t <= 2.0) err_taylor = std::max(err_taylor, std::abs(taylor(t) - faber(t)));
  }
  CHECK(err < 1e-6);
  CHECK(err_taylor < 1e-6);
}

TEST_CASE("Taylor kernel examples and errors") {
  const KernelModel k = kernel_from_mu({-1.0, -2.0, 0.0, 0.0}, BasisSpec::taylor(), 2);
  CHECK(k(0.0) == -2.0);
  CHECK(k.omega == -1.0);
  const KernelModel z = kernel_from_mu(std::vector<double>(6, 0.0), BasisSpec::taylor(), 4);
  CHECK(z(1.3) == 0.0);
  CHECK_THROWS(kernel_from_mu({1.0, 2.0}, BasisSpec::taylor(), 3));
}

TEST_CASE("GLE Taylor coefficients recover the cumulants") {
  // C' = Omega C + int K C gives C^{(n+1)}(0) = Omega C^{(n)}(0)
  // + sum_k K^{(k)}(0) C^{(n-1-k)}(0); with K^{(k)}(0) = mu_{k+2} this must
  // return gamma_n.
  for (double theta : {0.0, 0.1, 1.0}) {
    const ChainSpec s = ChainSpec::fpu(20, 1.0, 1.0, theta, 1.0, 1.0);
    const auto g = gamma_coefficients(SparsePoly::variable(VarKind::p, 7), 10, s);
    const auto mu = mu_from_gamma(g);
    std::vector<double> c{1.0};
    for (int n = 0; n < 10; ++n) {
      double next = mu[0] * c[n];
      for (int k = 0; k <= n - 1; ++k) next += mu[k + 1] * c[n - 1 - k];
      c.push_back(next);
    }
    for (int n = 1; n <= 10; ++n)
      CHECK(std::abs(c[n] - g[n - 1]) < 1e-9 * std::max(1.0, std::abs(g[n - 1])));
  }
}

TEST_CASE("first-principle route") {
  const ChainSpec s = ChainSpec::fpu(100, 1.0, 1.0, 0.0, 1.0, 1.0);
  const auto fit = fit_kernel_first_principle(s, Observable::parse("p50"), BasisSpec::faber(0, 0), 14);
  CHECK(fit.gamma.size() == 16);
  CHECK(fit.c0 == doctest::Approx(1.0));
  CHECK(fit.model.omega == doctest::Approx(-1.0));
  CHECK(fit.model.basis.shift == doctest::Approx(1.0));
  CHECK(fit.model.basis.width == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(fit.model.observable.name == "p50");
  CHECK_THROWS_AS(fit_kernel_first_principle(s, Observable::parse("p150"), BasisSpec::taylor(), 4),
                  ConfigError);
}
