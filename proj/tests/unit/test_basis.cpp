#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include "emz/basis.hpp"
#include "emz/errors.hpp"
#include "emz/kernel_model.hpp"

using namespace emz;

TEST_CASE("Bessel J: special values and normalization") {
  CHECK(bessel_j(0, 0.0) == 1.0);
  for (int n = 1; n < 10; ++n) CHECK(bessel_j(n, 0.0) == 0.0);
  const auto j = bessel_j_all(60, 1.7);
  double s = j[0];
  for (int k = 2; k <= 60; k += 2) s += 2.0 * j[k];
  CHECK(std::abs(s - 1.0) < 1e-12);
}

TEST_CASE("Bessel J agrees with an independent implementation") {
  // boost rather than std::cyl_bessel_j: the latter is only good to ~3e-12
  // near the zeros at large x.
  double worst = 0.0;
  for (int n = 0; n <= 40; ++n)
    for (double x = 0.0; x <= 40.0; x += 0.37) {
      const double ref = boost::math::cyl_bessel_j(n, x);
      const double got = bessel_j(n, x);
      worst = std::max(worst, std::abs(got - ref) / std::max(1e-3, std::abs(ref)));
      const double neg = bessel_j(n, -x);
      CHECK(neg == doctest::Approx((n % 2 ? -1.0 : 1.0) * got).epsilon(1e-15));
    }
  CHECK(worst < 1e-12);
  // one sweep gives the same values as single evaluations
  const auto all = bessel_j_all(25, 13.3);
  for (int n = 0; n <= 25; ++n) CHECK(all[n] == doctest::Approx(bessel_j(n, 13.3)).epsilon(1e-14));
}

TEST_CASE("Laguerre functions") {
  CHECK(laguerre_basis(0, 2.0, 0.0) == 1.0);
  CHECK(std::abs(laguerre_basis(1, 1.0, 1.0)) < 1e-16);
  CHECK(laguerre_basis(2, 1.0, 3.0) == doctest::Approx((1.0 - 6.0 + 4.5) * std::exp(-1.5)));

  boost::math::quadrature::exp_sinh<double> es;
  for (double sigma : {0.5, 2.0}) {
    for (int m = 0; m <= 12; m += 3)
      for (int n = 0; n <= 12; n += 4) {
        const double v = es.integrate(
            [&](double t) { return laguerre_basis(m, sigma, t) * laguerre_basis(n, sigma, t); },
            0.0, std::numeric_limits<double>::infinity());
        CHECK(std::abs(v - (m == n ? 1.0 / sigma : 0.0)) < 1e-8);
      }
  }
  CHECK(laguerre_basis(10, 1.0, 1e308) == 0.0);
  const auto all = laguerre_basis_all(15, 0.7, 4.2);
  for (int n = 0; n <= 15; ++n) CHECK(all[n] == doctest::Approx(laguerre_basis(n, 0.7, 4.2)).epsilon(1e-14));
}

TEST_CASE("basis specs") {
  CHECK(basis_kind_from_string("faber") == BasisKind::faber);
  CHECK_THROWS_AS(basis_kind_from_string("chebyshev"), ConfigError);
  CHECK_THROWS_AS(BasisSpec::laguerre(0.0).validate(), ConfigError);
  CHECK_THROWS_AS(BasisSpec::faber(1.0, 0.0).validate(), ConfigError);
  const auto g = BasisSpec::taylor().evaluate(3, 2.0);
  CHECK(g == std::vector<double>{1.0, 2.0, 2.0, 8.0 / 6.0});
  const auto f = BasisSpec::faber(0.5, 2.0).evaluate(2, 1.0);
  CHECK(f[2] == doctest::Approx(std::exp(-0.5) * boost::math::cyl_bessel_j(2, 2.0)).epsilon(1e-13));

  KernelModel k;
  k.basis = BasisSpec::laguerre(1.0);
  k.coeffs = {1.0, 0.0, -0.5};
  const auto s = k.sample(0.5, 3);
  CHECK(s[2] == doctest::Approx(laguerre_basis(0, 1.0, 1.0) - 0.5 * laguerre_basis(2, 1.0, 1.0)));
}
