#include "emz/fp_kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "emz/errors.hpp"

namespace emz {

std::vector<double> gamma_coefficients(const SparsePoly& u0, int n_max, const ChainSpec& spec,
                                       int max_degree) {
  if (n_max < 1) throw std::invalid_argument("gamma_coefficients: n_max must be >= 1");
  const double norm = gibbs_inner(u0, u0, spec);
  if (!(norm > 0.0)) throw std::invalid_argument("gamma_coefficients: <u0, u0> must be > 0");

  std::vector<SparsePoly> fwd{u0};
  std::vector<SparsePoly> adj{u0};
  for (int k = 1; k <= (n_max + 1) / 2; ++k)
    fwd.push_back(apply_kolmogorov(fwd.back(), spec, Direction::forward, max_degree));
  for (int k = 1; k <= n_max / 2; ++k)
    adj.push_back(apply_kolmogorov(adj.back(), spec, Direction::adjoint, max_degree));

  std::vector<double> gamma(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n)
    gamma[n - 1] = gibbs_inner(fwd[(n + 1) / 2], adj[n / 2], spec) / norm;
  return gamma;
}

std::vector<double> mu_from_gamma(const std::vector<double>& gamma) {
  if (gamma.empty()) throw std::invalid_argument("mu_from_gamma: empty input");
  std::vector<double> mu(gamma.size());
  for (std::size_t n = 0; n < gamma.size(); ++n) {
    double v = gamma[n];
    // mu_{n+1} -= sum_{j=1}^{n} mu_{n+1-j} gamma_j  (0-based storage)
    for (std::size_t j = 1; j <= n; ++j) v -= mu[n - j] * gamma[j - 1];
    mu[n] = v;
  }
  return mu;
}

std::vector<Eigen::MatrixXd> mu_from_gamma_matrix(const std::vector<Eigen::MatrixXd>& gamma) {
  if (gamma.empty()) throw std::invalid_argument("mu_from_gamma_matrix: empty input");
  const auto rows = gamma.front().rows();
  for (const auto& g : gamma)
    if (g.rows() != rows || g.cols() != rows)
      throw std::invalid_argument("mu_from_gamma_matrix: dimension mismatch");
  std::vector<Eigen::MatrixXd> mu(gamma.size());
  for (std::size_t n = 0; n < gamma.size(); ++n) {
    Eigen::MatrixXd v = gamma[n];
    for (std::size_t i = 1; i <= n; ++i) v -= gamma[n - i] * mu[i - 1];
    mu[n] = std::move(v);
  }
  return mu;
}

std::vector<std::vector<double>> faber_polynomials(int order, double a, double b) {
  if (order < 0) throw std::invalid_argument("faber_polynomials: negative order");
  if (!(b > 0.0)) throw std::invalid_argument("faber_polynomials: width must be > 0");
  // z = s x + c
  const double s = 2.0 / b;
  const double c = 2.0 * a / b;
  auto times_z = [&](const std::vector<double>& p) {
    std::vector<double> out(p.size() + 1, 0.0);
    for (std::size_t j = 0; j < p.size(); ++j) {
      out[j] += c * p[j];
      out[j + 1] += s * p[j];
    }
    return out;
  };
  std::vector<std::vector<double>> phi;
  phi.push_back({1.0});
  if (order >= 1) phi.push_back({c, s});
  for (int n = 1; n < order; ++n) {
    auto next = times_z(phi[n]);
    // the n = 0 member of the Bessel generating function carries weight 2
    const double w = n == 1 ? 2.0 : 1.0;
    for (std::size_t j = 0; j < phi[n - 1].size(); ++j) next[j] += w * phi[n - 1][j];
    phi.push_back(std::move(next));
  }
  return phi;
}

KernelModel kernel_from_mu(const std::vector<double>& mu, const BasisSpec& basis, int order) {
  if (order < 0) throw std::invalid_argument("kernel_from_mu: negative order");
  if (static_cast<int>(mu.size()) < order + 2)
    throw std::invalid_argument("kernel_from_mu: need " + std::to_string(order + 2) +
                                " cumulants, got " + std::to_string(mu.size()));
  basis.validate();
  KernelModel model;
  model.omega = mu[0];
  model.basis = basis;
  model.coeffs.assign(static_cast<std::size_t>(order + 1), 0.0);
  switch (basis.kind) {
    case BasisKind::taylor:
      for (int n = 0; n <= order; ++n) model.coeffs[n] = mu[n + 1];
      break;
    case BasisKind::faber: {
      const auto phi = faber_polynomials(order, basis.shift, basis.width);
      for (int n = 0; n <= order; ++n) {
        long double k = 0.0L;
        for (std::size_t j = 0; j < phi[n].size(); ++j)
          k += static_cast<long double>(phi[n][j]) * mu[j + 1];
        model.coeffs[n] = static_cast<double>(k);
      }
      break;
    }
    case BasisKind::laguerre:
      throw std::invalid_argument("kernel_from_mu: laguerre is a data-driven basis only");
  }
  for (double k : model.coeffs)
    if (!std::isfinite(k)) throw NumericalError("kernel_from_mu: non-finite coefficient");
  return model;
}

BasisSpec default_faber_basis(const std::vector<double>& gamma) {
  if (gamma.size() < 2) throw std::invalid_argument("default_faber_basis: need gamma_1, gamma_2");
  const double a = -gamma[0];
  const double b = 2.0 * std::sqrt(std::max(0.0, gamma[0] * gamma[0] - gamma[1]));
  return BasisSpec::faber(a, b);
}

SparsePoly observable_polynomial(const Observable& u) {
  switch (u.kind) {
    case Observable::Kind::r: return SparsePoly::variable(VarKind::r, u.site, u.power);
    case Observable::Kind::p: return SparsePoly::variable(VarKind::p, u.site, u.power);
    default: break;
  }
  throw ConfigError("observable " + u.name() + " has no FPU polynomial form");
}

FirstPrincipleFit fit_kernel_first_principle(const ChainSpec& spec, const Observable& u,
                                             const BasisSpec& basis, int order, int max_degree) {
  spec.validate();
  if (spec.kind != ModelKind::fpu_langevin)
    throw ConfigError("first-principle kernels are implemented for the FPU chain only");
  if (order < 0) throw ConfigError("kernel order must be >= 0");
  u.check_against(spec);
  const SparsePoly u0 = observable_polynomial(u);
  FirstPrincipleFit fit;
  fit.c0 = gibbs_inner(u0, u0, spec);
  fit.gamma = gamma_coefficients(u0, order + 2, spec, max_degree);
  fit.mu = mu_from_gamma(fit.gamma);
  BasisSpec b = basis;
  if (b.kind == BasisKind::faber && b.shift == 0.0 && b.width == 0.0) {
    const BasisSpec d = default_faber_basis(fit.gamma);
    b.shift = d.shift;
    b.width = d.width;
  }
  fit.model = kernel_from_mu(fit.mu, b, order);
  fit.model.observable = {u.name(), fit.c0};
  return fit;
}

}  // namespace emz
