#pragma once

#include <vector>

#include <Eigen/Dense>

#include "emz/basis.hpp"
#include "emz/chain_spec.hpp"
#include "emz/kernel_model.hpp"
#include "emz/poly.hpp"
#include "emz/sim.hpp"

namespace emz {

// gamma_n = <K^n u0, u0> / <u0, u0> for n = 1..n_max, evaluated through the
// split form <K^ceil(n/2) u0, (K*)^floor(n/2) u0>.
std::vector<double> gamma_coefficients(const SparsePoly& u0, int n_max, const ChainSpec& spec,
                                       int max_degree = kDefaultMaxDegree);

// mu_1 = gamma_1, mu_n = gamma_n - sum_{j=1}^{n-1} mu_{n-j} gamma_j.
std::vector<double> mu_from_gamma(const std::vector<double>& gamma);

// M_n = Gamma_n - sum_{i=1}^{n-1} Gamma_{n-i} M_i, with the convention
// P K^n u_l = sum_j (Gamma_n)_{lj} u_j.
std::vector<Eigen::MatrixXd> mu_from_gamma_matrix(const std::vector<Eigen::MatrixXd>& gamma);

// Monomial coefficients c[n][j] of the Faber polynomials Phi_0..Phi_order of
// the map psi(w) = -a + (b/2)(w - 1/w), normalized so that
//   exp(t x) = sum_n exp(-a t) J_n(b t) Phi_n(x).
// With z = (2/b)(x + a): Phi_0 = 1, Phi_1 = z, Phi_2 = z Phi_1 + 2,
// Phi_{n+1} = z Phi_n + Phi_{n-1} for n >= 2.
std::vector<std::vector<double>> faber_polynomials(int order, double a, double b);

// Expansion coefficients of K(t) from mu_1, mu_2, ... (mu.size() >= order + 2).
// taylor pairs mu_{n+2} with t^n/n!; faber uses k_n = sum_j c[n][j] mu_{j+2}.
KernelModel kernel_from_mu(const std::vector<double>& mu, const BasisSpec& basis, int order);

// a = -gamma_1, b = 2 sqrt(max(0, gamma_1^2 - gamma_2)).
BasisSpec default_faber_basis(const std::vector<double>& gamma);

// Polynomial form of an FPU observable r_j^k or p_j^k.
SparsePoly observable_polynomial(const Observable& u);

struct FirstPrincipleFit {
  std::vector<double> gamma;  // gamma_1 .. gamma_{order+2}
  std::vector<double> mu;
  double c0 = 0.0;  // <u0, u0>
  KernelModel model;
};

// Whole first-principle route for one observable. A faber basis with zero
// shift and width takes default_faber_basis.
FirstPrincipleFit fit_kernel_first_principle(const ChainSpec& spec, const Observable& u,
                                             const BasisSpec& basis, int order,
                                             int max_degree = kDefaultMaxDegree);

}  // namespace emz
