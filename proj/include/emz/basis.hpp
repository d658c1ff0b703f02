#pragma once

#include <string>
#include <vector>

namespace emz {

enum class BasisKind { taylor, faber, laguerre };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

// Temporal basis g_n(t) of a memory-kernel expansion.
//   taylor:   g_n(t) = t^n / n!
//   faber:    g_n(t) = exp(-a t) J_n(b t)        (shift a, width b)
//   laguerre: g_n(t) = L_n(sigma t) exp(-sigma t / 2)
struct BasisSpec {
  BasisKind kind = BasisKind::taylor;
  double shift = 0.0;  // a (faber)
  double width = 0.0;  // b (faber)
  double sigma = 0.0;  // laguerre time scale

  static BasisSpec taylor() { return {}; }
  static BasisSpec faber(double a, double b) { return {BasisKind::faber, a, b, 0.0}; }
  static BasisSpec laguerre(double sigma) { return {BasisKind::laguerre, 0.0, 0.0, sigma}; }

  void validate() const;

  // g_0(t), ..., g_order(t).
  std::vector<double> evaluate(int order, double t) const;
};

// Bessel function of the first kind J_n(x), n >= 0. Ascending series for
// |x| <= 1, Miller's downward recurrence normalized by
// J_0 + 2 sum_k J_2k = 1 otherwise.
double bessel_j(int n, double x);

// J_0(x), ..., J_order(x) in one sweep.
std::vector<double> bessel_j_all(int order, double x);

// Laguerre function phi_n(t) = L_n(sigma t) exp(-sigma t / 2); the family is
// orthogonal on [0, inf) with norm 1/sigma.
double laguerre_basis(int n, double sigma, double t);
std::vector<double> laguerre_basis_all(int order, double sigma, double t);

}  // namespace emz
