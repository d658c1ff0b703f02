#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "emz/chain_spec.hpp"

namespace emz {

enum class VarKind : std::uint8_t { r = 0, p = 1 };

// Variable ids are 2*site + kind, so ascending id orders by site first.
constexpr std::uint32_t var_id(VarKind kind, int site) {
  return 2u * static_cast<std::uint32_t>(site) + static_cast<std::uint32_t>(kind);
}
constexpr VarKind var_kind(std::uint32_t id) { return static_cast<VarKind>(id & 1u); }
constexpr int var_site(std::uint32_t id) { return static_cast<int>(id >> 1); }

// Sparse exponent multi-index: (variable id, exponent) pairs packed as
// id << 8 | exponent, strictly ascending in id, exponents in [1, 255].
class Monomial {
 public:
  Monomial() = default;

  static Monomial single(std::uint32_t id, int exponent);

  int exponent(std::uint32_t id) const;
  int total_degree() const;
  bool is_constant() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  std::uint32_t id_at(std::size_t i) const { return entries_[i] >> 8; }
  int exponent_at(std::size_t i) const { return static_cast<int>(entries_[i] & 0xffu); }

  // Returns a copy with the exponent of `id` shifted by `delta`; entries that
  // reach zero are dropped. Negative results are a contract violation.
  Monomial shifted(std::uint32_t id, int delta) const;
  Monomial operator*(const Monomial& other) const;

  // Ids whose exponent is odd; used to bucket terms whose product can have a
  // nonzero symmetric expectation.
  std::vector<std::uint32_t> odd_ids() const;

  std::string to_string() const;

  bool operator==(const Monomial& other) const { return entries_ == other.entries_; }
  bool operator<(const Monomial& other) const { return entries_ < other.entries_; }

  std::size_t hash() const;

 private:
  std::vector<std::uint32_t> entries_;
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const { return m.hash(); }
};

// Real polynomial in the chain variables (r_0..r_{N-1}, p_0..p_{N-1}).
// Terms never carry an exactly-zero coefficient.
class SparsePoly {
 public:
  using TermMap = std::unordered_map<Monomial, double, MonomialHash>;

  SparsePoly() = default;

  static SparsePoly constant(double c);
  static SparsePoly variable(VarKind kind, int site, int power = 1);
  static SparsePoly monomial(const Monomial& m, double c);

  void add_term(const Monomial& m, double c);

  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  double coefficient(const Monomial& m) const;
  int degree() const;
  int max_site() const;

  // Terms sorted by monomial; deterministic ordering for printing and hashing.
  std::vector<std::pair<Monomial, double>> sorted_terms() const;
  std::string to_string() const;

  SparsePoly& operator+=(const SparsePoly& other);
  SparsePoly& operator-=(const SparsePoly& other);
  SparsePoly& operator*=(double s);
  friend SparsePoly operator+(SparsePoly a, const SparsePoly& b) { return a += b; }
  friend SparsePoly operator-(SparsePoly a, const SparsePoly& b) { return a -= b; }
  friend SparsePoly operator*(SparsePoly a, double s) { return a *= s; }
  friend SparsePoly operator*(double s, SparsePoly a) { return a *= s; }
  SparsePoly operator*(const SparsePoly& other) const;

  // Maximum |coefficient difference| over the union of supports.
  double max_abs_difference(const SparsePoly& other) const;

 private:
  TermMap terms_;
};

enum class Direction { forward, adjoint };

constexpr int kDefaultMaxDegree = 64;

// Exact action of the FPU Kolmogorov backward operator
//   K  = L(p, r) + S(p)        (forward)
//   K* = -L(p, r) + S(p)       (adjoint in L^2 of the Gibbs product measure)
// on a polynomial. Throws ResourceError if a produced term exceeds
// `max_degree`, std::invalid_argument for variables outside the chain.
SparsePoly apply_kolmogorov(const SparsePoly& poly, const ChainSpec& spec, Direction direction,
                            int max_degree = kDefaultMaxDegree);

// 1-D marginal moments of the Gibbs product measure. Momentum moments are
// closed form; r-moments use adaptive Gauss-Kronrod quadrature (or the
// Gaussian closed form when theta == 0) and are memoized. Safe for
// concurrent use.
class GibbsMoments {
 public:
  explicit GibbsMoments(const ChainSpec& spec);

  double p_moment(int s) const;
  double r_moment(int m) const;
  double monomial(const Monomial& mono) const;

  // Support radius used for the r quadrature at exponent m.
  double r_cutoff(int m) const;

 private:
  double mass_;
  double beta_;
  double nu_;
  double theta_;
  mutable std::mutex mutex_;
  mutable std::map<int, double> r_cache_;
};

// Shared per-(mass, beta, nu, theta) moment table.
std::shared_ptr<const GibbsMoments> gibbs_moments_for(const ChainSpec& spec);

// E_eq[poly] under the Gibbs product measure.
double gibbs_expectation(const SparsePoly& poly, const ChainSpec& spec);

// <f, g>_eq = E_eq[f g], computed without materializing the product.
double gibbs_inner(const SparsePoly& f, const SparsePoly& g, const ChainSpec& spec);

struct SiteWindow {
  std::vector<int> r_sites;
  std::vector<int> p_sites;
};

// Sites that may appear in K^n r_j: r in j +- floor(n/2), p in
// [j - floor((n+1)/2), j + floor((n-1)/2)], all modulo the chain length.
SiteWindow monomial_degree_window(int n, int site, int chain_length);

}  // namespace emz
