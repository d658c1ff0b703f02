#include "emz/poly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "emz/errors.hpp"

namespace emz {

namespace {

constexpr std::uint32_t pack(std::uint32_t id, int exponent) {
  return (id << 8) | static_cast<std::uint32_t>(exponent);
}

}  // namespace

Monomial Monomial::single(std::uint32_t id, int exponent) {
  Monomial m;
  if (exponent > 0) m.entries_.push_back(pack(id, exponent));
  return m;
}

int Monomial::exponent(std::uint32_t id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), pack(id, 0));
  if (it != entries_.end() && (*it >> 8) == id) return static_cast<int>(*it & 0xffu);
  return 0;
}

int Monomial::total_degree() const {
  int d = 0;
  for (auto e : entries_) d += static_cast<int>(e & 0xffu);
  return d;
}

Monomial Monomial::shifted(std::uint32_t id, int delta) const {
  Monomial out;
  out.entries_.reserve(entries_.size() + 1);
  bool placed = false;
  for (auto e : entries_) {
    const std::uint32_t eid = e >> 8;
    if (!placed && eid >= id) {
      placed = true;
      int ex = delta;
      if (eid == id) ex += static_cast<int>(e & 0xffu);
      if (ex < 0 || ex > 255) throw std::invalid_argument("Monomial::shifted: exponent out of range");
      if (ex > 0) out.entries_.push_back(pack(id, ex));
      if (eid == id) continue;
    }
    out.entries_.push_back(e);
  }
  if (!placed) {
    if (delta < 0 || delta > 255) throw std::invalid_argument("Monomial::shifted: exponent out of range");
    if (delta > 0) out.entries_.push_back(pack(id, delta));
  }
  return out;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial out;
  out.entries_.reserve(entries_.size() + other.entries_.size());
  std::size_t i = 0, j = 0;
  while (i < entries_.size() || j < other.entries_.size()) {
    if (j == other.entries_.size() ||
        (i < entries_.size() && (entries_[i] >> 8) < (other.entries_[j] >> 8))) {
      out.entries_.push_back(entries_[i++]);
    } else if (i == entries_.size() || (other.entries_[j] >> 8) < (entries_[i] >> 8)) {
      out.entries_.push_back(other.entries_[j++]);
    } else {
      const int ex = static_cast<int>((entries_[i] & 0xffu) + (other.entries_[j] & 0xffu));
      if (ex > 255) throw ResourceError("Monomial product exceeds exponent range");
      out.entries_.push_back(pack(entries_[i] >> 8, ex));
      ++i;
      ++j;
    }
  }
  return out;
}

std::vector<std::uint32_t> Monomial::odd_ids() const {
  std::vector<std::uint32_t> out;
  for (auto e : entries_)
    if (e & 1u) out.push_back(e >> 8);
  return out;
}

std::string Monomial::to_string() const {
  if (entries_.empty()) return "1";
  std::ostringstream os;
  bool first = true;
  for (auto e : entries_) {
    if (!first) os << '*';
    first = false;
    const std::uint32_t id = e >> 8;
    os << (var_kind(id) == VarKind::r ? 'r' : 'p') << var_site(id);
    const int ex = static_cast<int>(e & 0xffu);
    if (ex != 1) os << '^' << ex;
  }
  return os.str();
}

std::size_t Monomial::hash() const {
  // FNV-1a over the packed entries
  std::uint64_t h = 1469598103934665603ull;
  for (auto e : entries_) {
    h ^= e;
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h ^ (h >> 29));
}

SparsePoly SparsePoly::constant(double c) {
  SparsePoly p;
  p.add_term(Monomial{}, c);
  return p;
}

SparsePoly SparsePoly::variable(VarKind kind, int site, int power) {
  if (site < 0) throw std::invalid_argument("SparsePoly::variable: negative site");
  return monomial(Monomial::single(var_id(kind, site), power), 1.0);
}

SparsePoly SparsePoly::monomial(const Monomial& m, double c) {
  SparsePoly p;
  p.add_term(m, c);
  return p;
}

void SparsePoly::add_term(const Monomial& m, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

double SparsePoly::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

int SparsePoly::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.total_degree());
  return d;
}

int SparsePoly::max_site() const {
  int s = -1;
  for (const auto& [m, c] : terms_)
    for (std::size_t i = 0; i < m.size(); ++i) s = std::max(s, var_site(m.id_at(i)));
  return s;
}

std::vector<std::pair<Monomial, double>> SparsePoly::sorted_terms() const {
  std::vector<std::pair<Monomial, double>> out(terms_.begin(), terms_.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

std::string SparsePoly::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [m, c] : sorted_terms()) {
    if (!first) os << " + ";
    first = false;
    os << c;
    if (!m.is_constant()) os << '*' << m.to_string();
  }
  return os.str();
}

SparsePoly& SparsePoly::operator+=(const SparsePoly& other) {
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

SparsePoly& SparsePoly::operator-=(const SparsePoly& other) {
  for (const auto& [m, c] : other.terms_) add_term(m, -c);
  return *this;
}

SparsePoly& SparsePoly::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, c] : terms_) c *= s;
  return *this;
}

SparsePoly SparsePoly::operator*(const SparsePoly& other) const {
  SparsePoly out;
  for (const auto& [ma, ca] : terms_)
    for (const auto& [mb, cb] : other.terms_) out.add_term(ma * mb, ca * cb);
  return out;
}

double SparsePoly::max_abs_difference(const SparsePoly& other) const {
  double d = 0.0;
  for (const auto& [m, c] : terms_) d = std::max(d, std::abs(c - other.coefficient(m)));
  for (const auto& [m, c] : other.terms_)
    if (terms_.find(m) == terms_.end()) d = std::max(d, std::abs(c));
  return d;
}

SparsePoly apply_kolmogorov(const SparsePoly& poly, const ChainSpec& spec, Direction direction,
                            int max_degree) {
  if (spec.kind != ModelKind::fpu_langevin)
    throw std::invalid_argument("apply_kolmogorov: only the FPU Langevin generator is symbolic");
  const int n = spec.n;
  if (static_cast<int>(spec.gamma.size()) != n)
    throw std::invalid_argument("apply_kolmogorov: friction sequence length != N");
  const double sign = direction == Direction::forward ? 1.0 : -1.0;
  const double inv_m = 1.0 / spec.mass;
  auto wrap = [n](int s) { return ((s % n) + n) % n; };

  SparsePoly out;
  auto emit = [&](const Monomial& m, double c) {
    if (m.total_degree() > max_degree)
      throw ResourceError("apply_kolmogorov: term degree " + std::to_string(m.total_degree()) +
                          " exceeds cap " + std::to_string(max_degree));
    out.add_term(m, c);
  };

  for (const auto& [mono, coeff] : poly.terms()) {
    for (std::size_t i = 0; i < mono.size(); ++i) {
      const std::uint32_t id = mono.id_at(i);
      const int site = var_site(id);
      if (site >= n) throw std::invalid_argument("apply_kolmogorov: variable site outside chain");
      const double e = mono.exponent_at(i);
      const Monomial lowered = mono.shifted(id, -1);
      if (var_kind(id) == VarKind::r) {
        // (1/m)(p_v - p_{v-1}) d/dr_v
        const double c = sign * coeff * e * inv_m;
        emit(lowered.shifted(var_id(VarKind::p, site), 1), c);
        emit(lowered.shifted(var_id(VarKind::p, wrap(site - 1)), 1), -c);
      } else {
        // [V'(r_{h+1}) - V'(r_h)] d/dp_h
        const std::uint32_t r_next = var_id(VarKind::r, wrap(site + 1));
        const std::uint32_t r_here = var_id(VarKind::r, site);
        if (spec.nu != 0.0) {
          const double c = sign * coeff * e * spec.nu;
          emit(lowered.shifted(r_next, 1), c);
          emit(lowered.shifted(r_here, 1), -c);
        }
        if (spec.theta != 0.0) {
          const double c = sign * coeff * e * spec.theta;
          emit(lowered.shifted(r_next, 3), c);
          emit(lowered.shifted(r_here, 3), -c);
        }
        // -gamma (p/m d/dp - (1/beta) d^2/dp^2)
        const double g = spec.gamma[static_cast<std::size_t>(site)];
        if (g != 0.0) {
          emit(mono, -coeff * g * e * inv_m);
          if (e >= 2.0) emit(mono.shifted(id, -2), coeff * g / spec.beta * e * (e - 1.0));
        }
      }
    }
  }
  return out;
}

namespace {

double double_factorial_odd(int s) {
  // (s-1)!! for even s
  double v = 1.0;
  for (int k = s - 1; k > 1; k -= 2) v *= k;
  return v;
}

}  // namespace

GibbsMoments::GibbsMoments(const ChainSpec& spec)
    : mass_(spec.mass), beta_(spec.beta), nu_(spec.nu), theta_(spec.theta) {}

double GibbsMoments::p_moment(int s) const {
  if (s < 0) throw std::invalid_argument("p_moment: negative order");
  if (s % 2 == 1) return 0.0;
  return std::pow(mass_ / beta_, 0.5 * s) * double_factorial_odd(s);
}

double GibbsMoments::r_cutoff(int m) const {
  // log of r^m exp(-beta V(r)); walk outward past the peak until the
  // integrand has fallen 1e-16 below the peak value.
  auto log_f = [&](double r) {
    return (m > 0 ? m * std::log(r) : 0.0) - beta_ * (0.5 * nu_ * r * r + 0.25 * theta_ * r * r * r * r);
  };
  double step = 0.01 / std::sqrt(beta_ * (nu_ + theta_));
  double r = step;
  double peak = log_f(r);
  const double drop = std::log(1e16);
  while (true) {
    r += step;
    const double v = log_f(r);
    peak = std::max(peak, v);
    if (v < peak - drop - 2.0 && r > step * 10) break;
    if (r > 1e6) throw NumericalError("r_cutoff: integrand does not decay");
    step *= 1.01;
  }
  return r;
}

double GibbsMoments::r_moment(int m) const {
  if (m < 0) throw std::invalid_argument("r_moment: negative order");
  if (m % 2 == 1) return 0.0;
  if (m == 0) return 1.0;
  if (theta_ == 0.0) return std::pow(1.0 / (beta_ * nu_), 0.5 * m) * double_factorial_odd(m);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = r_cache_.find(m);
    if (it != r_cache_.end()) return it->second;
  }
  using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto integrate = [&](int k) {
    const double cut = r_cutoff(k);
    double err = 0.0;
    double l1 = 0.0;
    const double v = Quad::integrate(
        [&](double r) {
          return std::pow(r, k) *
                 std::exp(-beta_ * (0.5 * nu_ * r * r + 0.25 * theta_ * r * r * r * r));
        },
        0.0, cut, 20, 1e-13, &err, &l1);
    if (!(err <= 1e-12 * std::abs(v)) || !std::isfinite(v))
      throw NumericalError("r_moment: quadrature did not converge for order " + std::to_string(k));
    return v;
  };
  const double value = integrate(m) / integrate(0);
  std::lock_guard<std::mutex> lock(mutex_);
  r_cache_.emplace(m, value);
  return value;
}

double GibbsMoments::monomial(const Monomial& mono) const {
  double v = 1.0;
  for (std::size_t i = 0; i < mono.size(); ++i) {
    const int e = mono.exponent_at(i);
    if (e % 2 == 1) return 0.0;
    v *= var_kind(mono.id_at(i)) == VarKind::p ? p_moment(e) : r_moment(e);
  }
  return v;
}

std::shared_ptr<const GibbsMoments> gibbs_moments_for(const ChainSpec& spec) {
  static std::mutex mutex;
  static std::map<std::tuple<double, double, double, double>, std::shared_ptr<const GibbsMoments>>
      table;
  const auto key = std::make_tuple(spec.mass, spec.beta, spec.nu, spec.theta);
  std::lock_guard<std::mutex> lock(mutex);
  auto it = table.find(key);
  if (it != table.end()) return it->second;
  auto moments = std::make_shared<const GibbsMoments>(spec);
  table.emplace(key, moments);
  return moments;
}

double gibbs_expectation(const SparsePoly& poly, const ChainSpec& spec) {
  const auto moments = gibbs_moments_for(spec);
  // Sum in monomial order so the result does not depend on hash layout.
  double total = 0.0;
  for (const auto& [m, c] : poly.sorted_terms()) {
    const double v = moments->monomial(m);
    if (v != 0.0) total += c * v;
  }
  return total;
}

double gibbs_inner(const SparsePoly& f, const SparsePoly& g, const ChainSpec& spec) {
  const auto moments = gibbs_moments_for(spec);
  // Only pairs with identical odd-exponent sets survive the symmetric measure.
  std::map<std::vector<std::uint32_t>, std::vector<std::pair<Monomial, double>>> buckets;
  for (const auto& [m, c] : g.sorted_terms()) buckets[m.odd_ids()].emplace_back(m, c);
  double total = 0.0;
  for (const auto& [ma, ca] : f.sorted_terms()) {
    auto it = buckets.find(ma.odd_ids());
    if (it == buckets.end()) continue;
    double partial = 0.0;
    for (const auto& [mb, cb] : it->second) partial += cb * moments->monomial(ma * mb);
    total += ca * partial;
  }
  return total;
}

SiteWindow monomial_degree_window(int n, int site, int chain_length) {
  if (n < 0) throw std::invalid_argument("monomial_degree_window: n < 0");
  auto wrap = [chain_length](int s) { return ((s % chain_length) + chain_length) % chain_length; };
  auto floor_div2 = [](int k) { return k >= 0 ? k / 2 : -((-k + 1) / 2); };
  SiteWindow w;
  auto fill = [&](std::vector<int>& out, int lo, int hi) {
    for (int s = lo; s <= hi; ++s) {
      const int ws = wrap(s);
      if (std::find(out.begin(), out.end(), ws) == out.end()) out.push_back(ws);
    }
    std::sort(out.begin(), out.end());
  };
  fill(w.r_sites, site - floor_div2(n), site + floor_div2(n));
  fill(w.p_sites, site - floor_div2(n + 1), site + floor_div2(n - 1));
  return w;
}

}  // namespace emz
