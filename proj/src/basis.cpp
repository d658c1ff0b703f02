#include "emz/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "emz/errors.hpp"
#include "emz/kernel_model.hpp"

namespace emz {

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::taylor: return "taylor";
    case BasisKind::faber: return "faber";
    case BasisKind::laguerre: return "laguerre";
  }
  return "?";
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "taylor") return BasisKind::taylor;
  if (name == "faber") return BasisKind::faber;
  if (name == "laguerre") return BasisKind::laguerre;
  throw ConfigError("unknown basis kind '" + name + "' (expected taylor | faber | laguerre)");
}

void BasisSpec::validate() const {
  if (kind == BasisKind::faber && !(std::isfinite(shift) && width > 0.0 && std::isfinite(width)))
    throw ConfigError("faber basis needs a finite shift a and width b > 0");
  if (kind == BasisKind::laguerre && !(sigma > 0.0))
    throw ConfigError("laguerre basis needs sigma > 0");
}

std::vector<double> BasisSpec::evaluate(int order, double t) const {
  std::vector<double> g(static_cast<std::size_t>(order + 1));
  switch (kind) {
    case BasisKind::taylor: {
      double v = 1.0;
      for (int n = 0; n <= order; ++n) {
        g[n] = v;
        v *= t / (n + 1);
      }
      break;
    }
    case BasisKind::faber: {
      g = bessel_j_all(order, width * t);
      const double damp = std::exp(-shift * t);
      for (auto& x : g) x *= damp;
      break;
    }
    case BasisKind::laguerre:
      g = laguerre_basis_all(order, sigma, t);
      break;
  }
  return g;
}

namespace {

std::vector<double> bessel_series(int order, double x) {
  std::vector<double> out(static_cast<std::size_t>(order + 1));
  const double h = 0.5 * x;
  const double h2 = -h * h;
  double lead = 1.0;  // (x/2)^n / n!
  for (int n = 0; n <= order; ++n) {
    double term = lead, sum = lead;
    for (int k = 1; k < 200; ++k) {
      term *= h2 / (static_cast<double>(k) * (n + k));
      sum += term;
      if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    out[n] = sum;
    lead *= h / (n + 1);
  }
  return out;
}

std::vector<double> bessel_miller(int order, double x) {
  const double ax = std::abs(x);
  const double top = std::max<double>(order, ax);
  int start = static_cast<int>(top + 20.0 + 6.0 * std::sqrt(top));
  if (start % 2) ++start;
  std::vector<double> j(static_cast<std::size_t>(start + 2), 0.0);
  double next = 0.0, cur = 1e-30, norm = 0.0;
  j[start] = cur;
  for (int k = start; k >= 1; --k) {
    const double prev = (2.0 * k / ax) * cur - next;
    next = cur;
    cur = prev;
    j[k - 1] = cur;
    if (std::abs(cur) > 1e250) {
      for (int i = k - 1; i <= start; ++i) j[i] *= 1e-250;
      next *= 1e-250;
      cur *= 1e-250;
    }
  }
  for (int k = 2; k <= start; k += 2) norm += j[k];
  norm = j[0] + 2.0 * norm;
  std::vector<double> out(static_cast<std::size_t>(order + 1));
  for (int n = 0; n <= order; ++n) out[n] = j[n] / norm;
  return out;
}

}  // namespace

std::vector<double> bessel_j_all(int order, double x) {
  if (order < 0) throw std::invalid_argument("bessel_j_all: negative order");
  std::vector<double> out;
  if (x == 0.0) {
    out.assign(static_cast<std::size_t>(order + 1), 0.0);
    out[0] = 1.0;
    return out;
  }
  out = std::abs(x) <= 1.0 ? bessel_series(order, std::abs(x)) : bessel_miller(order, x);
  if (x < 0.0)
    for (int n = 1; n <= order; n += 2) out[n] = -out[n];
  return out;
}

double bessel_j(int n, double x) { return bessel_j_all(n, x).back(); }

std::vector<double> laguerre_basis_all(int order, double sigma, double t) {
  if (order < 0) throw std::invalid_argument("laguerre_basis_all: negative order");
  const double x = sigma * t;
  std::vector<double> l(static_cast<std::size_t>(order + 1));
  // The recurrence is linear, so the weight goes in up front; this keeps
  // large t from producing inf * 0.
  const double w = std::exp(-0.5 * x);
  l[0] = w;
  if (order >= 1) l[1] = (1.0 - x) * w;
  for (int k = 1; k < order; ++k) l[k + 1] = ((2.0 * k + 1.0 - x) * l[k] - k * l[k - 1]) / (k + 1.0);
  return l;
}

double laguerre_basis(int n, double sigma, double t) { return laguerre_basis_all(n, sigma, t).back(); }

double KernelModel::operator()(double t) const {
  if (coeffs.empty()) return 0.0;
  const auto g = basis.evaluate(order(), t);
  double k = 0.0;
  for (std::size_t n = 0; n < coeffs.size(); ++n) k += coeffs[n] * g[n];
  return k;
}

std::vector<double> KernelModel::sample(double dt, int points) const {
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) out[i] = (*this)(i * dt);
  return out;
}

}  // namespace emz
