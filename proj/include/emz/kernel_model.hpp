#pragma once

#include <string>
#include <vector>

#include "emz/basis.hpp"

namespace emz {

// Which scalar observable a kernel belongs to, e.g. "p50", and its
// equal-time second moment <u, u>.
struct ObservableDescriptor {
  std::string name = "u";
  double c0 = 1.0;
};

// Projected GLE data: dC/dt = omega C + int_0^t K(t-s) C(s) ds with
// K(t) = sum_n coeffs[n] g_n(t).
struct KernelModel {
  double omega = 0.0;
  BasisSpec basis;
  std::vector<double> coeffs;
  ObservableDescriptor observable;

  int order() const { return static_cast<int>(coeffs.size()) - 1; }
  double operator()(double t) const;
  // K(0), K(dt), ..., K((points-1) dt)
  std::vector<double> sample(double dt, int points) const;
};

}  // namespace emz
