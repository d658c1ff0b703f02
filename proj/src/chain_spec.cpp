#include "emz/chain_spec.hpp"

#include <cmath>

#include "emz/errors.hpp"

namespace emz {

std::string to_string(ModelKind kind) {
  return kind == ModelKind::fpu_langevin ? "fpu-langevin" : "heat-conduction";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "fpu-langevin") return ModelKind::fpu_langevin;
  if (name == "heat-conduction") return ModelKind::heat_conduction;
  throw ConfigError("unknown model kind '" + name + "' (expected fpu-langevin | heat-conduction)");
}

ChainSpec ChainSpec::fpu(int n, double mass, double nu, double theta, double beta, double gamma) {
  ChainSpec s;
  s.kind = ModelKind::fpu_langevin;
  s.n = n;
  s.mass = mass;
  s.nu = nu;
  s.theta = theta;
  s.beta = beta;
  s.gamma.assign(static_cast<std::size_t>(n > 0 ? n : 0), gamma);
  return s;
}

void ChainSpec::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid chain spec: " + what); };
  if (n < 2) fail("N must be >= 2");
  if (!(mass > 0.0)) fail("mass must be > 0");
  if (!(beta > 0.0)) fail("beta must be > 0");
  if (!(nu >= 0.0) || !(theta >= 0.0)) fail("nu and theta must be >= 0");
  if (!(nu + theta > 0.0)) fail("potential must be confining (nu + theta > 0)");
  if (kind == ModelKind::fpu_langevin) {
    if (static_cast<int>(gamma.size()) != n) fail("friction sequence must have N entries");
    for (double g : gamma)
      if (!(g >= 0.0) || !std::isfinite(g)) fail("friction must be finite and >= 0");
  } else {
    if (!(temp_left > 0.0) || !(temp_right > 0.0)) fail("bath temperatures must be > 0");
    if (!(gamma_left >= 0.0) || !(gamma_right >= 0.0)) fail("bath rates must be >= 0");
    if (!(lambda_left >= 0.0) || !(lambda_right >= 0.0)) fail("bath couplings must be >= 0");
    if (!(pin_nu >= 0.0) || !(pin_theta >= 0.0)) fail("pinning coefficients must be >= 0");
    const double lam2 = std::max(lambda_left * lambda_left, lambda_right * lambda_right);
    if (!(pin_theta > 0.0 || pin_nu > lam2))
      fail("effective energy is not confining: need pin_theta > 0 or pin_nu > lambda^2");
  }
}

}  // namespace emz
