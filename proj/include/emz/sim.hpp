#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "emz/chain_spec.hpp"

namespace emz {

// Values of a scalar function on the uniform grid t0 + i*dt.
struct SampledFunction {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  double operator[](std::size_t i) const { return values[i]; }
  double t_end() const { return values.empty() ? t0 : time(values.size() - 1); }

  // Throws ConfigError on dt <= 0 or non-finite values.
  void validate() const;
};

enum class InitialMode { gibbs, custom_beta, point };

std::string to_string(InitialMode mode);
InitialMode initial_mode_from_string(const std::string& name);

struct EnsembleSpec {
  int paths = 1;
  double dt = 0.01;
  double t_end = 1.0;
  std::uint64_t seed = 0;
  InitialMode initial = InitialMode::gibbs;
  double initial_beta = 0.0;          // custom_beta: Gibbs start at this inverse temperature
  std::vector<double> initial_point;  // point: x (r or q) block, then p, then baths
  int save_stride = 1;
  double burn_in = 0.0;  // discarded integration time before t = 0
  int threads = 1;

  int steps() const;
  int saved_times() const { return steps() / save_stride + 1; }
  void validate() const;
};

// Phase-space point. FPU: x = r (N), p (N). Heat chain: x = q (N+1),
// p (N+1), plus the two bath variables.
struct ChainState {
  std::vector<double> x;
  std::vector<double> p;
  double bath_left = 0.0;
  double bath_right = 0.0;

  bool finite() const;
};

// Gaussian stream for one path. Seeded from (master seed, stream index)
// through a splitmix64 mix so streams do not depend on scheduling. Normals
// come from boost's ziggurat sampler.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream);
  double operator()() { return dist_(engine_); }
  double uniform() { return uniform_(engine_); }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> dist_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

// Exact draw from the Gibbs product measure at inverse temperature `beta`
// (FPU). r_j by rejection from a Gaussian proposal.
ChainState sample_gibbs_initial(const ChainSpec& spec, NormalStream& rng, double beta);
inline ChainState sample_gibbs_initial(const ChainSpec& spec, NormalStream& rng) {
  return sample_gibbs_initial(spec, rng, spec.beta);
}

double fpu_energy(const ChainState& state, const ChainSpec& spec);

// One BAOAB step of the FPU Langevin chain.
void step_fpu(ChainState& state, const ChainSpec& spec, double dt, NormalStream& rng);

// One Euler-Maruyama step of the heat-conduction chain.
void step_heat_chain(ChainState& state, const ChainSpec& spec, double dt, NormalStream& rng);

// Scalar observable: a power of one phase-space coordinate.
struct Observable {
  enum class Kind { r, p, q, bath_left, bath_right };
  Kind kind = Kind::p;
  int site = 0;
  int power = 1;

  // "p50", "r3", "q0", "rL", "rR", optionally followed by "^k".
  static Observable parse(const std::string& text);
  std::string name() const;
  double evaluate(const ChainState& state) const;
  void check_against(const ChainSpec& spec) const;
};

// Per-path time series of the recorded observables.
struct TrajectoryStore {
  std::vector<std::string> observables;
  int paths = 0;
  int times = 0;
  double t0 = 0.0;
  double dt = 1.0;  // spacing of saved samples
  std::vector<double> data;  // [path][observable][time]

  TrajectoryStore() = default;
  TrajectoryStore(std::vector<std::string> names, int paths, int times, double t0, double dt);

  double& at(int path, int obs, int time) {
    return data[(static_cast<std::size_t>(path) * observables.size() + obs) * times + time];
  }
  double at(int path, int obs, int time) const {
    return data[(static_cast<std::size_t>(path) * observables.size() + obs) * times + time];
  }
  int index_of(const std::string& name) const;
  double time(int i) const { return t0 + i * dt; }
};

// Runs `ens.paths` independent paths; path k uses NormalStream(seed, k), so
// the store is bit-identical for any thread count.
TrajectoryStore simulate_ensemble(const ChainSpec& spec, const EnsembleSpec& ens,
                                  const std::vector<Observable>& observables);

// Ensemble estimate with a per-point Monte-Carlo standard error.
struct Estimate {
  SampledFunction value;
  std::vector<double> std_error;
  bool time_averaged = false;
};

// C(t_k) = mean over paths of u(t_k) u(0). With `time_average`, also averages
// over all lagged origins of each path.
Estimate autocorrelation(const TrajectoryStore& store, const std::string& observable,
                         bool time_average = false);

struct DecayFit {
  double c = 0.0;
  double alpha = 0.0;
  bool decays = false;
  double window_end = 0.0;  // last time used in the fit
  int points = 0;
  std::string verdict;
};

// Fit c exp(-alpha t) to the upper envelope max_{s >= t} |C(s)|/|C(0)| over
// the window where the envelope stays above `noise_floor`. When no floor is
// given it defaults to 10x the standard deviation of the trailing 20% of the
// samples. The returned c is on the scale of C.
DecayFit fit_exponential_bound(const SampledFunction& c, std::optional<double> noise_floor = {});

struct NeqMean {
  Estimate mean;
  std::optional<DecayFit> decay;  // of |M(t) - equilibrium| when provided
};

NeqMean nonequilibrium_mean(const TrajectoryStore& store, const std::string& observable,
                            std::optional<double> equilibrium_value = {});

struct Kde {
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth = 0.0;
};

// Gaussian KDE, Silverman bandwidth 1.06 sigma n^{-1/5}, on `points` nodes
// spanning mean +- 5 sigma.
Kde kde_marginal(const std::vector<double>& samples, int points = 512);

// All samples of one observable (every path, every saved time from
// `first_time` on).
std::vector<double> pooled_samples(const TrajectoryStore& store, const std::string& observable,
                                   int first_time = 0, int time_stride = 1);

// Two-sample Kolmogorov-Smirnov distance between empirical CDFs.
double ks_distance(std::vector<double> a, std::vector<double> b);

}  // namespace emz
