#include "emz/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "emz/errors.hpp"
#include "emz/parallel.hpp"

namespace emz {

void SampledFunction::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sampled function: dt must be > 0");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw ConfigError("sampled function: non-finite value at index " + std::to_string(i));
}

std::string to_string(InitialMode mode) {
  switch (mode) {
    case InitialMode::gibbs: return "gibbs";
    case InitialMode::custom_beta: return "custom-beta";
    case InitialMode::point: return "point";
  }
  return "?";
}

InitialMode initial_mode_from_string(const std::string& name) {
  if (name == "gibbs") return InitialMode::gibbs;
  if (name == "custom-beta") return InitialMode::custom_beta;
  if (name == "point") return InitialMode::point;
  throw ConfigError("unknown initial mode '" + name + "' (expected gibbs | custom-beta | point)");
}

int EnsembleSpec::steps() const { return static_cast<int>(std::llround(t_end / dt)); }

void EnsembleSpec::validate() const {
  if (paths < 1) throw ConfigError("ensemble: paths must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("ensemble: dt must be > 0");
  if (!(t_end >= dt)) throw ConfigError("ensemble: t_end must be >= dt");
  if (save_stride < 1) throw ConfigError("ensemble: save_stride must be >= 1");
  if (!(burn_in >= 0.0)) throw ConfigError("ensemble: burn_in must be >= 0");
  if (threads < 1) throw ConfigError("ensemble: threads must be >= 1");
  if (initial == InitialMode::custom_beta && !(initial_beta > 0.0))
    throw ConfigError("ensemble: custom-beta start needs initial_beta > 0");
  if (std::abs(steps() * dt - t_end) > 1e-9 * t_end)
    throw ConfigError("ensemble: t_end must be a multiple of dt");
}

bool ChainState::finite() const {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  for (double v : p)
    if (!std::isfinite(v)) return false;
  return std::isfinite(bath_left) && std::isfinite(bath_right);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ull))) {}

namespace {

// Draw from density proportional to exp(-beta (nu r^2/2 + theta r^4/4)).
// Writing theta r^4/4 = theta (r^2 - s)^2/4 + theta s r^2/2 - theta s^2/4
// gives a Gaussian proposal of precision beta (nu + theta s) and acceptance
// exp(-beta theta (r^2 - s)^2 / 4) <= 1. s = 0 matches the quadratic part;
// s > 0 is only needed when nu = 0.
double sample_r(const ChainSpec& spec, double beta, NormalStream& rng) {
  const double s = spec.nu > 0.0 ? 0.0 : 1.0 / std::sqrt(beta * spec.theta);
  const double sd = 1.0 / std::sqrt(beta * (spec.nu + spec.theta * s));
  if (spec.theta == 0.0) return sd * rng();
  for (;;) {
    const double r = sd * rng();
    const double d = r * r - s;
    if (rng.uniform() < std::exp(-0.25 * beta * spec.theta * d * d)) return r;
  }
}

}  // namespace

ChainState sample_gibbs_initial(const ChainSpec& spec, NormalStream& rng, double beta) {
  ChainState st;
  const int n_osc = spec.oscillators();
  const double psd = std::sqrt(spec.mass / beta);
  st.p.resize(n_osc);
  if (spec.kind == ModelKind::fpu_langevin) {
    st.x.resize(n_osc);
    for (int j = 0; j < n_osc; ++j) st.x[j] = sample_r(spec, beta, rng);
    for (int j = 0; j < n_osc; ++j) st.p[j] = psd * rng();
  } else {
    // Positions start at rest; the effective Gibbs state of the heat chain is
    // not a product measure, so callers use a burn-in period.
    st.x.assign(n_osc, 0.0);
    for (int j = 0; j < n_osc; ++j) st.p[j] = psd * rng();
  }
  return st;
}

double fpu_energy(const ChainState& state, const ChainSpec& spec) {
  double e = 0.0;
  for (std::size_t j = 0; j < state.p.size(); ++j)
    e += 0.5 * state.p[j] * state.p[j] / spec.mass + spec.potential(state.x[j]);
  return e;
}

namespace {

void fpu_kick(ChainState& s, const ChainSpec& spec, double h) {
  const int n = static_cast<int>(s.x.size());
  double first = spec.potential_derivative(s.x[0]);
  double cur = first;
  for (int j = 0; j < n; ++j) {
    const double next = j + 1 < n ? spec.potential_derivative(s.x[j + 1]) : first;
    s.p[j] += h * (next - cur);
    cur = next;
  }
}

void fpu_drift(ChainState& s, const ChainSpec& spec, double h) {
  const int n = static_cast<int>(s.x.size());
  const double c = h / spec.mass;
  const double p_last = s.p[n - 1];
  for (int j = n - 1; j > 0; --j) s.x[j] += c * (s.p[j] - s.p[j - 1]);
  s.x[0] += c * (s.p[0] - p_last);
}

}  // namespace

void step_fpu(ChainState& s, const ChainSpec& spec, double dt, NormalStream& rng) {
  const double h = 0.5 * dt;
  fpu_kick(s, spec, h);
  fpu_drift(s, spec, h);
  // Friction is usually uniform, so the OU coefficients are recomputed only
  // when gamma changes along the chain.
  double g_prev = -1.0, decay = 1.0, amp = 0.0;
  for (std::size_t j = 0; j < s.p.size(); ++j) {
    const double g = spec.gamma[j];
    if (g == 0.0) continue;
    if (g != g_prev) {
      g_prev = g;
      decay = std::exp(-g * dt / spec.mass);
      amp = std::sqrt(spec.mass / spec.beta * (1.0 - decay * decay));
    }
    s.p[j] = decay * s.p[j] + amp * rng();
  }
  fpu_drift(s, spec, h);
  fpu_kick(s, spec, h);
}

void step_heat_chain(ChainState& s, const ChainSpec& spec, double dt, NormalStream& rng) {
  const int last = static_cast<int>(s.x.size()) - 1;
  std::vector<double> force(s.x.size());
  for (int i = 0; i <= last; ++i) force[i] = -spec.pin_derivative(s.x[i]);
  for (int i = 1; i <= last; ++i) {
    const double f = spec.potential_derivative(s.x[i] - s.x[i - 1]);
    force[i] -= f;
    force[i - 1] += f;
  }
  force[0] += s.bath_left;
  force[last] += s.bath_right;

  const double q0 = s.x[0];
  const double qn = s.x[last];
  const double sq = std::sqrt(dt);
  const double ll = spec.lambda_left, lr = spec.lambda_right;
  const double gl = spec.gamma_left, gr = spec.gamma_right;
  const double new_left = s.bath_left + dt * gl * (ll * ll * q0 - s.bath_left) -
                          ll * std::sqrt(2.0 * gl * spec.temp_left) * sq * rng();
  const double new_right = s.bath_right + dt * gr * (lr * lr * qn - s.bath_right) -
                           lr * std::sqrt(2.0 * gr * spec.temp_right) * sq * rng();

  // Momenta first, positions with the updated momenta (semi-implicit Euler).
  // Same strong order as the fully explicit step, without its systematic
  // energy gain in the undamped interior of the chain.
  for (int i = 0; i <= last; ++i) {
    s.p[i] += dt * force[i];
    s.x[i] += dt * s.p[i] / spec.mass;
  }
  s.bath_left = new_left;
  s.bath_right = new_right;
}

Observable Observable::parse(const std::string& text) {
  Observable o;
  std::string body = text;
  const auto caret = text.find('^');
  if (caret != std::string::npos) {
    body = text.substr(0, caret);
    try {
      std::size_t used = 0;
      o.power = std::stoi(text.substr(caret + 1), &used);
      if (used != text.size() - caret - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("bad observable power in '" + text + "'");
    }
    if (o.power < 1) throw ConfigError("observable power must be >= 1 in '" + text + "'");
  }
  if (body == "rL") {
    o.kind = Kind::bath_left;
    return o;
  }
  if (body == "rR") {
    o.kind = Kind::bath_right;
    return o;
  }
  if (body.size() < 2) throw ConfigError("bad observable '" + text + "'");
  switch (body[0]) {
    case 'r': o.kind = Kind::r; break;
    case 'p': o.kind = Kind::p; break;
    case 'q': o.kind = Kind::q; break;
    default: throw ConfigError("bad observable '" + text + "' (expected r<j>, p<j>, q<j>, rL, rR)");
  }
  const std::string digits = body.substr(1);
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
    throw ConfigError("bad observable site in '" + text + "'");
  o.site = std::stoi(digits);
  return o;
}

std::string Observable::name() const {
  std::string base;
  switch (kind) {
    case Kind::r: base = "r" + std::to_string(site); break;
    case Kind::p: base = "p" + std::to_string(site); break;
    case Kind::q: base = "q" + std::to_string(site); break;
    case Kind::bath_left: base = "rL"; break;
    case Kind::bath_right: base = "rR"; break;
  }
  return power == 1 ? base : base + "^" + std::to_string(power);
}

double Observable::evaluate(const ChainState& s) const {
  double v = 0.0;
  switch (kind) {
    case Kind::r:
    case Kind::q: v = s.x[site]; break;
    case Kind::p: v = s.p[site]; break;
    case Kind::bath_left: v = s.bath_left; break;
    case Kind::bath_right: v = s.bath_right; break;
  }
  double out = v;
  for (int k = 1; k < power; ++k) out *= v;
  return out;
}

void Observable::check_against(const ChainSpec& spec) const {
  const bool fpu = spec.kind == ModelKind::fpu_langevin;
  if (fpu && (kind == Kind::q || kind == Kind::bath_left || kind == Kind::bath_right))
    throw ConfigError("observable " + name() + " is not defined for the FPU chain");
  if (!fpu && kind == Kind::r)
    throw ConfigError("observable " + name() + " is not defined for the heat-conduction chain");
  if ((kind == Kind::r || kind == Kind::p || kind == Kind::q) &&
      (site < 0 || site >= spec.oscillators()))
    throw ConfigError("observable " + name() + " is outside the chain");
}

TrajectoryStore::TrajectoryStore(std::vector<std::string> names, int paths_, int times_, double t0_,
                                 double dt_)
    : observables(std::move(names)), paths(paths_), times(times_), t0(t0_), dt(dt_) {
  data.assign(static_cast<std::size_t>(paths) * observables.size() * times, 0.0);
}

int TrajectoryStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < observables.size(); ++i)
    if (observables[i] == name) return static_cast<int>(i);
  throw ConfigError("observable '" + name + "' not present in trajectory store");
}

namespace {

ChainState initial_state(const ChainSpec& spec, const EnsembleSpec& ens, NormalStream& rng) {
  switch (ens.initial) {
    case InitialMode::gibbs: {
      const double beta = spec.kind == ModelKind::fpu_langevin
                              ? spec.beta
                              : 2.0 / (spec.temp_left + spec.temp_right);
      return sample_gibbs_initial(spec, rng, beta);
    }
    case InitialMode::custom_beta: return sample_gibbs_initial(spec, rng, ens.initial_beta);
    case InitialMode::point: break;
  }
  const std::size_t n = spec.oscillators();
  const auto& v = ens.initial_point;
  const bool heat = spec.kind == ModelKind::heat_conduction;
  if (v.size() != 2 * n && !(heat && v.size() == 2 * n + 2))
    throw ConfigError("initial point must have " + std::to_string(2 * n) +
                      (heat ? " or " + std::to_string(2 * n + 2) : std::string()) + " entries");
  ChainState s;
  s.x.assign(v.begin(), v.begin() + n);
  s.p.assign(v.begin() + n, v.begin() + 2 * n);
  if (v.size() == 2 * n + 2) {
    s.bath_left = v[2 * n];
    s.bath_right = v[2 * n + 1];
  }
  return s;
}

[[noreturn]] void blow_up(int path, double t) {
  std::ostringstream os;
  os << "simulation blow-up: non-finite state on path " << path << " at t = " << t;
  throw NumericalError(os.str());
}

void run_path(const ChainSpec& spec, const EnsembleSpec& ens,
              const std::vector<Observable>& observables, int path, TrajectoryStore& store) {
  NormalStream rng(ens.seed, static_cast<std::uint64_t>(path));
  ChainState s = initial_state(spec, ens, rng);
  const bool fpu = spec.kind == ModelKind::fpu_langevin;
  auto step = [&](ChainState& st) {
    if (fpu)
      step_fpu(st, spec, ens.dt, rng);
    else
      step_heat_chain(st, spec, ens.dt, rng);
  };
  const int burn = static_cast<int>(std::llround(ens.burn_in / ens.dt));
  for (int k = 0; k < burn; ++k) step(s);
  if (!s.finite()) blow_up(path, 0.0);

  auto record = [&](int slot) {
    for (std::size_t o = 0; o < observables.size(); ++o)
      store.at(path, static_cast<int>(o), slot) = observables[o].evaluate(s);
  };
  record(0);
  const int steps = ens.steps();
  for (int k = 1; k <= steps; ++k) {
    step(s);
    if (k % ens.save_stride == 0) {
      if (!s.finite()) blow_up(path, k * ens.dt);
      record(k / ens.save_stride);
    }
  }
  if (!s.finite()) blow_up(path, steps * ens.dt);
}

}  // namespace

TrajectoryStore simulate_ensemble(const ChainSpec& spec, const EnsembleSpec& ens,
                                  const std::vector<Observable>& observables) {
  spec.validate();
  ens.validate();
  if (observables.empty()) throw ConfigError("simulate: no observables requested");
  std::vector<std::string> names;
  for (const auto& o : observables) {
    o.check_against(spec);
    names.push_back(o.name());
  }
  TrajectoryStore store(names, ens.paths, ens.saved_times(), 0.0, ens.dt * ens.save_stride);

  parallel_for(ens.paths, ens.threads, [&](int path) { run_path(spec, ens, observables, path, store); });
  return store;
}

namespace {

void require_nonempty(const TrajectoryStore& store) {
  if (store.paths < 1 || store.times < 1 || store.observables.empty())
    throw ConfigError("empty trajectory store");
}

}  // namespace

Estimate autocorrelation(const TrajectoryStore& store, const std::string& observable,
                         bool time_average) {
  require_nonempty(store);
  const int o = store.index_of(observable);
  const int T = store.times;
  const int P = store.paths;
  Estimate est;
  est.time_averaged = time_average;
  est.value.t0 = 0.0;
  est.value.dt = store.dt;
  est.value.values.assign(T, 0.0);
  est.std_error.assign(T, 0.0);
  std::vector<double> per_path(P);
  for (int k = 0; k < T; ++k) {
    for (int p = 0; p < P; ++p) {
      if (!time_average) {
        per_path[p] = store.at(p, o, k) * store.at(p, o, 0);
      } else {
        double acc = 0.0;
        for (int s = 0; s + k < T; ++s) acc += store.at(p, o, s + k) * store.at(p, o, s);
        per_path[p] = acc / (T - k);
      }
    }
    const double mean = std::accumulate(per_path.begin(), per_path.end(), 0.0) / P;
    double var = 0.0;
    for (double v : per_path) var += (v - mean) * (v - mean);
    est.value.values[k] = mean;
    est.std_error[k] = P > 1 ? std::sqrt(var / (P - 1) / P) : 0.0;
  }
  return est;
}

DecayFit fit_exponential_bound(const SampledFunction& c, std::optional<double> noise_floor) {
  if (c.values.empty()) throw ConfigError("decay fit: empty input");
  const double c0 = c.values[0];
  if (c0 == 0.0 || !std::isfinite(c0)) throw ConfigError("decay fit: C(0) must be nonzero");
  const std::size_t n = c.values.size();
  std::vector<double> env(n);
  double run = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    run = std::max(run, std::abs(c.values[i] / c0));
    env[i] = run;
  }
  double floor = 0.0;
  if (noise_floor) {
    floor = *noise_floor;
  } else {
    const std::size_t start = n - std::max<std::size_t>(1, n / 5);
    double mean = 0.0;
    for (std::size_t i = start; i < n; ++i) mean += c.values[i] / c0;
    mean /= static_cast<double>(n - start);
    double var = 0.0;
    for (std::size_t i = start; i < n; ++i) var += std::pow(c.values[i] / c0 - mean, 2);
    floor = 10.0 * std::sqrt(var / static_cast<double>(n - start));
  }

  DecayFit fit;
  double st = 0, sy = 0, stt = 0, sty = 0;
  int m = 0;
  for (std::size_t i = 0; i < n && env[i] > floor; ++i) {
    const double t = c.time(i);
    const double y = std::log(env[i]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++m;
    fit.window_end = t;
  }
  fit.points = m;
  if (m < 3) {
    fit.verdict = "no exponential decay observed (fewer than 3 points above the noise floor)";
    return fit;
  }
  const double denom = m * stt - st * st;
  const double slope = (m * sty - st * sy) / denom;
  const double intercept = (sy - slope * st) / m;
  fit.alpha = -slope;
  fit.c = std::abs(c0) * std::exp(intercept);
  fit.decays = fit.alpha > 0.0;
  fit.verdict = fit.decays ? "exponential decay" : "no exponential decay observed";
  return fit;
}

NeqMean nonequilibrium_mean(const TrajectoryStore& store, const std::string& observable,
                            std::optional<double> equilibrium_value) {
  require_nonempty(store);
  const int o = store.index_of(observable);
  NeqMean out;
  auto& est = out.mean;
  est.value.t0 = store.t0;
  est.value.dt = store.dt;
  est.value.values.assign(store.times, 0.0);
  est.std_error.assign(store.times, 0.0);
  for (int k = 0; k < store.times; ++k) {
    double sum = 0.0, sq = 0.0;
    for (int p = 0; p < store.paths; ++p) sum += store.at(p, o, k);
    const double mean = sum / store.paths;
    for (int p = 0; p < store.paths; ++p) sq += std::pow(store.at(p, o, k) - mean, 2);
    est.value.values[k] = mean;
    est.std_error[k] = store.paths > 1 ? std::sqrt(sq / (store.paths - 1) / store.paths) : 0.0;
  }
  if (equilibrium_value) {
    SampledFunction dev = est.value;
    for (double& v : dev.values) v -= *equilibrium_value;
    if (dev.values[0] != 0.0) {
      // Floor at 3 sigma of the pointwise MC error, in units of the initial gap.
      double se = 0.0;
      for (double s : est.std_error) se = std::max(se, s);
      std::optional<double> floor;
      if (se > 0.0) floor = 3.0 * se / std::abs(dev.values[0]);
      out.decay = fit_exponential_bound(dev, floor);
    }
  }
  return out;
}

Kde kde_marginal(const std::vector<double>& samples, int points) {
  const std::size_t n = samples.size();
  if (n < 100) throw ConfigError("kde: need at least 100 samples");
  if (points < 2) throw ConfigError("kde: need at least 2 grid points");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw NumericalError("kde: degenerate sample (zero variance)");

  Kde kde;
  kde.bandwidth = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
  kde.x.resize(points);
  kde.density.assign(points, 0.0);
  const double lo = mean - 5.0 * sd, hi = mean + 5.0 * sd;
  for (int i = 0; i < points; ++i) kde.x[i] = lo + (hi - lo) * i / (points - 1);

  // Kernel contributions beyond 8 bandwidths are below 1e-14 and skipped.
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  const double h = kde.bandwidth;
  const double norm = 1.0 / (static_cast<double>(n) * h * std::sqrt(2.0 * M_PI));
  for (int i = 0; i < points; ++i) {
    const double x = kde.x[i];
    auto first = std::lower_bound(sorted.begin(), sorted.end(), x - 8.0 * h);
    auto last = std::upper_bound(sorted.begin(), sorted.end(), x + 8.0 * h);
    double acc = 0.0;
    for (auto it = first; it != last; ++it) {
      const double z = (x - *it) / h;
      acc += std::exp(-0.5 * z * z);
    }
    kde.density[i] = acc * norm;
  }
  return kde;
}

std::vector<double> pooled_samples(const TrajectoryStore& store, const std::string& observable,
                                   int first_time, int time_stride) {
  require_nonempty(store);
  if (time_stride < 1) throw ConfigError("pooled samples: stride must be >= 1");
  const int o = store.index_of(observable);
  std::vector<double> out;
  for (int p = 0; p < store.paths; ++p)
    for (int k = std::max(0, first_time); k < store.times; k += time_stride)
      out.push_back(store.at(p, o, k));
  return out;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("ks distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

}  // namespace emz
