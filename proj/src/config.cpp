#include "emz/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "emz/errors.hpp"

namespace emz {

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"model.kind", "fpu-langevin", "fpu-langevin | heat-conduction"},
      {"model.n", "100", "chain length N (heat chain: oscillators 0..N)"},
      {"model.mass", "1", "particle mass m"},
      {"model.nu", "1", "quadratic potential coefficient"},
      {"model.theta", "0", "quartic potential coefficient"},
      {"model.beta", "1", "inverse temperature (fpu)"},
      {"model.gamma", "1", "friction applied to every site (fpu)"},
      {"model.gamma_sites", "", "site:value friction overrides, comma separated"},
      {"model.temp_left", "1", "left bath temperature"},
      {"model.temp_right", "1", "right bath temperature"},
      {"model.gamma_left", "1", "left bath rate"},
      {"model.gamma_right", "1", "right bath rate"},
      {"model.lambda_left", "1", "left bath coupling"},
      {"model.lambda_right", "1", "right bath coupling"},
      {"model.pin_nu", "2", "pinning potential quadratic coefficient"},
      {"model.pin_theta", "0", "pinning potential quartic coefficient"},

      {"ensemble.paths", "1000", "number of sample paths"},
      {"ensemble.dt", "0.01", "time step"},
      {"ensemble.t_end", "10", "horizon"},
      {"ensemble.seed", "1", "64-bit master seed"},
      {"ensemble.initial", "gibbs", "gibbs | custom-beta | point"},
      {"ensemble.initial_beta", "0", "inverse temperature of a custom-beta start"},
      {"ensemble.initial_point", "", "phase-space point for a point start"},
      {"ensemble.save_stride", "1", "record every k-th step"},
      {"ensemble.burn_in", "0", "discarded integration time before t = 0"},
      {"ensemble.threads", "0", "worker threads (0: EMZ_THREADS or 1)"},
      {"ensemble.observables", "p50", "recorded observables, comma separated"},
      {"ensemble.format", "binary", "trajectory store format: binary | csv"},

      {"stats.store", "", "trajectory store (default: <out-dir>/trajectories.bin)"},
      {"stats.observable", "p50", "observable for acf / neq-mean / kde"},
      {"stats.time_average", "false", "average the acf over lagged origins"},
      {"stats.equilibrium", "", "equilibrium value for the neq-mean decay fit"},
      {"stats.kde_points", "512", "KDE grid size"},
      {"stats.kde_first_time", "0", "first saved time index pooled into the KDE"},
      {"stats.kde_time_stride", "1", "stride over saved times pooled into the KDE"},

      {"basis.kind", "faber", "taylor | faber | laguerre"},
      {"basis.order", "14", "highest basis index"},
      {"basis.shift", "auto", "faber shift a (auto: -gamma_1)"},
      {"basis.width", "auto", "faber width b (auto: 2 sqrt(max(0, gamma_1^2 - gamma_2)))"},
      {"basis.sigma", "auto", "laguerre time scale (auto: twice the ACF decay rate)"},

      {"fit.method", "first-principle", "first-principle | data-driven"},
      {"fit.observable", "p50", "observable u0 (fpu: r<j> or p<j>)"},
      {"fit.max_degree", "64", "polynomial degree cap for the symbolic expansion"},
      {"fit.acf", "", "input ACF CSV for data-driven fits (default: <out-dir>/acf.csv)"},
      {"fit.omega", "auto", "streaming coefficient (auto: first-principle gamma_1)"},
      {"fit.lambda_grid", "0,1e-8,1e-6,1e-5,1e-4,1e-3", "LASSO penalties tried"},
      {"fit.weight_rate", "0", "row weights exp(-rate t)"},
      {"fit.t_max", "auto", "use the ACF only up to this time"},

      {"gle.kernel", "", "kernel model JSON (default: <out-dir>/kernel.json)"},
      {"gle.c0", "auto", "C(0) (auto: value stored in the kernel model)"},
      {"gle.dt", "0.01", "solver step"},
      {"gle.t_end", "10", "solver horizon"},

      {"rom.kernel", "", "kernel model JSON (default: <out-dir>/kernel.json)"},
      {"rom.kl", "", "KL model JSON (default: <out-dir>/kl.json)"},
      {"rom.modes", "200", "retained KL modes"},
      {"rom.markovian_noise", "true", "white noise balancing a negative streaming term"},
      {"rom.u0_variance", "auto", "variance of u(0) (auto: C(0) of the kernel model)"},

      {"compare.reference", "", "reference CSV (t,value[,std_error])"},
      {"compare.candidate", "", "candidate CSV (t,value)"},
      {"compare.t_max", "auto", "compare on [0, t_max]"},
      {"compare.normalize", "true", "divide each curve by its t = 0 value"},
      {"compare.tolerance", "", "pass threshold on the sup-norm difference"},

      {"decay.input", "", "CSV (t,value) to fit"},
      {"decay.noise_floor", "", "envelope floor (default: 10x tail std)"},
  };
  return schema;
}

namespace {

const ConfigKey* find_key(const std::string& key) {
  for (const auto& k : config_schema())
    if (k.key == key) return &k;
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw ConfigError("config key " + key + ": '" + value + "' is not " + expected);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    bad_value(key, v, "a finite number");
  }
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] != b[j - 1])});
      diag = up;
    }
  }
  return row[b.size()];
}

}  // namespace

Config::Config() {
  for (const auto& k : config_schema()) values_[k.key] = k.default_value;
}

Config Config::from_string(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  Config cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config key '" + section + "' must live inside a [section]");
    for (const auto& [name, node] : body) cfg.set(section + "." + name, node.data());
  }
  return cfg;
}

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "' must look like section.key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  if (!find_key(key)) {
    std::string hint;
    const auto dot = key.find('.');
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    std::size_t best = 3;
    for (const auto& k : config_schema()) {
      const std::size_t d = std::min(edit_distance(key, k.key),
                                     edit_distance(name, k.key.substr(k.key.find('.') + 1)));
      if (d < best) {
        best = d;
        hint = " (did you mean " + k.key + "?)";
      }
    }
    throw ConfigError("unknown config key '" + key + "'" + hint);
  }
  std::string v = trim(value);
  // The INI reader keeps inline comments; strip them.
  for (const char* mark : {" #", " ;", "\t#", "\t;"}) {
    const auto pos = v.find(mark);
    if (pos != std::string::npos) v = trim(v.substr(0, pos));
  }
  values_[key] = v;
  explicit_[key] = true;
}

bool Config::is_set(const std::string& key) const { return explicit_.count(key) > 0; }

std::string Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("internal: unknown config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const { return parse_double(key, get(key)); }

int Config::get_int(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size() || i < INT32_MIN || i > INT32_MAX) throw std::invalid_argument(v);
    return static_cast<int>(i);
  } catch (const std::exception&) {
    bad_value(key, v, "an integer");
  }
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const unsigned long long i = std::stoull(v, &used, 0);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    bad_value(key, v, "an unsigned 64-bit integer");
  }
}

bool Config::get_bool(const std::string& key) const {
  std::string v = get(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get(key))) out.push_back(parse_double(key, item));
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& key) const {
  return split_list(get(key));
}

nlohmann::json Config::resolved() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    j[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  return j;
}

ChainSpec Config::chain_spec() const {
  ChainSpec s;
  s.kind = model_kind_from_string(get("model.kind"));
  s.n = get_int("model.n");
  s.mass = get_double("model.mass");
  s.nu = get_double("model.nu");
  s.theta = get_double("model.theta");
  s.beta = get_double("model.beta");
  s.temp_left = get_double("model.temp_left");
  s.temp_right = get_double("model.temp_right");
  s.gamma_left = get_double("model.gamma_left");
  s.gamma_right = get_double("model.gamma_right");
  s.lambda_left = get_double("model.lambda_left");
  s.lambda_right = get_double("model.lambda_right");
  s.pin_nu = get_double("model.pin_nu");
  s.pin_theta = get_double("model.pin_theta");
  if (s.kind == ModelKind::fpu_langevin) {
    s.gamma.assign(std::max(s.n, 0), get_double("model.gamma"));
    for (const auto& item : get_strings("model.gamma_sites")) {
      const auto colon = item.find(':');
      if (colon == std::string::npos)
        bad_value("model.gamma_sites", item, "a site:value pair");
      int site = -1;
      try {
        site = std::stoi(item.substr(0, colon));
      } catch (const std::exception&) {
        bad_value("model.gamma_sites", item, "a site:value pair");
      }
      if (site < 0 || site >= s.n)
        throw ConfigError("config key model.gamma_sites: site " + std::to_string(site) +
                          " is outside the chain");
      s.gamma[site] = parse_double("model.gamma_sites", trim(item.substr(colon + 1)));
    }
  }
  s.validate();
  return s;
}

EnsembleSpec Config::ensemble() const {
  EnsembleSpec e;
  e.paths = get_int("ensemble.paths");
  e.dt = get_double("ensemble.dt");
  e.t_end = get_double("ensemble.t_end");
  e.seed = get_u64("ensemble.seed");
  e.initial = initial_mode_from_string(get("ensemble.initial"));
  e.initial_beta = get_double("ensemble.initial_beta");
  e.initial_point = get_doubles("ensemble.initial_point");
  e.save_stride = get_int("ensemble.save_stride");
  e.burn_in = get_double("ensemble.burn_in");
  e.threads = get_int("ensemble.threads");
  if (e.threads == 0) {
    e.threads = 1;
    if (const char* env = std::getenv("EMZ_THREADS")) {
      try {
        e.threads = std::max(1, std::stoi(env));
      } catch (const std::exception&) {
        throw ConfigError(std::string("EMZ_THREADS='") + env + "' is not an integer");
      }
    }
  }
  e.validate();
  return e;
}

std::vector<Observable> Config::observables() const {
  std::vector<Observable> out;
  for (const auto& name : get_strings("ensemble.observables")) out.push_back(Observable::parse(name));
  if (out.empty()) throw ConfigError("config key ensemble.observables: no observables listed");
  return out;
}

BasisSpec Config::basis() const {
  BasisSpec b;
  b.kind = basis_kind_from_string(get("basis.kind"));
  auto value_or_zero = [&](const std::string& key) {
    return get(key) == "auto" ? 0.0 : get_double(key);
  };
  b.shift = value_or_zero("basis.shift");
  b.width = value_or_zero("basis.width");
  b.sigma = value_or_zero("basis.sigma");
  return b;
}

}  // namespace emz
