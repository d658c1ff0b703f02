// Config-driven runner for the chain experiments: simulate, statistics,
// kernel fits, GLE solves, KL/ROM surrogates, comparisons and reports.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emz/config.hpp"
#include "emz/dd_kernel.hpp"
#include "emz/errors.hpp"
#include "emz/fp_kernel.hpp"
#include "emz/gle.hpp"
#include "emz/io.hpp"
#include "emz/sim.hpp"

namespace fs = std::filesystem;
using emz::Config;
using nlohmann::json;

namespace {

struct Run {
  std::string command;
  Config cfg;
  fs::path out_dir;
  std::string hash;
  json inputs = json::object();
  json outputs = json::array();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  std::string out(const std::string& name) {
    outputs.push_back(name);
    return (out_dir / name).string();
  }
  // Explicit config path, else a default file in the output directory.
  std::string input(const std::string& key, const std::string& fallback) {
    std::string path = cfg.get(key);
    if (path.empty()) path = (out_dir / fallback).string();
    if (!fs::exists(path))
      throw emz::ConfigError("missing input for " + command + ": '" + path + "' (set " + key + ")");
    inputs[key] = path;
    return path;
  }
  json manifest() const {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {{"command", command},      {"hash", hash},
            {"version", emz::kVersion}, {"seed", cfg.get("ensemble.seed")},
            {"config", cfg.resolved()}, {"inputs", inputs},
            {"outputs", outputs},      {"wall_time_s", wall}};
  }
  void finish() {
    emz::write_json((out_dir / (command + ".manifest.json")).string(), manifest());
  }
};

double resolve_auto(const Config& cfg, const std::string& key, double fallback) {
  return cfg.get(key) == "auto" ? fallback : cfg.get_double(key);
}

std::string store_name(const Config& cfg, const std::string& stem) {
  const std::string fmt = cfg.get("ensemble.format");
  if (fmt == "binary") return stem + ".bin";
  if (fmt == "csv") return stem + ".csv";
  throw emz::ConfigError("config key ensemble.format: '" + fmt + "' is not binary | csv");
}

void cmd_simulate(Run& run) {
  const auto spec = run.cfg.chain_spec();
  const auto ens = run.cfg.ensemble();
  const auto obs = run.cfg.observables();
  const auto store = emz::simulate_ensemble(spec, ens, obs);
  emz::save_store(run.out(store_name(run.cfg, "trajectories")), store, run.manifest());
  if (ens.paths == 1) {
    std::vector<std::string> header{"t"};
    std::vector<std::vector<double>> cols(1);
    for (int k = 0; k < store.times; ++k) cols[0].push_back(store.time(k));
    for (std::size_t o = 0; o < store.observables.size(); ++o) {
      header.push_back(store.observables[o]);
      cols.emplace_back();
      for (int k = 0; k < store.times; ++k) cols.back().push_back(store.at(0, static_cast<int>(o), k));
    }
    emz::write_csv(run.out("trajectory.csv"), run.hash, header, cols);
  }
}

emz::TrajectoryStore load_stats_store(Run& run) {
  return emz::load_store(run.input("stats.store", store_name(run.cfg, "trajectories")));
}

void cmd_acf(Run& run) {
  const auto store = load_stats_store(run);
  const auto est = emz::autocorrelation(store, run.cfg.get("stats.observable"),
                                        run.cfg.get_bool("stats.time_average"));
  emz::write_sampled(run.out("acf.csv"), run.hash, est.value, est.std_error);
}

json decay_json(const emz::DecayFit& d) {
  return {{"c", d.c},           {"alpha", d.alpha},   {"decays", d.decays},
          {"points", d.points}, {"window_end", d.window_end}, {"verdict", d.verdict}};
}

void cmd_neq_mean(Run& run) {
  const auto store = load_stats_store(run);
  std::optional<double> eq;
  if (!run.cfg.get("stats.equilibrium").empty()) eq = run.cfg.get_double("stats.equilibrium");
  const auto res = emz::nonequilibrium_mean(store, run.cfg.get("stats.observable"), eq);
  emz::write_sampled(run.out("neq_mean.csv"), run.hash, res.mean.value, res.mean.std_error);
  if (res.decay) emz::write_json(run.out("neq_mean_fit.json"), decay_json(*res.decay));
}

void cmd_kde(Run& run) {
  const auto store = load_stats_store(run);
  const auto samples =
      emz::pooled_samples(store, run.cfg.get("stats.observable"),
                          run.cfg.get_int("stats.kde_first_time"),
                          run.cfg.get_int("stats.kde_time_stride"));
  const auto kde = emz::kde_marginal(samples, run.cfg.get_int("stats.kde_points"));
  emz::write_csv(run.out("kde.csv"), run.hash, {"x", "density"}, {kde.x, kde.density});
}

void write_kernel_outputs(Run& run, const emz::KernelModel& model) {
  emz::save_kernel_model(run.out("kernel.json"), model);
  const double dt = run.cfg.get_double("gle.dt");
  const int points = static_cast<int>(std::llround(run.cfg.get_double("gle.t_end") / dt)) + 1;
  emz::SampledFunction k;
  k.dt = dt;
  k.values = model.sample(dt, points);
  emz::write_sampled(run.out("kernel.csv"), run.hash, k);
}

void cmd_fit_kernel(Run& run, const std::string& method) {
  const auto& cfg = run.cfg;
  const int order = cfg.get_int("basis.order");
  const auto u = emz::Observable::parse(cfg.get("fit.observable"));
  if (method == "first-principle") {
    const auto spec = cfg.chain_spec();
    const auto fit = emz::fit_kernel_first_principle(spec, u, cfg.basis(), order,
                                                     cfg.get_int("fit.max_degree"));
    write_kernel_outputs(run, fit.model);
    std::vector<double> n(fit.gamma.size());
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = static_cast<double>(i + 1);
    emz::write_csv(run.out("cumulants.csv"), run.hash, {"n", "gamma", "mu"}, {n, fit.gamma, fit.mu});
    return;
  }
  if (method != "data-driven")
    throw emz::ConfigError("fit-kernel: unknown method '" + method + "'");

  auto c = emz::read_sampled(run.input("fit.acf", "acf.csv"));
  if (cfg.get("fit.t_max") != "auto") {
    const auto keep = static_cast<std::size_t>(std::llround(cfg.get_double("fit.t_max") / c.dt)) + 1;
    if (keep < c.values.size()) c.values.resize(keep);
  }
  // The streaming term and default Faber domain come from the exact low
  // cumulants, which are cheap; the memory kernel itself is fitted to data.
  double omega = 0.0;
  std::vector<double> gamma;
  if (cfg.get("fit.omega") == "auto" || (cfg.get("basis.kind") == "faber" &&
                                         (cfg.get("basis.shift") == "auto" ||
                                          cfg.get("basis.width") == "auto"))) {
    const auto spec = cfg.chain_spec();
    gamma = emz::gamma_coefficients(emz::observable_polynomial(u), 2, spec,
                                    cfg.get_int("fit.max_degree"));
    omega = gamma[0];
  }
  omega = resolve_auto(cfg, "fit.omega", omega);
  emz::BasisSpec basis = cfg.basis();
  if (basis.kind == emz::BasisKind::laguerre && cfg.get("basis.sigma") == "auto")
    basis.sigma = emz::default_laguerre_sigma(c);
  if (basis.kind == emz::BasisKind::faber) {
    const auto d = gamma.empty() ? emz::BasisSpec::faber(0, 1) : emz::default_faber_basis(gamma);
    basis.shift = resolve_auto(cfg, "basis.shift", d.shift);
    basis.width = resolve_auto(cfg, "basis.width", d.width);
  }
  int threads = cfg.get_int("ensemble.threads");
  if (threads == 0) threads = cfg.ensemble().threads;
  auto fit = emz::fit_kernel_dd(c, omega, basis, order, cfg.get_doubles("fit.lambda_grid"),
                                cfg.get_double("fit.weight_rate"), threads);
  fit.model.observable.name = u.name();
  write_kernel_outputs(run, fit.model);
  json scores = json::array();
  for (const auto& s : fit.scores)
    scores.push_back({{"lambda", s.lambda},
                      {"replay_error", std::isfinite(s.replay_error) ? json(s.replay_error) : json("inf")},
                      {"rms_residual", s.residual},
                      {"kkt_residual", s.kkt_residual},
                      {"nonzeros", s.nonzeros},
                      {"sweeps", s.sweeps},
                      {"converged", s.converged}});
  emz::write_json(run.out("fit_report.json"),
                  {{"lambda", fit.lambda},
                   {"replay_error", fit.replay_error},
                   {"omega", omega},
                   {"basis", emz::to_json(fit.model)["basis"]},
                   {"derivative", "4th-order finite differences; y carries an O(dt^4) error floor"},
                   {"scores", scores}});
}

void cmd_solve_gle(Run& run) {
  const auto model = emz::load_kernel_model(run.input("gle.kernel", "kernel.json"));
  const double c0 = resolve_auto(run.cfg, "gle.c0", model.observable.c0);
  const double dt = run.cfg.get_double("gle.dt");
  const int steps = static_cast<int>(std::llround(run.cfg.get_double("gle.t_end") / dt));
  const auto c = emz::solve_projected_gle(model, c0, dt, steps);
  emz::write_sampled(run.out("gle.csv"), run.hash, c);
}

void cmd_kl_build(Run& run) {
  const auto model = emz::load_kernel_model(run.input("rom.kernel", "kernel.json"));
  const auto ens = run.cfg.ensemble();
  const double var = resolve_auto(run.cfg, "rom.u0_variance", model.observable.c0);
  const int points = ens.steps() + 1;
  const auto cov = emz::fluctuation_covariance(model, var, ens.dt, points);
  const int modes = std::min(run.cfg.get_int("rom.modes"), points);
  const auto kl = emz::kl_decompose(cov, modes);
  emz::save_kl_model(run.out("kl.json"), kl);
  std::vector<double> idx(kl.modes());
  for (int k = 0; k < kl.modes(); ++k) idx[k] = k + 1;
  emz::write_csv(run.out("kl_eigenvalues.csv"), run.hash, {"k", "lambda"}, {idx, kl.eigenvalues});
}

void cmd_rom_run(Run& run) {
  const auto model = emz::load_kernel_model(run.input("rom.kernel", "kernel.json"));
  const auto kl = emz::load_kl_model(run.input("rom.kl", "kl.json"));
  emz::RomOptions opt;
  opt.u0_variance = resolve_auto(run.cfg, "rom.u0_variance", model.observable.c0);
  opt.markovian_noise = run.cfg.get_bool("rom.markovian_noise");
  const auto store = emz::run_rom(model, kl, opt, run.cfg.ensemble());
  emz::save_store(run.out(store_name(run.cfg, "rom_trajectories")), store, run.manifest());
}

void cmd_compare(Run& run) {
  const auto& cfg = run.cfg;
  if (cfg.get("compare.reference").empty() || cfg.get("compare.candidate").empty())
    throw emz::ConfigError("compare: set compare.reference and compare.candidate");
  std::vector<double> ref_se;
  const auto ref = emz::read_sampled(run.input("compare.reference", ""), &ref_se);
  const auto cand = emz::read_sampled(run.input("compare.candidate", ""));
  const bool normalize = cfg.get_bool("compare.normalize");
  const double t_max =
      resolve_auto(cfg, "compare.t_max", std::min(ref.t_end(), cand.t_end()));
  const double rs = normalize ? ref.values[0] : 1.0;
  const double cs = normalize ? cand.values[0] : 1.0;
  if (rs == 0.0 || cs == 0.0) throw emz::NumericalError("compare: cannot normalize by zero");
  std::vector<double> t, r, c, d;
  double sup = 0.0, se_max = 0.0;
  for (std::size_t i = 0; i < ref.size() && ref.time(i) <= t_max + 1e-12; ++i) {
    const double x = ref.time(i);
    const double pos = (x - cand.t0) / cand.dt;
    const auto j = static_cast<std::size_t>(std::floor(pos));
    if (pos < -1e-9 || j + 1 > cand.size()) break;
    const double frac = j + 1 < cand.size() ? pos - j : 0.0;
    const double cv = j + 1 < cand.size() ? (1 - frac) * cand[j] + frac * cand[j + 1] : cand[j];
    t.push_back(x);
    r.push_back(ref[i] / rs);
    c.push_back(cv / cs);
    d.push_back(c.back() - r.back());
    sup = std::max(sup, std::abs(d.back()));
    if (!ref_se.empty()) se_max = std::max(se_max, ref_se[i] / std::abs(rs));
  }
  emz::write_csv(run.out("compare.csv"), run.hash, {"t", "reference", "candidate", "difference"},
                 {t, r, c, d});
  json summary = {{"sup_norm", sup}, {"t_max", t.empty() ? 0.0 : t.back()},
                  {"normalized", normalize}, {"reference_max_std_error", se_max}};
  if (!cfg.get("compare.tolerance").empty()) {
    const double tol = cfg.get_double("compare.tolerance");
    summary["tolerance"] = tol;
    summary["pass"] = sup <= tol;
  }
  emz::write_json(run.out("compare.json"), summary);
  std::cout << "sup-norm difference " << sup << "\n";
}

void cmd_decay_fit(Run& run) {
  const auto c = emz::read_sampled(run.input("decay.input", "acf.csv"));
  std::optional<double> floor;
  if (!run.cfg.get("decay.noise_floor").empty()) floor = run.cfg.get_double("decay.noise_floor");
  const auto d = emz::fit_exponential_bound(c, floor);
  emz::write_json(run.out("decay.json"), decay_json(d));
  std::cout << "c = " << d.c << ", alpha = " << d.alpha << " (" << d.verdict << ")\n";
}

void cmd_report(Run& run) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(run.out_dir))
    if (e.path().extension() == ".json" && e.path().filename() != "report.manifest.json")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::ofstream md(run.out("report.md"));
  md << "# Run report\n\n";
  for (const auto& f : files) {
    const json j = emz::read_json(f.string());
    if (j.contains("format")) continue;  // model files, summarized elsewhere
    md << "## " << f.filename().string() << "\n\n";
    if (j.contains("command")) {
      md << "- command: " << j["command"].get<std::string>() << "\n";
      md << "- manifest hash: " << j["hash"].get<std::string>() << "\n";
      md << "- wall time: " << j["wall_time_s"].dump() << " s\n\n";
    } else {
      md << "```json\n" << j.dump(2) << "\n```\n\n";
    }
  }
  if (!md) throw emz::ResourceError("cannot write report.md");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory-kernel and reduced-order modeling experiments for stochastic chains"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  std::string seed;
  int threads = -1;
  app.add_option("--config", config_path, "config file (INI sections)");
  app.add_option("--set", overrides, "override, section.key=value (repeatable)");
  app.add_option("--seed", seed, "master seed (ensemble.seed)");
  app.add_option("--out-dir", out_dir, "artifact directory");
  app.add_option("--threads", threads, "worker threads (ensemble.threads)");

  std::string method = "first-principle";
  const std::vector<std::string> names = {"simulate",  "acf",     "neq-mean", "kde",
                                          "fit-kernel", "solve-gle", "kl-build", "rom-run",
                                          "compare",   "decay-fit", "report"};
  for (const auto& n : names) {
    auto* sub = app.add_subcommand(n);
    if (n == "fit-kernel")
      sub->add_option("--method", method, "first-principle | data-driven")
          ->check(CLI::IsMember({"first-principle", "data-driven"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  Run run;
  run.command = app.get_subcommands().front()->get_name();
  try {
    run.cfg = config_path.empty() ? Config() : Config::from_file(config_path);
    for (const auto& o : overrides) run.cfg.apply_override(o);
    if (!seed.empty()) run.cfg.set("ensemble.seed", seed);
    if (threads >= 0) run.cfg.set("ensemble.threads", std::to_string(threads));
    if (run.command == "fit-kernel") run.cfg.set("fit.method", method);
    method = run.cfg.get("fit.method");
    run.out_dir = out_dir;
    fs::create_directories(run.out_dir);
    // Thread count and paths do not change results; they stay out of the hash.
    json det = run.cfg.resolved();
    det["ensemble"].erase("threads");
    for (const char* k : {"store", "acf", "kernel", "kl", "reference", "candidate", "input"})
      for (auto& [section, body] : det.items())
        if (body.contains(k)) body.erase(k);
    run.hash = emz::fnv1a_hex(json{{"command", run.command}, {"config", det},
                                   {"version", emz::kVersion}}.dump());

    if (run.command == "simulate") cmd_simulate(run);
    else if (run.command == "acf") cmd_acf(run);
    else if (run.command == "neq-mean") cmd_neq_mean(run);
    else if (run.command == "kde") cmd_kde(run);
    else if (run.command == "fit-kernel") cmd_fit_kernel(run, method);
    else if (run.command == "solve-gle") cmd_solve_gle(run);
    else if (run.command == "kl-build") cmd_kl_build(run);
    else if (run.command == "rom-run") cmd_rom_run(run);
    else if (run.command == "compare") cmd_compare(run);
    else if (run.command == "decay-fit") cmd_decay_fit(run);
    else if (run.command == "report") cmd_report(run);
    run.finish();
  } catch (const emz::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const emz::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const emz::ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
