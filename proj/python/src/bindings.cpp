#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "emz/basis.hpp"
#include "emz/dd_kernel.hpp"
#include "emz/errors.hpp"
#include "emz/fp_kernel.hpp"
#include "emz/gle.hpp"
#include "emz/io.hpp"
#include "emz/sim.hpp"

namespace py = pybind11;
using namespace emz;

namespace {

SampledFunction sampled(const std::vector<double>& values, double dt, double t0) {
  SampledFunction f;
  f.values = values;
  f.dt = dt;
  f.t0 = t0;
  return f;
}

py::array_t<double> as_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

}  // namespace

PYBIND11_MODULE(_emz, m) {
  m.doc() = "Memory kernels, GLE solvers and reduced-order models for stochastic chains";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ResourceError>(m, "ResourceError", PyExc_MemoryError);

  py::class_<SampledFunction>(m, "SampledFunction")
      .def(py::init(&sampled), py::arg("values"), py::arg("dt"), py::arg("t0") = 0.0)
      .def_readwrite("t0", &SampledFunction::t0)
      .def_readwrite("dt", &SampledFunction::dt)
      .def_property_readonly("values", [](const SampledFunction& f) { return as_array(f.values); })
      .def_property_readonly("times", [](const SampledFunction& f) {
        std::vector<double> t(f.size());
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = f.time(i);
        return as_array(t);
      })
      .def("__len__", &SampledFunction::size);

  py::class_<ChainSpec>(m, "ChainSpec")
      .def_static("fpu", [](int n, double mass, double nu, double theta, double beta, double gamma) {
        auto s = ChainSpec::fpu(n, mass, nu, theta, beta, gamma);
        s.validate();
        return s;
      }, py::arg("n"), py::arg("mass") = 1.0, py::arg("nu") = 1.0,
                  py::arg("theta") = 0.0, py::arg("beta") = 1.0, py::arg("gamma") = 1.0)
      .def_static("heat_conduction", [](int n, double nu, double theta, double temp_left, double temp_right) {
        ChainSpec s;
        s.kind = ModelKind::heat_conduction;
        s.n = n;
        s.nu = nu;
        s.theta = theta;
        s.temp_left = temp_left;
        s.temp_right = temp_right;
        s.validate();
        return s;
      }, py::arg("n"), py::arg("nu") = 1.0, py::arg("theta") = 0.0, py::arg("temp_left") = 1.0,
         py::arg("temp_right") = 1.0)
      .def_property_readonly("kind", [](const ChainSpec& s) { return to_string(s.kind); })
      .def_readwrite("n", &ChainSpec::n)
      .def_readwrite("mass", &ChainSpec::mass)
      .def_readwrite("nu", &ChainSpec::nu)
      .def_readwrite("theta", &ChainSpec::theta)
      .def_readwrite("beta", &ChainSpec::beta)
      .def_readwrite("gamma", &ChainSpec::gamma)
      .def_readwrite("pin_nu", &ChainSpec::pin_nu)
      .def_readwrite("pin_theta", &ChainSpec::pin_theta)
      .def("validate", &ChainSpec::validate);

  py::class_<EnsembleSpec>(m, "EnsembleSpec")
      .def(py::init([](int paths, double dt, double t_end, std::uint64_t seed, int save_stride,
                       double burn_in, int threads) {
             EnsembleSpec e;
             e.paths = paths;
             e.dt = dt;
             e.t_end = t_end;
             e.seed = seed;
             e.save_stride = save_stride;
             e.burn_in = burn_in;
             e.threads = threads;
             e.validate();
             return e;
           }),
           py::arg("paths") = 1, py::arg("dt") = 0.01, py::arg("t_end") = 1.0, py::arg("seed") = 0,
           py::arg("save_stride") = 1, py::arg("burn_in") = 0.0, py::arg("threads") = 1)
      .def_readwrite("paths", &EnsembleSpec::paths)
      .def_readwrite("dt", &EnsembleSpec::dt)
      .def_readwrite("t_end", &EnsembleSpec::t_end)
      .def_readwrite("seed", &EnsembleSpec::seed)
      .def_readwrite("save_stride", &EnsembleSpec::save_stride)
      .def_readwrite("threads", &EnsembleSpec::threads)
      .def_property("initial", [](const EnsembleSpec& e) { return to_string(e.initial); },
                    [](EnsembleSpec& e, const std::string& s) { e.initial = initial_mode_from_string(s); })
      .def_readwrite("initial_beta", &EnsembleSpec::initial_beta)
      .def_readwrite("initial_point", &EnsembleSpec::initial_point)
      .def("steps", &EnsembleSpec::steps);

  py::class_<TrajectoryStore>(m, "TrajectoryStore")
      .def_readonly("observables", &TrajectoryStore::observables)
      .def_readonly("paths", &TrajectoryStore::paths)
      .def_readonly("times", &TrajectoryStore::times)
      .def_readonly("dt", &TrajectoryStore::dt)
      // (paths, observables, times) copy of the samples
      .def_property_readonly("data", [](const TrajectoryStore& s) {
        py::array_t<double> a({static_cast<py::ssize_t>(s.paths),
                               static_cast<py::ssize_t>(s.observables.size()),
                               static_cast<py::ssize_t>(s.times)});
        std::copy(s.data.begin(), s.data.end(), a.mutable_data());
        return a;
      });

  py::class_<Estimate>(m, "Estimate")
      .def_readonly("value", &Estimate::value)
      .def_property_readonly("std_error", [](const Estimate& e) { return as_array(e.std_error); })
      .def_readonly("time_averaged", &Estimate::time_averaged);

  py::class_<DecayFit>(m, "DecayFit")
      .def_readonly("c", &DecayFit::c)
      .def_readonly("alpha", &DecayFit::alpha)
      .def_readonly("decays", &DecayFit::decays)
      .def_readonly("window_end", &DecayFit::window_end)
      .def_readonly("verdict", &DecayFit::verdict);

  m.def("simulate", [](const ChainSpec& spec, const EnsembleSpec& ens, const std::vector<std::string>& obs) {
    std::vector<Observable> o;
    for (const auto& s : obs) o.push_back(Observable::parse(s));
    py::gil_scoped_release release;
    return simulate_ensemble(spec, ens, o);
  }, py::arg("spec"), py::arg("ensemble"), py::arg("observables"));
  m.def("autocorrelation", &autocorrelation, py::arg("store"), py::arg("observable"),
        py::arg("time_average") = false);
  m.def("fit_exponential_bound", &fit_exponential_bound, py::arg("c"), py::arg("noise_floor") = py::none());
  m.def("pooled_samples", &pooled_samples, py::arg("store"), py::arg("observable"), py::arg("first_time") = 0,
        py::arg("time_stride") = 1);
  m.def("ks_distance", &ks_distance, py::arg("a"), py::arg("b"));

  py::class_<BasisSpec>(m, "BasisSpec")
      .def_static("taylor", &BasisSpec::taylor)
      .def_static("faber", &BasisSpec::faber, py::arg("shift"), py::arg("width"))
      .def_static("laguerre", &BasisSpec::laguerre, py::arg("sigma"))
      .def_property_readonly("kind", [](const BasisSpec& b) { return to_string(b.kind); })
      .def_readwrite("shift", &BasisSpec::shift)
      .def_readwrite("width", &BasisSpec::width)
      .def_readwrite("sigma", &BasisSpec::sigma)
      .def("evaluate", &BasisSpec::evaluate, py::arg("order"), py::arg("t"));
  m.def("bessel_j", &bessel_j, py::arg("n"), py::arg("x"));
  m.def("laguerre_basis", &laguerre_basis, py::arg("n"), py::arg("sigma"), py::arg("t"));

  py::class_<KernelModel>(m, "KernelModel")
      .def(py::init([](double omega, const BasisSpec& basis, std::vector<double> coeffs, double c0) {
             KernelModel k;
             k.omega = omega;
             k.basis = basis;
             k.coeffs = std::move(coeffs);
             k.observable.c0 = c0;
             return k;
           }),
           py::arg("omega"), py::arg("basis"), py::arg("coeffs"), py::arg("c0") = 1.0)
      .def_readwrite("omega", &KernelModel::omega)
      .def_readwrite("basis", &KernelModel::basis)
      .def_readwrite("coeffs", &KernelModel::coeffs)
      .def_property_readonly("c0", [](const KernelModel& k) { return k.observable.c0; })
      .def("__call__", &KernelModel::operator(), py::arg("t"))
      .def("sample", [](const KernelModel& k, double dt, int points) { return as_array(k.sample(dt, points)); },
           py::arg("dt"), py::arg("points"))
      .def("to_json", [](const KernelModel& k) { return to_json(k).dump(); });

  py::class_<FirstPrincipleFit>(m, "FirstPrincipleFit")
      .def_readonly("gamma", &FirstPrincipleFit::gamma)
      .def_readonly("mu", &FirstPrincipleFit::mu)
      .def_readonly("c0", &FirstPrincipleFit::c0)
      .def_readonly("model", &FirstPrincipleFit::model);
  m.def("gamma_coefficients", [](const ChainSpec& spec, const std::string& obs, int n_max, int max_degree) {
    return gamma_coefficients(observable_polynomial(Observable::parse(obs)), n_max, spec, max_degree);
  }, py::arg("spec"), py::arg("observable"), py::arg("n_max"), py::arg("max_degree") = kDefaultMaxDegree);
  m.def("fit_kernel_first_principle", [](const ChainSpec& spec, const std::string& obs, const BasisSpec& basis,
                                         int order, int max_degree) {
    return fit_kernel_first_principle(spec, Observable::parse(obs), basis, order, max_degree);
  }, py::arg("spec"), py::arg("observable"), py::arg("basis"), py::arg("order"),
        py::arg("max_degree") = kDefaultMaxDegree);
  m.def("default_faber_basis", &default_faber_basis, py::arg("gamma"));

  py::class_<LassoResult>(m, "LassoResult")
      .def_readonly("coeffs", &LassoResult::coeffs)
      .def_readonly("sweeps", &LassoResult::sweeps)
      .def_readonly("converged", &LassoResult::converged)
      .def_readonly("kkt_residual", &LassoResult::kkt_residual)
      .def_readonly("objective", &LassoResult::objective);
  m.def("lasso_fit", &lasso_fit, py::arg("x"), py::arg("y"), py::arg("lam"));

  py::class_<LambdaScore>(m, "LambdaScore")
      .def_readonly("lam", &LambdaScore::lambda)
      .def_readonly("replay_error", &LambdaScore::replay_error)
      .def_readonly("residual", &LambdaScore::residual)
      .def_readonly("nonzeros", &LambdaScore::nonzeros)
      .def_readonly("converged", &LambdaScore::converged);
  py::class_<DdFit>(m, "DdFit")
      .def_readonly("model", &DdFit::model)
      .def_readonly("lam", &DdFit::lambda)
      .def_readonly("replay_error", &DdFit::replay_error)
      .def_readonly("scores", &DdFit::scores);
  m.def("fit_kernel_dd", [](const SampledFunction& c, double omega, const BasisSpec& basis, int order,
                            const std::vector<double>& grid, double weight_rate, int threads) {
    py::gil_scoped_release release;
    return fit_kernel_dd(c, omega, basis, order, grid, weight_rate, threads);
  }, py::arg("c"), py::arg("omega"), py::arg("basis"), py::arg("order"),
        py::arg("lambda_grid") = std::vector<double>{0.0, 1e-8, 1e-6, 1e-5, 1e-4, 1e-3},
        py::arg("weight_rate") = 0.0, py::arg("threads") = 1);
  m.def("default_laguerre_sigma", &default_laguerre_sigma, py::arg("c"));

  m.def("solve_projected_gle", &solve_projected_gle, py::arg("kernel"), py::arg("c0"), py::arg("dt"),
        py::arg("steps"));

  py::class_<KLModel>(m, "KLModel")
      .def_readonly("dt", &KLModel::dt)
      .def_readonly("points", &KLModel::points)
      .def_readonly("eigenvalues", &KLModel::eigenvalues)
      .def_readonly("eigenfunctions", &KLModel::eigenfunctions)
      .def_readonly("discarded_trace", &KLModel::discarded_trace)
      .def_readonly("min_eigenvalue", &KLModel::min_eigenvalue)
      .def("modes", &KLModel::modes);
  m.def("kl_decompose", &kl_decompose, py::arg("covariance"), py::arg("modes"),
        py::arg("psd_tolerance") = kKlPsdTolerance);
  m.def("fluctuation_covariance", &fluctuation_covariance, py::arg("kernel"), py::arg("c0"), py::arg("dt"),
        py::arg("points"));
  m.def("sample_fluctuation", [](const KLModel& kl, std::uint64_t seed, std::uint64_t stream) {
    NormalStream rng(seed, stream);
    return sample_fluctuation(kl, rng);
  }, py::arg("kl"), py::arg("seed"), py::arg("stream") = 0);
  m.def("run_rom", [](const KernelModel& kernel, const KLModel& kl, const EnsembleSpec& ens, double u0_variance,
                      bool markovian_noise) {
    RomOptions opt;
    opt.u0_variance = u0_variance;
    opt.markovian_noise = markovian_noise;
    py::gil_scoped_release release;
    return run_rom(kernel, kl, opt, ens);
  }, py::arg("kernel"), py::arg("kl"), py::arg("ensemble"), py::arg("u0_variance"),
        py::arg("markovian_noise") = true);
}
