#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "emz/config.hpp"
#include "emz/errors.hpp"
#include "emz/io.hpp"

using namespace emz;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "emz_test_io";
  fs::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = Config::from_string(
      "[model]\n"
      "n = 12\n"
      "theta = 1   # quartic\n"
      "gamma_sites = 0:2.5, 3:0\n"
      "; comment\n"
      "[ensemble]\n"
      "paths = 50\n"
      "observables = p3, r2^2\n");
  CHECK(c.get_int("model.n") == 12);
  CHECK(c.get_double("model.theta") == 1.0);
  CHECK(c.is_set("model.theta"));
  CHECK_FALSE(c.is_set("model.nu"));
  CHECK(c.get_double("model.nu") == 1.0);
  const auto spec = c.chain_spec();
  CHECK(spec.n == 12);
  CHECK(spec.gamma[0] == 2.5);
  CHECK(spec.gamma[1] == 1.0);
  CHECK(spec.gamma[3] == 0.0);
  CHECK(c.ensemble().paths == 50);
  const auto obs = c.observables();
  REQUIRE(obs.size() == 2);
  CHECK(obs[1].name() == "r2^2");
  CHECK(c.resolved()["model"]["n"] == "12");
}

TEST_CASE("config errors") {
  try {
    Config::from_string("[model]\nthetta = 1\n");
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("model.theta") != std::string::npos);
  }
  CHECK_THROWS_AS(Config::from_string("[nosection]\nx = 1\n"), ConfigError);
  auto c = Config::from_string("[model]\nn = ten\n");
  CHECK_THROWS_AS(c.get_int("model.n"), ConfigError);
  CHECK_THROWS_AS(c.apply_override("model.n"), ConfigError);
  c.apply_override("model.n=7");
  CHECK(c.get_int("model.n") == 7);
  CHECK_THROWS_AS(c.apply_override("ensemble.sead=3"), ConfigError);
  c.apply_override("ensemble.seed=-3");
  CHECK_THROWS_AS(c.get_u64("ensemble.seed"), ConfigError);
  CHECK_THROWS_AS(Config::from_file("/nonexistent/emz.ini"), ConfigError);
}

TEST_CASE("basis from config") {
  auto c = Config::from_string("[basis]\nkind = laguerre\norder = 6\nsigma = 0.5\n");
  const auto b = c.basis();
  CHECK(b.kind == BasisKind::laguerre);
  CHECK(b.sigma == 0.5);
  c.set("basis.sigma", "auto");
  CHECK(c.basis().sigma == 0.0);
}

TEST_CASE("numbers and CSV round trip") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e22, 0.0})
    CHECK(std::stod(format_double(v)) == v);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");

  const auto path = scratch("t.csv");
  write_csv(path, "abc123", {"t", "x"}, {{0.0, 0.5, 1.0}, {1.0 / 3.0, 2.0, -4.0}});
  const auto t = read_csv(path);
  CHECK(t.manifest_hash == "abc123");
  CHECK(t.header == std::vector<std::string>{"t", "x"});
  CHECK(t.column("x")[0] == 1.0 / 3.0);
  CHECK_FALSE(t.has_column("y"));
  CHECK_THROWS_AS(t.column("y"), ConfigError);

  SampledFunction f;
  f.dt = 0.25;
  f.values = {1.0, 0.5, 0.25};
  write_sampled(path, "h", f, {0.1, 0.1, 0.2});
  std::vector<double> se;
  const auto g = read_sampled(path, &se);
  CHECK(g.dt == 0.25);
  CHECK(g.values == f.values);
  CHECK(se[2] == 0.2);

  std::ofstream(path) << "t,value\n0,1\n0.1,2\n0.3,3\n";
  CHECK_THROWS_AS(read_sampled(path), ConfigError);
}

TEST_CASE("model files round trip") {
  KernelModel k;
  k.omega = -1.25;
  k.basis = BasisSpec::faber(0.5, 2.0);
  k.coeffs = {0.1, -0.2, 1.0 / 7.0};
  k.observable = {"p50", 0.75};
  const auto kp = scratch("kernel.json");
  save_kernel_model(kp, k);
  const auto k2 = load_kernel_model(kp);
  CHECK(k2.omega == k.omega);
  CHECK(k2.basis.kind == BasisKind::faber);
  CHECK(k2.basis.shift == 0.5);
  CHECK(k2.basis.width == 2.0);
  CHECK(k2.coeffs == k.coeffs);
  CHECK(k2.observable.name == "p50");
  CHECK(k2.observable.c0 == 0.75);
  std::ofstream(kp) << "{\"format\": \"something-else\"}";
  CHECK_THROWS_AS(load_kernel_model(kp), ConfigError);

  KLModel kl;
  kl.dt = 0.1;
  kl.points = 3;
  kl.eigenvalues = {2.0, 0.5};
  kl.eigenfunctions.resize(3, 2);
  kl.eigenfunctions << 1, 2, 3, 4, 5, 6;
  kl.lambda_max = 2.0;
  kl.discarded_trace = 0.01;
  const auto lp = scratch("kl.json");
  save_kl_model(lp, kl);
  const auto kl2 = load_kl_model(lp);
  CHECK(kl2.eigenvalues == kl.eigenvalues);
  CHECK(kl2.eigenfunctions == kl.eigenfunctions);
  CHECK(kl2.discarded_trace == 0.01);
}

TEST_CASE("trajectory store round trip") {
  TrajectoryStore s({"p1", "r0^2"}, 2, 3, 0.0, 0.5);
  for (std::size_t i = 0; i < s.data.size(); ++i) s.data[i] = 0.1 * i - 1.0 / 3.0;
  for (const char* name : {"s.bin", "s.csv"}) {
    const auto path = scratch(name);
    save_store(path, s, {{"hash", "x"}});
    const auto r = load_store(path);
    CHECK(r.observables == s.observables);
    CHECK(r.paths == 2);
    CHECK(r.times == 3);
    CHECK(r.dt == 0.5);
    CHECK(r.data == s.data);
  }
  const auto bad = scratch("bad.bin");
  std::ofstream(bad) << "NOTASTORE\n";
  CHECK_THROWS(load_store(bad));
}
