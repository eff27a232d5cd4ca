#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "osl/error.hpp"
#include "osl/harness.hpp"

using osl::PairSample;

namespace {

std::string error_message(osl::ErrorKind kind, const auto& fn) {
  try {
    fn();
  } catch (const osl::Error& e) {
    if (e.kind() == kind) return e.what();
    return "wrong kind: " + std::string(e.what());
  }
  return "no error";
}

std::vector<PairSample> curve(double c, double slope, std::size_t n, double noise = 0.0, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(std::log(1e-6), std::log(1e-2));
  std::normal_distribution<double> g(0.0, noise);
  std::vector<PairSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::exp(u(rng));
    PairSample p;
    p.pair_id = i;
    p.d_base = d;
    p.dist_subspace = c * std::pow(d, slope) * (noise > 0.0 ? std::exp(g(rng)) : 1.0);
    p.i_index = 1;
    p.x_id = i;
    p.y_id = n + i;
    out.push_back(p);
  }
  return out;
}

osl::ExperimentConfig small_perturbed(std::size_t samples) {
  auto cfg = osl::parse_config(R"(
system = perturbed_diagonal
diag = 4 0.25
rho = 0.01
nu = 0.5
seed = 99
eps = 0.1
horizon = 15
horizon_sweep = 5 10 15
filtration_horizon = 20
delta_min = 1e-5
delta_max = 1e-2
)");
  cfg.sample_count = samples;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = osl::parse_config(R"(# comment line
name = demo   # trailing comment
system = shift_iid
matrices = 2 0; 0 0.5 | 0 -1; 1 0
eps = 0.05
ell_sweep = 1, 2, 4
horizon_sweep = 10 20
samples = 17
seed = 18446744073709551615
)");
  CHECK(cfg.name == "demo");
  CHECK(cfg.system.kind == osl::SystemKind::shift_iid);
  REQUIRE(cfg.system.matrices.size() == 2);
  CHECK(cfg.system.matrices[1](0, 1) == -1.0);
  CHECK(cfg.system.matrices[0](1, 1) == 0.5);
  CHECK(cfg.eps == 0.05);
  CHECK(cfg.ell_sweep == std::vector<double>{1, 2, 4});
  CHECK(cfg.horizon_sweep == std::vector<long>{10, 20});
  CHECK(cfg.sample_count == 17);
  CHECK(cfg.system.seed == 18446744073709551615ULL);
}

TEST_CASE("malformed configs report line and field") {
  const auto unknown = error_message(osl::ErrorKind::ConfigError, [] { osl::parse_config("eps = 0.1\nfoo = 3\n", "x.cfg"); });
  CHECK(unknown.find("x.cfg:2") != std::string::npos);
  CHECK(unknown.find("foo") != std::string::npos);

  const auto bad_number = error_message(osl::ErrorKind::ConfigError, [] { osl::parse_config("\n\neps = abc\n", "y.cfg"); });
  CHECK(bad_number.find("y.cfg:3") != std::string::npos);
  CHECK(bad_number.find("field 'eps'") != std::string::npos);

  const auto no_eq = error_message(osl::ErrorKind::ConfigError, [] { osl::parse_config("eps 0.1\n", "z.cfg"); });
  CHECK(no_eq.find("z.cfg:1") != std::string::npos);

  const auto dup = error_message(osl::ErrorKind::ConfigError, [] { osl::parse_config("eps = 0.1\neps = 0.2\n"); });
  CHECK(dup.find("line 1") != std::string::npos);

  const auto ragged = error_message(osl::ErrorKind::ConfigError, [] { osl::parse_config("matrix = 1 2; 3\n"); });
  CHECK(ragged.find("field 'matrix'") != std::string::npos);

  const auto window = error_message(osl::ErrorKind::ConfigError, [] { osl::parse_config("delta_min = 1\ndelta_max = 0.1\n"); });
  CHECK(window.find("delta_min") != std::string::npos);
}

TEST_CASE("holder_fit on an exact power law") {
  const auto fit = osl::holder_fit(curve(2.0, 0.5, 200));
  CHECK(std::abs(fit.slope - 0.5) <= 1e-12);
  CHECK(std::abs(fit.intercept_log - std::log(2.0)) <= 1e-10);
  CHECK(std::abs(fit.r_squared - 1.0) <= 1e-12);
  CHECK(fit.n_pairs == 200);
}

TEST_CASE("holder_fit with 1% multiplicative noise matches the reference regression") {
  const auto pairs = curve(2.0, 0.5, 200, 0.01, 7);
  const auto fit = osl::holder_fit(pairs);
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& p : pairs) {
    x.push_back(std::log(p.d_base));
    y.push_back(std::log(p.dist_subspace));
  }
  const auto ref = oracle::least_squares(x, y);
  CHECK(std::abs(fit.slope - 0.5) <= 0.02);
  CHECK(fit.slope == doctest::Approx(ref.slope).epsilon(1e-10));
  CHECK(fit.intercept_log == doctest::Approx(ref.intercept).epsilon(1e-10));
  CHECK(fit.r_squared > 0.99);
}

TEST_CASE("holder_fit recovers planted slopes") {
  for (double slope : {0.25, 0.5, 0.75, 1.0}) {
    CHECK(std::abs(osl::holder_fit(curve(0.3, slope, 200)).slope - slope) <= 0.02);
  }
}

TEST_CASE("holder_fit refuses degenerate data") {
  auto zeros = curve(1.0, 0.5, 200);
  for (auto& p : zeros) p.dist_subspace = 0.0;
  const auto msg = error_message(osl::ErrorKind::InsufficientData, [&] { osl::holder_fit(zeros); });
  CHECK(msg.find("200 zero-distance") != std::string::npos);

  const auto outside = error_message(osl::ErrorKind::InsufficientData,
                                     [] { osl::holder_fit(curve(1.0, 0.5, 200), 1e-12, 1e-10); });
  CHECK(outside.find("0 usable") != std::string::npos);
}

TEST_CASE("compare_to_theorem") {
  osl::Prediction pred;
  pred.i = 1;
  pred.omega_i = 0.8;
  pred.nu = 0.5;
  pred.constant = 1.0;

  auto zeros = curve(1.0, 0.5, 50);
  for (auto& p : zeros) p.dist_subspace = 0.0;
  const auto vacuous = osl::compare_to_theorem(std::nullopt, zeros, pred, 0.1);
  CHECK(vacuous.passed);
  CHECK(vacuous.details.at("pointwise_violations") == 0.0);

  const auto flat = curve(10.0, 0.0, 50);
  const auto fit = osl::holder_fit(flat);
  CHECK(std::abs(fit.slope) < 1e-12);
  const auto adversarial = osl::compare_to_theorem(fit, flat, pred, 0.1);
  CHECK_FALSE(adversarial.passed);
  CHECK(adversarial.details.at("pointwise_violation_fraction") == 1.0);

  const auto steep = curve(0.5, 0.6, 50);
  CHECK(osl::compare_to_theorem(osl::holder_fit(steep), steep, pred, 0.1).passed);
}

TEST_CASE("pairs CSV layout") {
  std::vector<PairSample> pairs(1);
  pairs[0] = {0, 0.001, 0.25, 2, 5, 105};
  CHECK(osl::pairs_csv(pairs) == "pair_id,d_base,dist_subspace,i_index,x_id,y_id\n0,0.001,0.25,2,5,105\n");
}

TEST_CASE("constant systems give identically zero distances") {
  auto cfg = osl::parse_config("system = constant\nmatrix = 2 1; 1 1\nsamples = 30\nhorizon = 10\n");
  const auto sys = osl::make_system(cfg.system);
  const auto set = osl::sample_block_pairs(sys, cfg, 2);
  CHECK(set.block.fraction == 1.0);
  CHECK(set.pairs.size() == 30);
  for (const auto& p : set.pairs) {
    CHECK(p.dist_subspace < 1e-12);
    CHECK(p.d_base >= cfg.delta_min);
    CHECK(p.d_base <= cfg.delta_max);
  }
}

TEST_CASE("a window holding no base distance yields an empty pair list") {
  // Shift distances are powers of two; (0.3, 0.4) contains none.
  auto cfg = osl::parse_config(
      "system = shift_holder\ndiag = 2 0.5\nrho = 0.05\nnu = 0.5\nsamples = 10\nhorizon = 5\n"
      "delta_min = 0.3\ndelta_max = 0.4\n");
  const auto sys = osl::make_system(cfg.system);
  const auto set = osl::sample_block_pairs(sys, cfg);
  CHECK(set.block.passed > 0);
  CHECK(set.pairs.empty());
}

TEST_CASE("run_experiment on the bundled constant cat config") {
  const auto cfg = osl::load_config(std::string(OSL_CONFIG_DIR) + "/cat_constant.cfg");
  const auto result = osl::run_experiment(cfg, {}, 2);
  CHECK(result.passed);
  const auto report = nlohmann::json::parse(result.report);
  const double top = std::log((3 + std::sqrt(5.0)) / 2);
  CHECK(std::abs(report["spectrum"]["exponents"][0].get<double>() + top) < 1e-8);
  CHECK(std::abs(report["spectrum"]["exponents"][1].get<double>() - top) < 1e-8);
  CHECK(report["verdict"] == "pass");
  CHECK(report["versions"]["schema"] == 1);
  CHECK(report["fit"]["n_pairs"] == 0);
  CHECK(report.contains("prediction"));
  CHECK(result.csv.rfind("pair_id,d_base,dist_subspace,i_index,x_id,y_id\n", 0) == 0);
}

TEST_CASE("run_experiment on the bundled triple sweep config") {
  auto cfg = osl::load_config(std::string(OSL_CONFIG_DIR) + "/triple_lemma_sweep.cfg");
  cfg.lemma_instances = 40;
  const auto result = osl::run_experiment(cfg, {}, 1);
  CHECK(result.passed);
  const auto report = nlohmann::json::parse(result.report);
  CHECK(report["lemma_sweep"]["violations"] == 0);
  CHECK(report["lemma_sweep"]["accepted"] == 40);
  CHECK(result.csv.rfind("instance,label,n,delta,bound,measured,passed\n", 0) == 0);
}

TEST_CASE("pair CSVs are identical across thread counts") {
  const auto cfg = small_perturbed(24);
  const auto one = osl::run_experiment(cfg, {}, 1);
  const auto four = osl::run_experiment(cfg, {}, 4);
  CHECK(one.csv == four.csv);
  CHECK(one.report == four.report);
  CHECK(one.csv.size() > 100);
}

TEST_CASE("perturbed pairs have positive distances") {
  const auto cfg = small_perturbed(24);
  const auto sys = osl::make_system(cfg.system);
  const auto set = osl::sample_block_pairs(sys, cfg);
  REQUIRE(!set.pairs.empty());
  for (const auto& p : set.pairs) CHECK(p.dist_subspace > 0.0);
  double prev = 0.0;
  for (const auto& s : set.block.ell_sweep) {
    CHECK(s.fraction >= prev);
    prev = s.fraction;
  }
}
