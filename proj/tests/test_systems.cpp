#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "osl/error.hpp"
#include "osl/oseledets.hpp"
#include "osl/systems.hpp"

using osl::Matrix;
using osl::Point;

namespace {

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

bool invalid(const osl::SystemSpec& spec) {
  try {
    osl::make_system(spec);
  } catch (const osl::Error& e) {
    return e.kind() == osl::ErrorKind::InvalidSpec;
  }
  return false;
}

std::vector<osl::SystemSpec> bundled_specs() {
  std::vector<osl::SystemSpec> out;
  osl::SystemSpec s;
  s.kind = osl::SystemKind::constant;
  s.matrix = diag2(2.0, 0.5);
  out.push_back(s);
  s.base = osl::BaseKind::doubling;
  out.push_back(s);
  s = {};
  s.kind = osl::SystemKind::cat_map;
  out.push_back(s);
  s = {};
  s.kind = osl::SystemKind::shift_iid;
  s.matrices = {diag2(2.0, 0.5), osl::rotation(0.3)};
  out.push_back(s);
  s = {};
  s.kind = osl::SystemKind::shift_holder;
  s.diag = Eigen::Vector2d(2.0, 0.5);
  s.rho = 0.05;
  s.nu = 0.5;
  out.push_back(s);
  s = {};
  s.kind = osl::SystemKind::perturbed_diagonal;
  s.diag = Eigen::Vector2d(4.0, 0.25);
  s.rho = 0.01;
  s.nu = 0.5;
  out.push_back(s);
  s = {};
  s.kind = osl::SystemKind::linear_flow;
  s.rates = Eigen::Vector2d(-1.0, 1.0);
  s.tau = 0.5;
  out.push_back(s);
  return out;
}

}  // namespace

TEST_CASE("constant generator over the cat map") {
  osl::SystemSpec spec;
  spec.kind = osl::SystemKind::constant;
  spec.matrix = diag2(2.0, 0.5);
  const auto sys = osl::make_system(spec);
  CHECK(sys.invertible);
  Matrix cat(2, 2);
  cat << 2, 1, 1, 1;
  const double top = std::exp(oracle::eigen_lines(cat).back().log_abs);
  CHECK(sys.lipschitz_L == doctest::Approx(top).epsilon(1e-12));
  CHECK(sys.lipschitz_L == doctest::Approx((3 + std::sqrt(5.0)) / 2).epsilon(1e-12));
}

TEST_CASE("doubling base is non-invertible with L = 2") {
  osl::SystemSpec spec;
  spec.kind = osl::SystemKind::doubling;
  spec.matrix = diag2(2.0, 0.5);
  const auto sys = osl::make_system(spec);
  CHECK_FALSE(sys.invertible);
  CHECK(sys.lipschitz_L == 2.0);
}

TEST_CASE("shift_iid generator is locally constant with c0 from pairwise distances") {
  osl::SystemSpec spec;
  spec.kind = osl::SystemKind::shift_iid;
  spec.matrices = {diag2(2.0, 0.5), osl::rotation(0.3)};
  const auto sys = osl::make_system(spec);
  CHECK(sys.holder_nu == 1.0);
  CHECK(sys.holder_c0 == doctest::Approx(oracle::power_norm(spec.matrices[0] - spec.matrices[1])).epsilon(1e-9));
  CHECK(sys.holder_c0 == doctest::Approx(oracle::norm2x2(spec.matrices[0] - spec.matrices[1])).epsilon(1e-12));
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Point x = sys.sample(s);
    const Point y = sys.neighbor(x, std::pow(2.0, -static_cast<double>(s % 12)), s);
    const double d = sys.metric(x, y);
    CHECK(oracle::norm2x2(sys.generator(x) - sys.generator(y)) <= sys.holder_c0 * d + 1e-12);
  }
}

TEST_CASE("shift metric is 2-Lipschitz under the shift") {
  osl::SystemSpec spec;
  spec.kind = osl::SystemKind::shift_holder;
  spec.diag = Eigen::Vector2d(2.0, 0.5);
  spec.rho = 0.1;
  spec.nu = 0.5;
  const auto sys = osl::make_system(spec);
  CHECK(sys.lipschitz_L == 2.0);
  for (std::uint64_t s = 0; s < 500; ++s) {
    const Point x = sys.sample(s);
    const Point y = sys.neighbor(x, std::pow(2.0, -static_cast<double>(s % 20)), s + 1);
    CHECK(sys.metric(sys.step(x), sys.step(y)) <= 2.0 * sys.metric(x, y) + 1e-15);
  }
}

TEST_CASE("declared Hoelder constants dominate sampled generator differences") {
  for (const auto& spec : bundled_specs()) {
    const auto sys = osl::make_system(spec);
    for (std::uint64_t s = 0; s < 300; ++s) {
      const Point x = sys.sample(s);
      const Point y = sys.neighbor(x, std::pow(10.0, -1.0 - static_cast<double>(s % 6)), s + 7);
      const double d = sys.metric(x, y);
      if (d == 0.0) continue;
      const double diff = oracle::power_norm(sys.generator(x) - sys.generator(y));
      CHECK(diff <= sys.holder_c0 * std::pow(d, sys.holder_nu) * (1 + 1e-9) + 1e-12);
      CHECK(oracle::power_norm(sys.generator(x)) <= sys.growth_bound * (1 + 1e-9));
    }
  }
}

TEST_CASE("every bundled system passes verify_iterate_holder at n_max = 10") {
  for (const auto& spec : bundled_specs()) {
    const auto sys = osl::make_system(spec);
    std::vector<std::pair<Point, Point>> pairs;
    for (std::uint64_t s = 0; s < 50; ++s) {
      const Point x = sys.sample(s);
      pairs.emplace_back(x, sys.neighbor(x, std::pow(10.0, -2.0 - static_cast<double>(s % 4)), s + 3));
    }
    INFO(sys.name);
    CHECK(osl::verify_iterate_holder(sys, pairs, 10).passed);
  }
}

TEST_CASE("flow_time_map rescales exponents by tau") {
  osl::SystemSpec spec;
  spec.kind = osl::SystemKind::linear_flow;
  spec.rates = Eigen::Vector2d(-1.0, 1.0);
  for (double tau : {1.0, 0.5}) {
    const auto sys = osl::flow_time_map(spec, tau);
    CHECK(sys.time_step == tau);
    const auto s = osl::lyapunov_spectrum(sys, sys.sample(0), 500);
    REQUIRE(s.count() == 2);
    CHECK(s.exponents[0] == doctest::Approx(-tau).epsilon(1e-10));
    CHECK(s.exponents[1] == doctest::Approx(tau).epsilon(1e-10));
  }
  bool threw = false;
  try {
    osl::flow_time_map(spec, 0.0);
  } catch (const osl::Error& e) {
    threw = e.kind() == osl::ErrorKind::InvalidSpec;
  }
  CHECK(threw);
  spec.tau = -1.0;
  CHECK(invalid(spec));
}

TEST_CASE("invalid specs are rejected") {
  osl::SystemSpec spec;
  spec.kind = osl::SystemKind::cat_map;
  spec.cat_matrix = diag2(2.0, 1.0);
  CHECK(invalid(spec));
  spec.cat_matrix << 2.5, 1, 1, 1;
  CHECK(invalid(spec));
  spec = {};
  spec.kind = osl::SystemKind::shift_iid;
  spec.matrices = {diag2(2.0, 0.5)};
  CHECK(invalid(spec));
  spec = {};
  spec.kind = osl::SystemKind::perturbed_diagonal;
  spec.diag = Eigen::Vector2d(4.0, 0.25);
  spec.nu = 1.5;
  CHECK(invalid(spec));
  spec = {};
  spec.kind = osl::SystemKind::constant;
  spec.matrix = diag2(1.0, 0.0);
  CHECK(invalid(spec));
}

TEST_CASE("systems are deterministic in the seed") {
  for (const auto& spec : bundled_specs()) {
    const auto a = osl::make_system(spec);
    const auto b = osl::make_system(spec);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Point x = a.sample(s);
      const Point y = b.sample(s);
      CHECK(a.metric(x, y) == 0.0);
      CHECK((a.generator(x) - b.generator(y)).norm() == 0.0);
      CHECK(a.metric(a.neighbor(x, 1e-3, s), b.neighbor(y, 1e-3, s)) == 0.0);
    }
  }
}

TEST_CASE("kind names round trip") {
  for (auto k : {osl::SystemKind::constant, osl::SystemKind::cat_map, osl::SystemKind::doubling,
                 osl::SystemKind::shift_iid, osl::SystemKind::shift_holder, osl::SystemKind::perturbed_diagonal,
                 osl::SystemKind::linear_flow}) {
    CHECK(osl::parse_system_kind(osl::to_string(k)) == k);
  }
  for (auto k : {osl::BaseKind::cat_map, osl::BaseKind::doubling, osl::BaseKind::translation}) {
    CHECK(osl::parse_base_kind(osl::to_string(k)) == k);
  }
}
