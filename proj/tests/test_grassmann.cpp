#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "osl/error.hpp"
#include "osl/grassmann.hpp"

using osl::Matrix;
using osl::Subspace;
using osl::Vector;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Subspace line(std::initializer_list<double> xs) { return osl::orthonormalize({vec(xs)}); }

Matrix cols(std::initializer_list<Vector> vs) {
  Matrix m(vs.begin()->size(), static_cast<Eigen::Index>(vs.size()));
  Eigen::Index j = 0;
  for (const auto& v : vs) m.col(j++) = v;
  return m;
}

bool throws_kind(osl::ErrorKind kind, const auto& fn) {
  try {
    fn();
  } catch (const osl::Error& e) {
    return e.kind() == kind;
  }
  return false;
}

}  // namespace

TEST_CASE("orthonormalize") {
  const auto e = osl::orthonormalize({vec({1, 0})});
  CHECK(e.dim() == 1);
  CHECK((e.frame() - vec({1, 0})).norm() < 1e-15);

  const auto full = osl::orthonormalize({vec({1, 0}), vec({1, 1})});
  CHECK(full.dim() == 2);
  CHECK((full.frame().transpose() * full.frame() - Matrix::Identity(2, 2)).norm() < 1e-12);

  CHECK(throws_kind(osl::ErrorKind::RankDeficient, [] { osl::orthonormalize({vec({1, 0}), vec({2, 0})}); }));
}

TEST_CASE("subspace_distance examples") {
  CHECK(osl::subspace_distance(line({1, 0}), line({1, 0})) == doctest::Approx(0.0));
  CHECK(osl::subspace_distance(line({1, 0}), line({0, 1})) == doctest::Approx(1.0));
  const double d = osl::subspace_distance(line({1, 0}), line({1, 1}));
  CHECK(d == doctest::Approx(std::sin(std::numbers::pi / 4)).epsilon(1e-12));
  CHECK(d == doctest::Approx(oracle::sampled_distance(vec({1, 0}), vec({1, 1}))).epsilon(1e-6));
}

TEST_CASE("subspace_distance agrees with sampled sup over random planes in R^4") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 10; ++t) {
    const Matrix a = oracle::random_matrix(4, 2, rng);
    const Matrix b = oracle::random_matrix(4, 2, rng);
    const double lib = osl::subspace_distance(osl::span(a), osl::span(b));
    const double ref = oracle::sampled_distance(a, b, 40000);
    CHECK(lib >= ref - 1e-9);
    CHECK(lib == doctest::Approx(ref).epsilon(1e-6));
  }
}

TEST_CASE("subspace_distance is symmetric and orthogonally invariant") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const int d = 2 + static_cast<int>(rng() % 5);
    const int k = 1 + static_cast<int>(rng() % (d - 1));
    const Subspace e = osl::span(oracle::random_matrix(d, k, rng));
    const Subspace f = osl::span(oracle::random_matrix(d, k, rng));
    const Matrix q = oracle::random_orthogonal(d, rng);
    const double dist = osl::subspace_distance(e, f);
    CHECK(dist == doctest::Approx(osl::subspace_distance(f, e)).epsilon(1e-12));
    CHECK(std::abs(osl::subspace_distance(osl::image(q, e), osl::image(q, f)) - dist) < 1e-10);
    CHECK(osl::subspace_distance(e, e) < 1e-12);
  }
}

TEST_CASE("graph_map") {
  const auto g0 = osl::graph_map(line({1, 0}), line({1, 0}));
  CHECK(g0.operator_norm == doctest::Approx(0.0));

  const auto e = line({1, 0});
  const auto f = line({1, 0.5});
  const auto g = osl::graph_map(e, f);
  CHECK(g.operator_norm == doctest::Approx(0.5).epsilon(1e-12));
  const double dist = oracle::sampled_distance(vec({1, 0}), vec({1, 0.5}));
  CHECK(dist >= 0.5 / std::sqrt(1.25) - 1e-9);
  CHECK(dist <= 0.5 + 1e-9);
  CHECK(osl::subspace_distance(e, f) == doctest::Approx(dist).epsilon(1e-6));

  CHECK(throws_kind(osl::ErrorKind::NotTransverse, [] { osl::graph_map(line({1, 0}), line({0, 1})); }));
}

TEST_CASE("graph norm sandwiches the distance on random transverse pairs") {
  std::mt19937_64 rng(13);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const int d = 2 + static_cast<int>(rng() % 5);
    const int k = 1 + static_cast<int>(rng() % (d - 1));
    const Subspace e = osl::span(oracle::random_matrix(d, k, rng));
    const Subspace f = osl::span(oracle::random_matrix(d, k, rng));
    const auto g = osl::graph_map(e, f);
    const double l = g.operator_norm;
    const double dist = osl::subspace_distance(e, f);
    CHECK(dist >= l / std::sqrt(1.0 + l * l) - 1e-10);
    CHECK(dist <= l + 1e-10);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("max_pair_cosine") {
  CHECK(osl::max_pair_cosine(line({1, 0}), line({0, 1})) == doctest::Approx(0.0));
  CHECK(osl::max_pair_cosine(line({1, 0}), line({1, 1})) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(oracle::sampled_max_cosine(vec({1, 0}), vec({1, 1})) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-9));

  const Matrix e = cols({vec({1, 0, 0}), vec({0, 1, 0})});
  const Matrix f = vec({1, 0, 1});
  const double lib = osl::max_pair_cosine(osl::span(e), osl::span(f));
  CHECK(lib == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(lib == doctest::Approx(oracle::sampled_max_cosine(e, f, 20000)).epsilon(1e-6));
}

TEST_CASE("component_norm_bound") {
  const auto orth = osl::component_norm_bound(line({1, 0}), line({0, 1}), vec({1, 1}));
  CHECK(orth.ratio == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));

  const auto e = line({1, 0});
  const auto f = line({1, 1});
  const auto s = osl::component_norm_bound(e, f, vec({0, 1}));
  // Direct 2x2 solve of a e1 + b (e1+e2)/sqrt2 = e2.
  Matrix m(2, 2);
  m << 1, 1 / std::sqrt(2.0), 0, 1 / std::sqrt(2.0);
  const Vector ab = m.fullPivLu().solve(vec({0, 1}));
  CHECK((s.v - ab(0) * vec({1, 0})).norm() < 1e-12);
  CHECK((s.w - ab(1) * vec({1, 1}) / std::sqrt(2.0)).norm() < 1e-12);
  CHECK(s.ratio == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(s.bound == doctest::Approx(1 / (1 - 1 / std::sqrt(2.0))).epsilon(1e-12));
  CHECK(s.within_bound);

  const auto in_e = osl::component_norm_bound(e, f, vec({1, 0}));
  CHECK(in_e.ratio == doctest::Approx(1.0));
  CHECK(in_e.w.norm() < 1e-15);
}

TEST_CASE("component ratio never exceeds the cosine bound") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 500; ++t) {
    const int d = 2 + static_cast<int>(rng() % 5);
    const int k = 1 + static_cast<int>(rng() % (d - 1));
    const Matrix basis = oracle::random_matrix(d, d, rng);
    const Subspace e = osl::span(basis.leftCols(k));
    const Subspace f = osl::span(basis.rightCols(d - k));
    const Vector u = oracle::random_matrix(d, 1, rng).col(0);
    const auto s = osl::component_norm_bound(e, f, u);
    CHECK((s.v + s.w - u).norm() < 1e-8 * u.norm() * s.bound);
    CHECK(s.ratio <= s.bound * (1 + 1e-9));
  }
}

TEST_CASE("grassmann_intersect") {
  const auto e2 = osl::grassmann_intersect(osl::span(cols({vec({1, 0, 0}), vec({0, 1, 0})})),
                                           osl::span(cols({vec({0, 1, 0}), vec({0, 0, 1})})));
  CHECK(e2.dim() == 1);
  CHECK(osl::subspace_distance(e2, line({0, 1, 0})) < 1e-12);

  const Matrix p = cols({vec({1, 0, 0}), vec({0, 1, 0})});
  const Matrix m = cols({vec({1, 0, 1}), vec({0, 1, -1})});
  const auto r = osl::grassmann_intersect(osl::span(p), osl::span(m));
  CHECK(r.dim() == 1);
  CHECK(osl::containment_residual(r, osl::span(p)) < 1e-9);
  CHECK(osl::containment_residual(r, osl::span(m)) < 1e-9);
  CHECK(osl::subspace_distance(r, osl::span(oracle::intersection_basis(p, m))) < 1e-9);

  std::mt19937_64 rng(19);
  const auto z = osl::grassmann_intersect(osl::span(oracle::random_matrix(4, 2, rng)),
                                          osl::span(oracle::random_matrix(4, 2, rng)));
  CHECK(z.is_zero());
}

TEST_CASE("grassmann_intersect on random general-position pairs") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 200; ++t) {
    const int d = 3 + static_cast<int>(rng() % 4);
    const int kp = 2 + static_cast<int>(rng() % (d - 2));
    const int km = d - kp + 1 + static_cast<int>(rng() % (kp - 1));
    if (km > d) continue;
    const Matrix p = oracle::random_matrix(d, kp, rng);
    const Matrix m = oracle::random_matrix(d, km, rng);
    const auto r = osl::grassmann_intersect(osl::span(p), osl::span(m));
    CHECK(static_cast<int>(r.dim()) == kp + km - d);
    CHECK(osl::containment_residual(r, osl::span(p)) < 1e-9);
    CHECK(osl::containment_residual(r, osl::span(m)) < 1e-9);
  }
}
