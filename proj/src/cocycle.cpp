#include "osl/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "osl/error.hpp"

namespace osl {
namespace {

constexpr double kOverflowNorm = 1e300;

void check_overflow(const Matrix& m, long step) {
  const double frob = m.norm();
  if (!(frob < kOverflowNorm) && !(operator_norm(m) < kOverflowNorm)) {
    throw Error(ErrorKind::Overflow, "partial product norm exceeds 1e300 after " + std::to_string(step) +
                                         " steps; use the QR path");
  }
}

}  // namespace

std::uint8_t SymbolPoint::symbol(std::size_t k) const {
  if (!word || offset + k >= word->size()) {
    throw Error(ErrorKind::DomainError, "symbol index past the stored window");
  }
  return (*word)[offset + k];
}

double CocycleSystem::iterate_growth_constant() const { return std::max(lipschitz_L, growth_bound); }

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

Point advance(const CocycleSystem& sys, const Point& x, long n) {
  if (n < 0 && !sys.invertible) {
    throw Error(ErrorKind::NotInvertible, sys.name + ": backward orbit of a non-invertible system");
  }
  Point p = x;
  for (long j = 0; j < n; ++j) p = sys.step(p);
  for (long j = 0; j > n; --j) p = sys.inverse_step(p);
  return p;
}

Matrix iterate(const CocycleSystem& sys, const Point& x, long n) {
  const auto d = static_cast<Eigen::Index>(sys.dim);
  Matrix product = Matrix::Identity(d, d);
  if (n >= 0) {
    Point p = x;
    for (long j = 0; j < n; ++j) {
      product = sys.generator(p) * product;
      check_overflow(product, j + 1);
      if (j + 1 < n) p = sys.step(p);
    }
    return product;
  }
  if (!sys.invertible) {
    throw Error(ErrorKind::NotInvertible, sys.name + ": negative iterate of a non-invertible cocycle");
  }
  Point p = x;
  for (long j = 1; j <= -n; ++j) {
    p = sys.inverse_step(p);
    product = sys.generator(p).partialPivLu().solve(product);
    check_overflow(product, j);
  }
  return product;
}

double holder_iterate_constant(double c0, double nu, double lipschitz, double eps) {
  if (!(c0 > 0.0) || !(nu > 0.0 && nu <= 1.0) || !(lipschitz >= 1.0) || !(eps >= 0.0)) {
    throw Error(ErrorKind::DomainError, "holder_iterate_constant needs c0 > 0, nu in (0,1], L >= 1, eps >= 0");
  }
  return std::max({std::exp(eps), std::pow(lipschitz, 1.0 + nu), 1.0 + c0});
}

BoundReport verify_iterate_holder(const CocycleSystem& sys, const std::vector<std::pair<Point, Point>>& pairs,
                                  int n_max, double eps) {
  if (n_max < 1) throw Error(ErrorKind::DomainError, "verify_iterate_holder needs n_max >= 1");
  const double c1 = holder_iterate_constant(sys.holder_c0, sys.holder_nu, sys.iterate_growth_constant(), eps);
  const auto d = static_cast<Eigen::Index>(sys.dim);

  double worst_ratio = -1.0;
  double worst_lhs = 0.0;
  double worst_rhs = 0.0;
  double worst_margin = std::numeric_limits<double>::infinity();
  int worst_n = 0;
  std::size_t worst_pair = 0;
  std::size_t violations = 0;

  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& [x, y] = pairs[k];
    const double dist = sys.metric(x, y);
    if (!(dist > 0.0)) throw Error(ErrorKind::DomainError, "pair " + std::to_string(k) + " at zero base distance");
    Matrix ax = Matrix::Identity(d, d);
    Matrix ay = Matrix::Identity(d, d);
    Point px = x;
    Point py = y;
    const double dnu = std::pow(dist, sys.holder_nu);
    for (int n = 1; n <= n_max; ++n) {
      ax = sys.generator(px) * ax;
      ay = sys.generator(py) * ay;
      check_overflow(ax, n);
      check_overflow(ay, n);
      const double lhs = operator_norm(ax - ay);
      const double rhs = std::pow(c1, n) * dnu;
      const double ratio = lhs / rhs;
      worst_margin = std::min(worst_margin, rhs - lhs);
      if (lhs > rhs * (1.0 + 1e-9)) ++violations;
      if (ratio > worst_ratio) {
        worst_ratio = ratio;
        worst_lhs = lhs;
        worst_rhs = rhs;
        worst_n = n;
        worst_pair = k;
      }
      if (n < n_max) {
        px = sys.step(px);
        py = sys.step(py);
      }
    }
  }

  BoundReport report = BoundReport::make("iterate_holder", worst_rhs, worst_lhs);
  report.passed = violations == 0;
  report.details["c1"] = c1;
  report.details["worst_ratio"] = worst_ratio;
  report.details["worst_n"] = worst_n;
  report.details["worst_pair"] = static_cast<double>(worst_pair);
  report.details["worst_absolute_margin"] = pairs.empty() ? 0.0 : worst_margin;
  report.details["violations"] = static_cast<double>(violations);
  report.details["pairs"] = static_cast<double>(pairs.size());
  report.notes["system"] = sys.name;
  return report;
}

double check_system_invariants(const CocycleSystem& sys, const std::vector<Point>& points) {
  double worst = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& x = points[i];
    worst = std::max(worst, sys.metric(x, x));
    if (i + 1 < points.size()) {
      const auto& y = points[i + 1];
      worst = std::max(worst, std::abs(sys.metric(x, y) - sys.metric(y, x)));
    }
    const double det = std::abs(sys.generator(x).determinant());
    if (!(det > 1e-14)) throw Error(ErrorKind::InvalidSpec, sys.name + ": generator is numerically singular");
    if (sys.invertible) worst = std::max(worst, sys.metric(sys.step(sys.inverse_step(x)), x));
  }
  return worst;
}

}  // namespace osl
