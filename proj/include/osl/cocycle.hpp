#ifndef OSL_COCYCLE_HPP
#define OSL_COCYCLE_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "osl/grassmann.hpp"
#include "osl/report.hpp"

namespace osl {

/// A point of a torus R^m / Z^m, coordinates in [0, 1).
struct TorusPoint {
  Vector coords;
};

/// A one-sided symbol sequence viewed from `offset`; stepping only moves the
/// cursor, so iterates share the underlying word.
struct SymbolPoint {
  std::shared_ptr<const std::vector<std::uint8_t>> word;
  std::size_t offset = 0;

  std::size_t remaining() const noexcept { return word ? word->size() - offset : 0; }
  std::uint8_t symbol(std::size_t k) const;
};

using Point = std::variant<TorusPoint, SymbolPoint>;

/// A linear cocycle x -> A(x) over a Lipschitz base map, with the regularity
/// data needed by the Hoelder bounds. Immutable once built; every callable
/// must be deterministic and free of side effects.
struct CocycleSystem {
  std::string name;
  std::size_t dim = 0;
  bool invertible = false;
  /// Lipschitz constant of the base step (>= 1).
  double lipschitz_L = 1.0;
  /// sup over the base of |A(x)| and, when invertible, |A(x)^{-1}|.
  double growth_bound = 1.0;
  /// (c0, nu) with |A(x) - A(y)| <= c0 d(x, y)^nu.
  double holder_c0 = 0.0;
  double holder_nu = 1.0;
  /// Flow time per step when the system is a time-tau sampling, else 1.
  double time_step = 1.0;

  std::function<Point(const Point&)> step;
  std::function<Point(const Point&)> inverse_step;
  std::function<double(const Point&, const Point&)> metric;
  std::function<Matrix(const Point&)> generator;
  /// Deterministic base point from a seed.
  std::function<Point(std::uint64_t)> sample;
  /// Deterministic point at base distance close to `radius` from x.
  std::function<Point(const Point&, double, std::uint64_t)> neighbor;

  /// max(lipschitz_L, growth_bound): the L entering the iterate Hoelder constant.
  double iterate_growth_constant() const;
};

/// f^n(x) for n in Z (negative n needs an invertible system).
Point advance(const CocycleSystem& sys, const Point& x, long n);

/// A^n(x) = A(f^{n-1}x) ... A(x) for n > 0, A^0 = Id and
/// A^{-n}(x) = A(f^{-n}x)^{-1} ... A(f^{-1}x)^{-1}.
Matrix iterate(const CocycleSystem& sys, const Point& x, long n);

/// max{e^eps, L^{1+nu}, 1 + c0}
double holder_iterate_constant(double c0, double nu, double lipschitz, double eps);

/// Checks |A^n(x) - A^n(y)| <= c1^n d(x, y)^nu for 1 <= n <= n_max on every
/// pair; the report carries the pair with the largest lhs/rhs ratio.
BoundReport verify_iterate_holder(const CocycleSystem& sys, const std::vector<std::pair<Point, Point>>& pairs,
                                  int n_max, double eps = 0.0);

/// Spot checks of the structural invariants on the given points; returns the
/// largest defect found (metric asymmetry, inverse-step error).
double check_system_invariants(const CocycleSystem& sys, const std::vector<Point>& points);

double operator_norm(const Matrix& m);

}  // namespace osl

#endif  // OSL_COCYCLE_HPP
