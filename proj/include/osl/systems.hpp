#ifndef OSL_SYSTEMS_HPP
#define OSL_SYSTEMS_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "osl/cocycle.hpp"

namespace osl {

enum class SystemKind { constant, cat_map, doubling, shift_iid, shift_holder, perturbed_diagonal, linear_flow };

/// Base dynamics for the `constant` kind.
enum class BaseKind { cat_map, doubling, translation };

std::string_view to_string(SystemKind kind);
SystemKind parse_system_kind(std::string_view name);
std::string_view to_string(BaseKind kind);
BaseKind parse_base_kind(std::string_view name);

struct SystemSpec {
  SystemKind kind = SystemKind::constant;
  BaseKind base = BaseKind::cat_map;
  /// Constant generator (constant, doubling).
  Matrix matrix;
  /// Symbol matrices (shift_iid).
  std::vector<Matrix> matrices;
  /// Diagonal part D of A(x) = D R(rho theta(x)) (shift_holder, perturbed_diagonal).
  Vector diag;
  /// Integer matrix of the toral automorphism.
  Matrix cat_matrix;
  double rho = 0.0;
  double nu = 1.0;
  std::uint64_t seed = 1;
  /// linear_flow: exponential rates and sampling time.
  Vector rates;
  double tau = 1.0;
  /// Stored symbols per shift point.
  std::size_t shift_window = 4096;
  /// Dyadic terms of the Hoelder field on the torus.
  int fourier_terms = 20;

  SystemSpec();
};

CocycleSystem make_system(const SystemSpec& spec);

/// Time-tau sampling of the bundled linear flow: translation flow on T^2 with
/// A(x, t) = diag(exp(t r_1), ..., exp(t r_d)). Exponents are tau * rates.
CocycleSystem flow_time_map(const SystemSpec& flow_spec, double tau);

/// Hoelder constant of the dyadic cosine field used by perturbed_diagonal,
/// per unit of |x - y|^nu in the torus metric.
double torus_field_holder_constant(double nu, int terms, int coords);
/// Same for the symbolic field sum_k s_k 2^{-nu k}, s_k = +-1.
double shift_field_holder_constant(double nu);

Matrix rotation(double angle);
/// Splitmix-style seed derivation; keeps per-index randomness independent of
/// evaluation order.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace osl

#endif  // OSL_SYSTEMS_HPP
