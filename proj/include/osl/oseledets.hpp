#ifndef OSL_OSELEDETS_HPP
#define OSL_OSELEDETS_HPP

#include <optional>
#include <vector>

#include "osl/cocycle.hpp"
#include "osl/grassmann.hpp"

namespace osl {

inline constexpr double kDefaultGapTol = 0.05;

/// Distinct Lyapunov exponents with multiplicities.
struct Spectrum {
  std::vector<double> exponents;            ///< strictly increasing
  std::vector<std::size_t> multiplicities;  ///< sum to the dimension
  long horizon = 0;                         ///< averaging window length
  long transient = 0;                       ///< steps discarded before the window
  double residual = 0.0;                    ///< drift of running averages over the last quarter
  double gap_tol = kDefaultGapTol;
  std::vector<double> raw_rates;            ///< per-direction rates, ascending
  /// (1/horizon) log|det A^horizon| over the averaging window.
  double log_det_rate = 0.0;

  std::size_t count() const noexcept { return exponents.size(); }
  std::size_t dim() const noexcept;
  /// Smallest gap between consecutive exponents (+inf when k = 1).
  double min_gap() const noexcept;
  /// sum_i chi_i m_i
  double weighted_sum() const noexcept;
  /// dim F^i for i = 0..k
  std::vector<std::size_t> flag_dims() const;
};

struct OseledetsData {
  Point at;
  Spectrum spectrum;
  long filtration_horizon = 0;
  std::vector<Subspace> flags;                   ///< F^1 c ... c F^k
  std::optional<std::vector<Subspace>> splitting;  ///< E^1, ..., E^k
};

/// Orbit segment x_lo .. x_hi of a base point together with A(x_j).
class OrbitWindow {
 public:
  OrbitWindow(const CocycleSystem& sys, const Point& x, long lo, long hi);

  long lo() const noexcept { return lo_; }
  long hi() const noexcept { return hi_; }
  const Point& point(long j) const;
  const Matrix& generator(long j) const;
  const Matrix& inverse_generator(long j) const;
  std::size_t dim() const noexcept { return dim_; }

 private:
  long lo_;
  long hi_;
  std::size_t dim_;
  std::vector<Point> points_;
  std::vector<Matrix> generators_;
  std::vector<Matrix> inverses_;
};

/// Orthonormal basis ordered by growth: column c has log-rate rates[c],
/// rates ascending.
struct SingularFrame {
  Matrix basis;
  std::vector<double> rates;
};

/// Right singular frame of A^n(x_j), computed through a QR cascade on the
/// transposed factors.
SingularFrame forward_singular_frame(const OrbitWindow& orbit, long j, long n);
/// Right singular frame of A^{-n}(x_j); needs x_{j-n} .. x_{j-1} in the window.
SingularFrame backward_singular_frame(const OrbitWindow& orbit, long j, long n);

/// QR-cascade exponents over an averaging window of n steps, preceded by a
/// transient of n/4 steps.
Spectrum lyapunov_spectrum(const CocycleSystem& sys, const Point& x, long n, double gap_tol = kDefaultGapTol);

/// Groups ascending raw rates into exponents; consecutive rates closer than
/// gap_tol share a cluster.
Spectrum cluster_rates(std::vector<double> raw_rates, double gap_tol);

/// Smallest horizon with n * min_gap >= 30 (clamped to [10, 2000]).
long default_filtration_horizon(const Spectrum& spectrum);

std::vector<Subspace> forward_filtration(const CocycleSystem& sys, const Point& x, long n, const Spectrum& spectrum);
/// G^1 c ... c G^k with G^j the directions whose backward rate is at most
/// -chi_{k-j+1}; E^i = F^i intersected with G^{k-i+1}.
std::vector<Subspace> backward_filtration(const CocycleSystem& sys, const Point& x, long n, const Spectrum& spectrum);
OseledetsData splitting(const CocycleSystem& sys, const Point& x, long n, const Spectrum& spectrum);

std::vector<Subspace> forward_filtration_on(const OrbitWindow& orbit, long j, long n, const Spectrum& spectrum);
std::vector<Subspace> backward_filtration_on(const OrbitWindow& orbit, long j, long n, const Spectrum& spectrum);
std::vector<Subspace> splitting_on(const OrbitWindow& orbit, long j, long n, const Spectrum& spectrum);

/// Forward flag data only (no splitting); works for non-invertible systems.
OseledetsData filtration_data(const CocycleSystem& sys, const Point& x, long n, const Spectrum& spectrum);

/// max_j dist(F^j, E^1 + ... + E^j)
double flag_residual(const OseledetsData& data);
/// max_i dist(A(x) E^i_x, E^i_{f(x)}), recomputing the splitting at f(x).
double equivariance_defect(const CocycleSystem& sys, const Point& x, long n, const Spectrum& spectrum);

}  // namespace osl

#endif  // OSL_OSELEDETS_HPP
