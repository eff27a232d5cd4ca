#ifndef OSL_REGULAR_BLOCKS_HPP
#define OSL_REGULAR_BLOCKS_HPP

#include <functional>
#include <string_view>
#include <utility>
#include <vector>

#include "osl/cocycle.hpp"
#include "osl/oseledets.hpp"
#include "osl/report.hpp"

namespace osl {

/// Parameters (eps, ell) of a regular block, tested over a finite horizon.
struct RegularBlockParams {
  double eps = 0.1;
  double ell = 1.0;
  /// Largest |m| and |n| tested.
  long horizon = 50;
  Spectrum spectrum;
  /// L in |A^n(x_m)| <= ell L^|n| e^{eps |m|}.
  double L_bound = 1.0;
  /// Horizon of the per-orbit-point filtrations; 0 picks the data's horizon.
  long filtration_horizon = 0;
  /// Angle clauses: enumerate every subset (throws SubsetBlowup for k > 12)
  /// or sample `subset_samples` of them when k > 12.
  bool exhaustive_subsets = false;
  std::size_t subset_samples = 4096;

  /// Throws DomainError unless 0 < eps < min_gap / 10, ell > 0, horizon >= 0.
  void validate() const;
};

/// exp(2 (chi_k - chi_1))
double expansion_constant(const Spectrum& spectrum);

enum class BlockClause {
  none,
  flag_upper,        ///< |A^n(x_m) v| <= ell e^{(chi_i+eps)n+eps m}|v| on A^m F^i
  complement_lower,  ///< lower bound on (A^m F^{i-1})^perp cap A^m F^i
  complement_upper,
  forward_lower,     ///< two-sided bounds on A^m E_i for n >= 0
  forward_upper,
  backward_lower,    ///< the same for n <= 0
  backward_upper,
  angle,             ///< cos angle(sum_I E^i, sum_{not I} E^j) <= 1 - e^{-eps|n|}/ell
  no_data,           ///< filtrations could not be computed along the orbit
};

std::string_view to_string(BlockClause clause);

struct ClauseSite {
  BlockClause clause = BlockClause::none;
  std::size_t i = 0;  ///< 1-based exponent index (0 for angle clauses)
  long m = 0;
  long n = 0;
};

struct BlockMembership {
  Point point;
  bool passed = false;
  /// log(ell) - log(min_ell): the most negative slack over all clauses.
  double worst_violation = 0.0;
  /// Smallest ell for which every tested inequality holds.
  double min_ell = 1.0;
  /// Clause attaining min_ell.
  ClauseSite binding;
  /// `binding` when the test failed, clause none otherwise.
  ClauseSite failing_clause;
};

BlockMembership membership_noninvertible(const CocycleSystem& sys, const Point& x, const OseledetsData& data,
                                         const RegularBlockParams& p);

BlockMembership membership_invertible(const CocycleSystem& sys, const Point& x, const OseledetsData& data,
                                      const RegularBlockParams& p);

/// Dispatches on sys.invertible.
BlockMembership membership(const CocycleSystem& sys, const Point& x, const OseledetsData& data,
                           const RegularBlockParams& p);

/// Re-evaluates a verdict for another ell without recomputing the clauses.
BlockMembership with_ell(BlockMembership m, double ell);

/// |A^n(x_m)| <= ell L^|n| e^{eps|m|} for all tested (m, n); the report
/// carries the worst (m, n).
BoundReport norm_growth_check(const CocycleSystem& sys, const Point& x, const RegularBlockParams& p);

using DataFn = std::function<OseledetsData(const Point&)>;

struct BlockResult {
  std::vector<std::pair<Point, BlockMembership>> members;
  std::size_t passed = 0;
  /// passed / members.size()
  double fraction = 0.0;
};

/// Membership of every sample, evaluated on `threads` workers and returned
/// in input order. Samples whose filtrations fail are recorded as failing
/// with clause no_data.
BlockResult build_block(const CocycleSystem& sys, const std::vector<Point>& samples, const DataFn& data_fn,
                        const RegularBlockParams& p, unsigned threads = 1);

/// Fraction of recorded verdicts that pass at a given ell.
double passing_fraction(const std::vector<BlockMembership>& verdicts, double ell);

}  // namespace osl

#endif  // OSL_REGULAR_BLOCKS_HPP
