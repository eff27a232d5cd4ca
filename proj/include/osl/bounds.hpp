#ifndef OSL_BOUNDS_HPP
#define OSL_BOUNDS_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "osl/grassmann.hpp"
#include "osl/oseledets.hpp"
#include "osl/report.hpp"

namespace osl {

/// Rates of the two-subspace lemma: |A_n u| <= C lambda^n |u| on E,
/// |A_n v| >= C^{-1} mu^n |v| on E', complements bounded by d.
struct PairRates {
  double lambda = 0.0;
  double mu = 0.0;
  double C = 1.0;
  double d = 1.0;
  double a = 0.0;
  double delta = 1.0;

  /// 0 < lambda < mu, C >= 1, d > 0, delta in (0, 1], a > lambda.
  void validate() const;
};

/// Rates of the three-bundle lemma.
struct TripleRates {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double C = 1.0;
  double d = 1.0;
  double a = 0.0;
  double delta = 0.0;

  /// Ordered rates, C >= 1, d > 0, delta in (0, 1] and
  /// a > lambda2 + 1/lambda2 + sigma1.
  void validate() const;
};

/// Rates of the metric-sequence lemma.
struct MetricRates {
  double lambda = 0.0;
  double mu = 0.0;
  double C = 1.0;
  double C2 = 1.0;
  double A = 0.0;
  double delta = 1.0;

  void validate() const;
};

// ---- pair lemma ----

/// log(mu/lambda) / log(a/lambda)
double pair_lemma_exponent(const PairRates& p);
/// (2+d) C^2 (mu/lambda) delta^{log(mu/lambda)/log(a/lambda)}
double pair_lemma_bound(const PairRates& p);

/// Checks the lemma at a single n. Hypotheses (growth on E, E', F, F', the
/// d-bounds, (lambda/a)^{n+1} < delta, |A_n - B_n| <= delta a^n) and the
/// proof's cone inclusions F c Q, E c R are verified before the conclusion;
/// any failure throws HypothesisFailure naming the clause.
BoundReport verify_pair_lemma(const Matrix& A_n, const Matrix& B_n, const Subspace& E, const Subspace& E_prime,
                              const Subspace& F, const Subspace& F_prime, const PairRates& p, long n);

// ---- three-bundle lemma ----

struct TripleExponents {
  double alpha = 0.0;
  double eta = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
};

struct TripleBounds {
  double E = 0.0;
  double F = 0.0;
  double G = 0.0;
  double delta0 = 0.0;
};

TripleExponents triple_lemma_exponents(const TripleRates& p);

/// (2+d) C^2 (mu1/lambda2) delta^{log(mu1/lambda2)/log(a mu1)}: the bound on
/// dist(F+G for A, F+G for B) used inside the proof.
double triple_sum_distance_bound(const TripleRates& p);

/// 1/(1-|L|) + 1/(1-|L|)^2 + delta (1+|L|)/(1-|L|)
double omega_of_L(double norm_L, double delta);

/// d (1+|L|)/(1-|L|)
double tau_of_L(double d, double norm_L);

/// Largest delta at which the graph-transform step is available: the sum
/// bound, converted through |L| <= s / sqrt(1 - s^2), gives |L| < 1/2 and
/// |L| omega(L) < 1. Found by bisection in log delta.
double triple_delta0(const TripleRates& p);

/// The three displayed bounds; DeltaTooLarge when delta >= delta0.
TripleBounds triple_lemma_bounds(const TripleRates& p);

/// A bi-infinite sequence n -> A_n.
using MatrixSequence = std::function<Matrix(long)>;

struct TripleSplitting {
  Subspace E = Subspace::zero(1);
  Subspace F = Subspace::zero(1);
  Subspace G = Subspace::zero(1);
};

struct TripleReports {
  BoundReport E;
  BoundReport F;
  BoundReport G;
};

/// Verifies the three-bundle lemma at a single n. Growth hypotheses are
/// checked for 1 <= m <= n in both time directions (lower bounds read with
/// C^{-1}), together with the d-bounds, the norm and closeness bounds at n,
/// delta < delta0, and the proof's derived conditions for each use of the
/// two-subspace lemma. The F report carries |L|, tau(d, L) and omega(L).
TripleReports verify_triple_lemma(const MatrixSequence& A_seq, const MatrixSequence& B_seq, const TripleSplitting& A_split,
                                  const TripleSplitting& B_split, const TripleRates& p, long n);

// ---- metric lemma ----

/// log max(sup_{|v|_1=1} |v|_2, sup_{|v|_2=1} |v|_1) for positive-definite
/// Gram matrices h1, h2.
double metric_distance(const Matrix& h1, const Matrix& h2);

/// log(mu/lambda) / log A
double metric_lemma_exponent(const MetricRates& p);
/// C^2 (2 + C2 A) delta^{log(mu/lambda)/log A}
double metric_lemma_bound(const MetricRates& p);

/// dist_h(E, F) for the inner product with Gram matrix h.
double metric_subspace_distance(const Matrix& h, const Subspace& E, const Subspace& F);

/// Checks the metric lemma at one n with 1 <= delta A^n < A. hE, hF are the
/// Gram matrices of h_n^E, h_n^F; h0 defines the perpendiculars.
BoundReport verify_metric_lemma(const Matrix& hE, const Matrix& hF, const Matrix& h0, const Subspace& E,
                                const Subspace& F, const MetricRates& p, long n);

// ---- theorem exponents ----

enum class ExponentKind { omega, alpha, beta, gamma };
std::string to_string(ExponentKind kind);

struct TheoremExponent {
  std::size_t i = 0;  ///< 1-based index of the filtration level or splitting piece
  ExponentKind kind = ExponentKind::omega;
  double exponent = 0.0;
  double eta = 0.0;
  /// Constant in front of d(x, y)^{nu exponent} with C = d = ell.
  double constant = 0.0;
};

/// Predicted Hoelder exponents of F^i (non-invertible, i = 1..k-1) or E^i
/// (invertible, i = 1..k). DomainError unless eps < min_gap / 2,
/// log_a > chi_k + eps and every exponent lies in (0, 1).
std::vector<TheoremExponent> theorem_exponents(const Spectrum& spectrum, double eps, double log_a, bool invertible,
                                               double ell = 1.0);

/// The base-distance scale min{|chi_1| / c1, 1} below which the theorem
/// applies.
double theorem_delta(const Spectrum& spectrum, double c1);

// ---- synthetic instances for soundness sweeps ----

struct PairInstance {
  Matrix A_n;
  Matrix B_n;
  Subspace E = Subspace::zero(1);
  Subspace E_prime = Subspace::zero(1);
  Subspace F = Subspace::zero(1);
  Subspace F_prime = Subspace::zero(1);
  PairRates rates;
  long n = 1;
  double theta = 0.0;
};

/// A_n = V Lambda^n V^{-1}, B_n = R A_n R^T with a small rotation R; C and d
/// are measured, delta is the smallest value meeting the closeness bounds.
PairInstance random_pair_instance(std::uint64_t seed);

struct TripleInstance {
  Matrix M;  ///< A_n = M^n
  Matrix R;  ///< B_n = R M^n R^T
  TripleSplitting A_split;
  TripleSplitting B_split;
  TripleRates rates;
  long n = 1;
  double theta = 0.0;

  MatrixSequence A_seq() const;
  MatrixSequence B_seq() const;
};

TripleInstance random_triple_instance(std::uint64_t seed);

struct MetricInstance {
  Matrix hE;
  Matrix hF;
  Matrix h0;
  Subspace E = Subspace::zero(1);
  Subspace F = Subspace::zero(1);
  MetricRates rates;
  long n = 1;
};

MetricInstance random_metric_instance(std::uint64_t seed);

struct SweepSummary {
  std::size_t accepted = 0;
  std::size_t rejected = 0;  ///< HypothesisFailure or DeltaTooLarge
  std::size_t violations = 0;
  double worst_ratio = 0.0;  ///< max measured / bound over accepted instances
  std::vector<BoundReport> failures;
};

/// Draws instances until `target` are accepted (or `max_draws` is reached).
SweepSummary pair_sweep(std::size_t target, std::uint64_t seed, std::size_t max_draws = 100000);
SweepSummary triple_sweep(std::size_t target, std::uint64_t seed, std::size_t max_draws = 100000);
SweepSummary metric_sweep(std::size_t target, std::uint64_t seed, std::size_t max_draws = 100000);

}  // namespace osl

#endif  // OSL_BOUNDS_HPP
