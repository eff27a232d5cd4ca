#include "osl/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "osl/error.hpp"
#include "osl/systems.hpp"

namespace osl {
namespace {

constexpr double kRel = 1e-9;

[[noreturn]] void hypothesis(const std::string& clause, double lhs, double rhs) {
  std::ostringstream os;
  os.precision(6);
  os << clause << " (" << lhs << " vs " << rhs << ")";
  throw Error(ErrorKind::HypothesisFailure, os.str());
}

void require_le(const std::string& clause, double lhs, double rhs) {
  if (!(lhs <= rhs * (1.0 + kRel) + 1e-300)) hypothesis(clause, lhs, rhs);
}

void require_ge(const std::string& clause, double lhs, double rhs) {
  if (!(lhs >= rhs * (1.0 - kRel))) hypothesis(clause, lhs, rhs);
}

void require_lt(const std::string& clause, double lhs, double rhs) {
  if (!(lhs < rhs)) hypothesis(clause, lhs, rhs);
}

double smax(const Matrix& a, const Subspace& s) { return operator_norm(a * s.frame()); }

double smin(const Matrix& a, const Subspace& s) {
  const Vector v = Eigen::JacobiSVD<Matrix>(a * s.frame()).singularValues();
  return v(v.size() - 1);
}

// Largest norm of the two oblique projections inside X + Y (X, Y independent).
double pair_constant(const Subspace& x, const Subspace& y) {
  Matrix joint(static_cast<Eigen::Index>(x.ambient_dim()), static_cast<Eigen::Index>(x.dim() + y.dim()));
  joint << x.frame(), y.frame();
  Eigen::JacobiSVD<Matrix> svd(joint, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = svd.singularValues();
  if (s(s.size() - 1) < kRankThreshold) throw Error(ErrorKind::NotComplementary, "subspaces are not independent");
  const Matrix coords = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  const auto kx = static_cast<Eigen::Index>(x.dim());
  return std::max(operator_norm(coords.topRows(kx)), operator_norm(coords.bottomRows(coords.rows() - kx)));
}

void check_positive(const char* what, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::DomainError, std::string(what) + " must be positive");
}

// Rayleigh-quotient extremes of |v|_num / |v|_den over v in X.
std::pair<double, double> ratio_extremes(const Subspace& x, const Matrix& num, const Matrix& den) {
  const Matrix gn = x.frame().transpose() * num * x.frame();
  const Matrix gd = x.frame().transpose() * den * x.frame();
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(gn, gd, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  return {std::sqrt(std::max(ev.minCoeff(), 0.0)), std::sqrt(ev.maxCoeff())};
}

Matrix cholesky_factor(const Matrix& h) {
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "metric is not positive definite");
  return llt.matrixU();
}

void check_positive_definite(const Matrix& h, const char* name) {
  if (h.rows() != h.cols()) throw Error(ErrorKind::AmbientMismatch, std::string(name) + " is not square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 1e-12)) {
    throw Error(ErrorKind::NotPositiveDefinite, std::string(name) + " has eigenvalue " +
                                                    std::to_string(es.eigenvalues().minCoeff()));
  }
}

// h0-orthogonal complement of S.
Subspace metric_complement(const Matrix& h0, const Subspace& s) { return orthogonal_complement(span(h0 * s.frame())); }

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Cayley transform of a random skew matrix scaled so the rotation angle is ~theta.
Matrix small_rotation(std::mt19937_64& rng, Eigen::Index n, double theta) {
  Matrix g = random_matrix(rng, n, n);
  Matrix s = g - g.transpose();
  s /= operator_norm(s);
  const Matrix id = Matrix::Identity(n, n);
  return (id - 0.5 * theta * s).inverse() * (id + 0.5 * theta * s);
}

Matrix well_conditioned(std::mt19937_64& rng, Eigen::Index n, double spread) {
  for (;;) {
    Matrix v = Matrix::Identity(n, n) + spread * random_matrix(rng, n, n);
    const Vector s = Eigen::JacobiSVD<Matrix>(v).singularValues();
    if (s(n - 1) > 0.2 && s(0) / s(n - 1) < 8.0) return v;
  }
}

Matrix power(const Matrix& m, long n) {
  Matrix out = Matrix::Identity(m.rows(), m.cols());
  const Matrix base = n >= 0 ? m : Matrix(m.inverse());
  for (long i = 0; i < std::abs(n); ++i) out = base * out;
  return out;
}

Subspace columns(const Matrix& v, Eigen::Index from, Eigen::Index count) { return span(v.middleCols(from, count)); }

template <class Draw, class Verify>
SweepSummary run_sweep(std::size_t target, std::uint64_t seed, std::size_t max_draws, Draw draw, Verify verify) {
  SweepSummary out;
  for (std::size_t i = 0; i < max_draws && out.accepted < target; ++i) {
    try {
      const auto instance = draw(mix_seed(seed, i));
      const std::vector<BoundReport> reports = verify(instance);
      ++out.accepted;
      for (const auto& r : reports) {
        if (r.bound_value > 0.0) out.worst_ratio = std::max(out.worst_ratio, r.measured / r.bound_value);
        if (!r.passed) {
          ++out.violations;
          out.failures.push_back(r);
        }
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::HypothesisFailure && e.kind() != ErrorKind::DeltaTooLarge &&
          e.kind() != ErrorKind::NotTransverse) {
        throw;
      }
      ++out.rejected;
    }
  }
  return out;
}

}  // namespace

void PairRates::validate() const {
  check_positive("lambda", lambda);
  if (!(mu > lambda)) throw Error(ErrorKind::DomainError, "pair lemma needs lambda < mu");
  if (!(C >= 1.0)) throw Error(ErrorKind::DomainError, "pair lemma needs C >= 1");
  check_positive("d", d);
  if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorKind::DomainError, "delta must lie in (0, 1]");
  if (!(a > lambda)) throw Error(ErrorKind::DomainError, "pair lemma needs a > lambda");
}

void TripleRates::validate() const {
  check_positive("lambda1", lambda1);
  if (!(lambda1 < lambda2 && lambda2 < mu1 && mu1 < mu2 && mu2 < sigma1 && sigma1 < sigma2)) {
    throw Error(ErrorKind::DomainError, "rates must satisfy lambda1 < lambda2 < mu1 < mu2 < sigma1 < sigma2");
  }
  if (!(C >= 1.0)) throw Error(ErrorKind::DomainError, "three-bundle lemma needs C >= 1");
  check_positive("d", d);
  if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorKind::DomainError, "delta must lie in (0, 1]");
  if (!(a > lambda2 + 1.0 / lambda2 + sigma1)) {
    throw Error(ErrorKind::DomainError, "three-bundle lemma needs a > lambda2 + 1/lambda2 + sigma1");
  }
}

void MetricRates::validate() const {
  check_positive("lambda", lambda);
  if (!(mu > lambda)) throw Error(ErrorKind::DomainError, "metric lemma needs lambda < mu");
  check_positive("C", C);
  check_positive("C2", C2);
  if (!(A > 1.0)) throw Error(ErrorKind::DomainError, "metric lemma needs A > 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorKind::DomainError, "delta must lie in (0, 1]");
}

double pair_lemma_exponent(const PairRates& p) {
  p.validate();
  return std::log(p.mu / p.lambda) / std::log(p.a / p.lambda);
}

double pair_lemma_bound(const PairRates& p) {
  return (2.0 + p.d) * p.C * p.C * (p.mu / p.lambda) * std::pow(p.delta, pair_lemma_exponent(p));
}

BoundReport verify_pair_lemma(const Matrix& A_n, const Matrix& B_n, const Subspace& E, const Subspace& E_prime,
                              const Subspace& F, const Subspace& F_prime, const PairRates& p, long n) {
  p.validate();
  if (n < 1) throw Error(ErrorKind::DomainError, "n must be >= 1");
  const double ln = std::pow(p.lambda, static_cast<double>(n));
  const double mn = std::pow(p.mu, static_cast<double>(n));
  const double an = std::pow(p.a, static_cast<double>(n));

  require_le("growth: |A_n u| <= C lambda^n |u| on E", smax(A_n, E), p.C * ln);
  require_ge("growth: |A_n v| >= C^-1 mu^n |v| on E'", smin(A_n, E_prime), mn / p.C);
  require_le("growth: |B_n u| <= C lambda^n |u| on F", smax(B_n, F), p.C * ln);
  require_ge("growth: |B_n v| >= C^-1 mu^n |v| on F'", smin(B_n, F_prime), mn / p.C);
  const double dE = splitting_constant(E, E_prime);
  const double dF = splitting_constant(F, F_prime);
  require_le("angle: d-bound for (E, E')", dE, p.d);
  require_le("angle: d-bound for (F, F')", dF, p.d);
  require_lt("HipHold: (lambda/a)^{n+1} < delta", std::pow(p.lambda / p.a, static_cast<double>(n + 1)), p.delta);
  const double diff = operator_norm(A_n - B_n);
  require_le("HipHold: |A_n - B_n| <= delta a^n", diff, p.delta * an);
  // The proof's cones Q = {|A_n u| <= 2C lambda^n |u|}, R = {|B_n u| <= 2C lambda^n |u|}.
  const double coneF = smax(A_n, F);
  const double coneE = smax(B_n, E);
  require_le("proof: F inside Q", coneF, 2.0 * p.C * ln);
  require_le("proof: E inside R", coneE, 2.0 * p.C * ln);

  auto report = BoundReport::make("pair_lemma", pair_lemma_bound(p), subspace_distance(E, F));
  report.details["n"] = static_cast<double>(n);
  report.details["exponent"] = pair_lemma_exponent(p);
  report.details["proof_bound"] = (2.0 + p.d) * p.C * p.C * std::pow(p.lambda / p.mu, static_cast<double>(n));
  report.details["cone_F_ratio"] = coneF / (2.0 * p.C * ln);
  report.details["cone_E_ratio"] = coneE / (2.0 * p.C * ln);
  report.details["closeness_ratio"] = diff / (p.delta * an);
  report.details["d_measured"] = std::max(dE, dF);
  report.details["delta_a_n_over_C_lambda_n"] = p.delta * an / (p.C * ln);
  return report;
}

TripleExponents triple_lemma_exponents(const TripleRates& p) {
  p.validate();
  TripleExponents e;
  e.alpha = std::log(p.mu1 / p.lambda2) / std::log(p.a / p.lambda2);
  e.eta = std::log(p.sigma1 / p.mu2) / std::log(p.a / p.mu2);
  e.gamma = std::log(p.sigma1 / p.mu2) / std::log(p.a * p.sigma1);
  e.beta = std::log(p.mu1 / p.lambda2) * std::log(p.sigma1 / p.mu2) / (std::log(p.a * p.mu1) * std::log(p.a / p.mu2));
  for (double x : {e.alpha, e.eta, e.gamma, e.beta}) {
    if (!(x > 0.0 && x < 1.0)) throw Error(ErrorKind::DomainError, "three-bundle exponent outside (0, 1)");
  }
  return e;
}

double triple_sum_distance_bound(const TripleRates& p) {
  p.validate();
  const double omega = std::log(p.mu1 / p.lambda2) / std::log(p.a * p.mu1);
  return (2.0 + p.d) * p.C * p.C * (p.mu1 / p.lambda2) * std::pow(p.delta, omega);
}

double omega_of_L(double norm_L, double delta) {
  if (!(norm_L >= 0.0 && norm_L < 1.0)) throw Error(ErrorKind::DomainError, "omega(L) needs |L| < 1");
  const double q = 1.0 - norm_L;
  return 1.0 / q + 1.0 / (q * q) + delta * (1.0 + norm_L) / q;
}

double tau_of_L(double d, double norm_L) {
  if (!(norm_L >= 0.0 && norm_L < 1.0)) throw Error(ErrorKind::DomainError, "tau(d, L) needs |L| < 1");
  return d * (1.0 + norm_L) / (1.0 - norm_L);
}

double triple_delta0(const TripleRates& p) {
  p.validate();
  const auto ok = [&](double log_delta) {
    TripleRates q = p;
    q.delta = std::exp(log_delta);
    const double s = triple_sum_distance_bound(q);
    if (!(s < 1.0)) return false;
    const double norm_L = s / std::sqrt(1.0 - s * s);
    if (!(norm_L < 0.5)) return false;
    return norm_L * omega_of_L(norm_L, q.delta) < 1.0;
  };
  if (ok(0.0)) return 1.0;
  double lo = -745.0;
  double hi = 0.0;
  if (!ok(lo)) return 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return std::exp(lo);
}

TripleBounds triple_lemma_bounds(const TripleRates& p) {
  const auto e = triple_lemma_exponents(p);
  TripleBounds b;
  b.delta0 = triple_delta0(p);
  if (!(p.delta < b.delta0)) {
    throw Error(ErrorKind::DeltaTooLarge, "delta = " + std::to_string(p.delta) +
                                              " is not below delta0 = " + std::to_string(b.delta0));
  }
  const double c2 = p.C * p.C;
  b.E = (2.0 + p.d) * c2 * (p.mu1 / p.lambda2) * std::pow(p.delta, e.alpha);
  b.F = 4.5 * std::pow(2.0 + 3.0 * p.d, 1.0 + e.eta) * std::pow(p.C, 2.0 * (1.0 + e.eta)) *
        (p.sigma1 * std::pow(p.mu1, e.eta)) / (p.mu2 * std::pow(p.lambda2, e.eta)) * std::pow(p.delta, e.beta);
  b.G = (2.0 + p.d) * c2 * (p.sigma1 / p.mu2) * std::pow(p.delta, e.gamma);
  return b;
}

TripleReports verify_triple_lemma(const MatrixSequence& A_seq, const MatrixSequence& B_seq, const TripleSplitting& A_split,
                                  const TripleSplitting& B_split, const TripleRates& p, long n) {
  p.validate();
  if (n < 1) throw Error(ErrorKind::DomainError, "n must be >= 1");
  const double C = p.C;

  struct Band {
    const char* name;
    double lo;
    double hi;
  };
  const Band bands[3] = {{"E", p.lambda1, p.lambda2}, {"F", p.mu1, p.mu2}, {"G", p.sigma1, p.sigma2}};
  const std::pair<const char*, const MatrixSequence*> seqs[2] = {{"A", &A_seq}, {"B", &B_seq}};
  const TripleSplitting* splits[2] = {&A_split, &B_split};

  for (int s = 0; s < 2; ++s) {
    const TripleSplitting& sp = *splits[s];
    const Subspace* parts[3] = {&sp.E, &sp.F, &sp.G};
    for (long m = 1; m <= n; ++m) {
      const Matrix fwd = (*seqs[s].second)(m);
      const Matrix bwd = (*seqs[s].second)(-m);
      const double dm = static_cast<double>(m);
      for (int b = 0; b < 3; ++b) {
        const std::string tag = std::string("growth: ") + bands[b].name + "^" + seqs[s].first + " at m=" + std::to_string(m);
        require_ge(tag + " forward lower", smin(fwd, *parts[b]), std::pow(bands[b].lo, dm) / C);
        require_le(tag + " forward upper", smax(fwd, *parts[b]), C * std::pow(bands[b].hi, dm));
        require_ge(tag + " backward lower", smin(bwd, *parts[b]), std::pow(bands[b].hi, -dm) / C);
        require_le(tag + " backward upper", smax(bwd, *parts[b]), C * std::pow(bands[b].lo, -dm));
      }
    }
    const std::string who = seqs[s].first;
    require_le("angle: d-bound (E, F+G) for " + who, pair_constant(sp.E, direct_sum({sp.F, sp.G})), p.d);
    require_le("angle: d-bound (F, G) for " + who, pair_constant(sp.F, sp.G), p.d);
    require_le("angle: d-bound (E+F, G) for " + who, pair_constant(direct_sum({sp.E, sp.F}), sp.G), p.d);
    require_le("angle: d-bound (E, F) for " + who, pair_constant(sp.E, sp.F), p.d);
  }

  const double dn = static_cast<double>(n);
  const double an = std::pow(p.a, dn);
  const Matrix An = A_seq(n), Amn = A_seq(-n), Bn = B_seq(n), Bmn = B_seq(-n);
  require_le("boundnorm: |A_n| <= a^n", operator_norm(An), an);
  require_le("boundnorm: |A_-n| <= a^n", operator_norm(Amn), an);
  require_le("boundist: |A_n - B_n| <= delta a^n", operator_norm(An - Bn), p.delta * an);
  require_le("boundist: |A_-n - B_-n| <= delta a^n", operator_norm(Amn - Bmn), p.delta * an);

  TripleBounds bounds;
  try {
    bounds = triple_lemma_bounds(p);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DeltaTooLarge) throw;
    throw Error(ErrorKind::HypothesisFailure, std::string("delta < delta0: ") + e.what());
  }

  // Conditions the proof needs when it applies the two-subspace lemma to
  // (E, F+G) forward, (F+G, E) backward and (G, E+F) backward.
  const Subspace VA = direct_sum({A_split.F, A_split.G});
  const Subspace VB = direct_sum({B_split.F, B_split.G});
  const Subspace UA = direct_sum({A_split.E, A_split.F});
  const Subspace UB = direct_sum({B_split.E, B_split.F});
  require_lt("proof: (lambda2/a)^{n+1} < delta", std::pow(p.lambda2 / p.a, dn + 1.0), p.delta);
  require_lt("proof: (1/(mu1 a))^{n+1} < delta", std::pow(1.0 / (p.mu1 * p.a), dn + 1.0), p.delta);
  require_lt("proof: (1/(sigma1 a))^{n+1} < delta", std::pow(1.0 / (p.sigma1 * p.a), dn + 1.0), p.delta);
  require_ge("proof: |A_n v| >= C^-1 mu1^n |v| on F+G of A", smin(An, VA), std::pow(p.mu1, dn) / C);
  require_ge("proof: |B_n v| >= C^-1 mu1^n |v| on F+G of B", smin(Bn, VB), std::pow(p.mu1, dn) / C);
  require_le("proof: |A_-n v| <= C mu1^-n |v| on F+G of A", smax(Amn, VA), C * std::pow(p.mu1, -dn));
  require_le("proof: |B_-n v| <= C mu1^-n |v| on F+G of B", smax(Bmn, VB), C * std::pow(p.mu1, -dn));
  require_ge("proof: |A_-n u| >= C^-1 mu2^-n |u| on E+F of A", smin(Amn, UA), std::pow(p.mu2, -dn) / C);
  require_ge("proof: |B_-n u| >= C^-1 mu2^-n |u| on E+F of B", smin(Bmn, UB), std::pow(p.mu2, -dn) / C);
  require_le("proof: E^B inside the forward cone of A", smax(An, B_split.E), 2.0 * C * std::pow(p.lambda2, dn));
  require_le("proof: E^A inside the forward cone of B", smax(Bn, A_split.E), 2.0 * C * std::pow(p.lambda2, dn));
  require_le("proof: (F+G)^B inside the backward cone of A", smax(Amn, VB), 2.0 * C * std::pow(p.mu1, -dn));
  require_le("proof: (F+G)^A inside the backward cone of B", smax(Bmn, VA), 2.0 * C * std::pow(p.mu1, -dn));
  require_le("proof: G^B inside the backward cone of A", smax(Amn, B_split.G), 2.0 * C * std::pow(p.sigma1, -dn));
  require_le("proof: G^A inside the backward cone of B", smax(Bmn, A_split.G), 2.0 * C * std::pow(p.sigma1, -dn));

  const auto expo = triple_lemma_exponents(p);
  TripleReports out{BoundReport::make("triple_lemma_E", bounds.E, subspace_distance(A_split.E, B_split.E)),
                    BoundReport::make("triple_lemma_F", bounds.F, subspace_distance(A_split.F, B_split.F)),
                    BoundReport::make("triple_lemma_G", bounds.G, subspace_distance(A_split.G, B_split.G))};
  const GraphMap L = graph_map(VA, VB);
  const double norm_L = L.operator_norm;
  const double dist_V = subspace_distance(VA, VB);
  out.F.details["norm_L"] = norm_L;
  out.F.details["dist_V"] = dist_V;
  out.F.details["dist_V_bound"] = triple_sum_distance_bound(p);
  if (norm_L < 1.0) {
    const double tau = tau_of_L(p.d, norm_L);
    out.F.details["tau"] = tau;
    out.F.details["omega_L"] = omega_of_L(norm_L, p.delta);
    if (norm_L < 0.5) out.F.details["tau_le_3d"] = tau <= 3.0 * p.d * (1.0 + kRel) ? 1.0 : 0.0;
  }
  for (auto* r : {&out.E, &out.F, &out.G}) {
    r->details["n"] = dn;
    r->details["delta"] = p.delta;
    r->details["delta0"] = bounds.delta0;
  }
  out.E.details["alpha"] = expo.alpha;
  out.F.details["beta"] = expo.beta;
  out.F.details["eta"] = expo.eta;
  out.G.details["gamma"] = expo.gamma;
  return out;
}

double metric_distance(const Matrix& h1, const Matrix& h2) {
  check_positive_definite(h1, "h1");
  check_positive_definite(h2, "h2");
  if (h1.rows() != h2.rows()) throw Error(ErrorKind::AmbientMismatch, "metrics act on different dimensions");
  const Matrix s1 = 0.5 * (h1 + h1.transpose());
  const Matrix s2 = 0.5 * (h2 + h2.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(s2, s1, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues();
  // ev are the values of |v|_2^2 / |v|_1^2 at the critical directions.
  const double up = 0.5 * std::log(ev.maxCoeff());
  const double down = -0.5 * std::log(ev.minCoeff());
  return std::max({up, down, 0.0});
}

double metric_lemma_exponent(const MetricRates& p) {
  p.validate();
  return std::log(p.mu / p.lambda) / std::log(p.A);
}

double metric_lemma_bound(const MetricRates& p) {
  return p.C * p.C * (2.0 + p.C2 * p.A) * std::pow(p.delta, metric_lemma_exponent(p));
}

double metric_subspace_distance(const Matrix& h, const Subspace& E, const Subspace& F) {
  const Matrix r = cholesky_factor(0.5 * (h + h.transpose()));
  return subspace_distance(image(r, E), image(r, F));
}

BoundReport verify_metric_lemma(const Matrix& hE, const Matrix& hF, const Matrix& h0, const Subspace& E,
                                const Subspace& F, const MetricRates& p, long n) {
  p.validate();
  if (n < 1) throw Error(ErrorKind::DomainError, "n must be >= 1");
  check_positive_definite(h0, "h0");
  const double dn = static_cast<double>(n);
  const double window = p.delta * std::pow(p.A, dn);
  require_ge("window: delta A^n >= 1", window, 1.0);
  require_lt("window: delta A^n < A", window, p.A);
  const double dist_h = metric_distance(hE, hF);
  require_le("metric: dist(h_n^E, h_n^F) <= log(1 + delta C2 A^n)", dist_h, std::log1p(p.delta * p.C2 * std::pow(p.A, dn)));
  const double ln = std::pow(p.lambda, dn);
  const double mn = std::pow(p.mu, dn);
  const std::pair<const char*, std::pair<const Matrix*, const Subspace*>> sides[2] = {{"E", {&hE, &E}},
                                                                                      {"F", {&hF, &F}}};
  for (const auto& [name, hs] : sides) {
    const auto [lo_in, hi_in] = ratio_extremes(*hs.second, *hs.first, h0);
    (void)lo_in;
    require_le(std::string("growth: upper on ") + name, hi_in, p.C * ln);
    const auto [lo_out, hi_out] = ratio_extremes(metric_complement(h0, *hs.second), *hs.first, h0);
    (void)hi_out;
    require_ge(std::string("growth: lower on the perpendicular of ") + name, lo_out, mn / p.C);
  }
  auto report = BoundReport::make("metric_lemma", metric_lemma_bound(p), metric_subspace_distance(h0, E, F));
  report.details["n"] = dn;
  report.details["delta_A_n"] = window;
  report.details["exponent"] = metric_lemma_exponent(p);
  report.details["metric_distance"] = dist_h;
  return report;
}

std::string to_string(ExponentKind kind) {
  switch (kind) {
    case ExponentKind::omega: return "omega";
    case ExponentKind::alpha: return "alpha";
    case ExponentKind::beta: return "beta";
    case ExponentKind::gamma: return "gamma";
  }
  return "unknown";
}

std::vector<TheoremExponent> theorem_exponents(const Spectrum& spectrum, double eps, double log_a, bool invertible,
                                               double ell) {
  const std::size_t k = spectrum.count();
  if (k == 0) throw Error(ErrorKind::DomainError, "empty spectrum");
  if (!(eps > 0.0)) throw Error(ErrorKind::DomainError, "eps must be positive");
  if (!(ell >= 1.0)) throw Error(ErrorKind::DomainError, "ell must be >= 1");
  const auto& chi = spectrum.exponents;
  if (k > 1 && !(eps < spectrum.min_gap() / 2.0)) {
    throw Error(ErrorKind::DomainError, "eps must be below half the minimum gap");
  }
  if (!(log_a > chi.back() + eps)) throw Error(ErrorKind::DomainError, "log a must exceed chi_k + eps");

  std::vector<TheoremExponent> out;
  const auto push = [&](std::size_t i, ExponentKind kind, double x, double eta, double constant) {
    if (!(x > 0.0 && x < 1.0)) {
      throw Error(ErrorKind::DomainError, "exponent " + to_string(kind) + "_" + std::to_string(i) + " = " +
                                              std::to_string(x) + " is outside (0, 1)");
    }
    out.push_back({i, kind, x, eta, constant});
  };
  const double l2 = ell * ell;
  if (!invertible) {
    for (std::size_t i = 1; i < k; ++i) {
      const double eta = chi[i] - chi[i - 1] - 2.0 * eps;
      push(i, ExponentKind::omega, eta / (log_a - chi[i - 1] - eps), eta, 3.0 * l2 * std::exp(eta));
    }
    return out;
  }
  if (k == 1) return out;
  for (std::size_t i = 1; i <= k; ++i) {
    if (i == 1) {
      const double gap = chi[1] - chi[0] - 2.0 * eps;
      push(i, ExponentKind::alpha, gap / (log_a - chi[0] - eps), 0.0, (2.0 + ell) * l2 * std::exp(gap));
    } else if (i == k) {
      const double gap = chi[k - 1] - chi[k - 2] - 2.0 * eps;
      push(i, ExponentKind::gamma, gap / (log_a + chi[k - 1] - eps), 0.0, (2.0 + ell) * l2 * std::exp(gap));
    } else {
      const double up = chi[i] - chi[i - 1] - 2.0 * eps;
      const double down = chi[i - 1] - chi[i - 2] - 2.0 * eps;
      const double eta = up / (log_a - chi[i - 1] - eps);
      const double beta = eta * down / (chi[i - 1] - eps + log_a);
      const double constant =
          4.5 * std::pow(2.0 + 3.0 * ell, 1.0 + eta) * std::pow(ell, 2.0 * (1.0 + eta)) * std::exp(up + eta * down);
      push(i, ExponentKind::beta, beta, eta, constant);
    }
  }
  return out;
}

double theorem_delta(const Spectrum& spectrum, double c1) {
  if (spectrum.count() == 0) throw Error(ErrorKind::DomainError, "empty spectrum");
  check_positive("c1", c1);
  const double chi1 = std::abs(spectrum.exponents.front());
  return chi1 == 0.0 ? 1.0 : std::min(chi1 / c1, 1.0);
}

PairInstance random_pair_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto N = static_cast<Eigen::Index>(2 + rng() % 3);
  const auto k = static_cast<Eigen::Index>(1 + rng() % static_cast<std::uint64_t>(N - 1));
  PairInstance inst;
  inst.n = 1 + static_cast<long>(rng() % 6);
  const double dn = static_cast<double>(inst.n);
  const double lambda = std::exp(-1.0 + 1.5 * u(rng));
  const double mu = lambda * std::exp(0.3 + 1.2 * u(rng));
  Vector rates(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    rates(i) = i < k ? lambda * std::exp(-0.5 * u(rng)) : mu * std::exp(0.5 * u(rng));
  }
  const Matrix V = well_conditioned(rng, N, 0.3);
  const Matrix M = V * rates.asDiagonal() * V.inverse();
  inst.theta = std::pow(10.0, -6.0 + 5.0 * u(rng)) * std::pow(lambda / mu, dn);
  const Matrix R = small_rotation(rng, N, inst.theta);
  inst.A_n = power(M, inst.n);
  inst.B_n = R * inst.A_n * R.transpose();
  inst.E = columns(V, 0, k);
  inst.E_prime = columns(V, k, N - k);
  inst.F = image(R, inst.E);
  inst.F_prime = image(R, inst.E_prime);

  PairRates& p = inst.rates;
  p.lambda = lambda;
  p.mu = mu;
  const double ln = std::pow(lambda, dn);
  const double mn = std::pow(mu, dn);
  p.C = std::max({1.0, smax(inst.A_n, inst.E) / ln, mn / smin(inst.A_n, inst.E_prime), smax(inst.B_n, inst.F) / ln,
                  mn / smin(inst.B_n, inst.F_prime)}) *
        (1.0 + 1e-6);
  p.d = std::max(splitting_constant(inst.E, inst.E_prime), splitting_constant(inst.F, inst.F_prime)) * (1.0 + 1e-6);
  p.a = lambda * std::exp(0.3 + 2.2 * u(rng));
  const double an = std::pow(p.a, dn);
  p.delta = std::max(operator_norm(inst.A_n - inst.B_n) / an * (1.0 + 1e-6),
                     std::pow(lambda / p.a, dn + 1.0) * (1.0 + 1e-3));
  p.delta = std::min(p.delta, 1.0);
  return inst;
}

MatrixSequence TripleInstance::A_seq() const {
  return [m = M](long n) { return power(m, n); };
}

MatrixSequence TripleInstance::B_seq() const {
  return [m = M, r = R](long n) { return Matrix(r * power(m, n) * r.transpose()); };
}

TripleInstance random_triple_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TripleInstance inst;
  TripleRates& p = inst.rates;
  p.lambda1 = std::exp(-2.0 + u(rng));
  p.lambda2 = p.lambda1 * std::exp(0.2 + 0.6 * u(rng));
  p.mu1 = p.lambda2 * std::exp(0.5 + u(rng));
  p.mu2 = p.mu1 * std::exp(0.2 + 0.6 * u(rng));
  p.sigma1 = p.mu2 * std::exp(0.5 + u(rng));
  p.sigma2 = p.sigma1 * std::exp(0.2 + 0.6 * u(rng));

  const Eigen::Index dims[3] = {static_cast<Eigen::Index>(1 + rng() % 2), static_cast<Eigen::Index>(1 + rng() % 2),
                                static_cast<Eigen::Index>(1 + rng() % 2)};
  const Eigen::Index N = dims[0] + dims[1] + dims[2];
  const std::pair<double, double> bands[3] = {{p.lambda1, p.lambda2}, {p.mu1, p.mu2}, {p.sigma1, p.sigma2}};
  Vector rates(N);
  Eigen::Index c = 0;
  for (int b = 0; b < 3; ++b) {
    for (Eigen::Index j = 0; j < dims[b]; ++j) {
      const double t = 0.2 + 0.6 * u(rng);
      rates(c++) = std::exp(std::log(bands[b].first) * (1.0 - t) + std::log(bands[b].second) * t);
    }
  }
  const Matrix V = well_conditioned(rng, N, 0.15);
  inst.M = V * rates.asDiagonal() * V.inverse();
  inst.A_split = {columns(V, 0, dims[0]), columns(V, dims[0], dims[1]), columns(V, dims[0] + dims[1], dims[2])};

  // Beyond this horizon rounding in the slow directions exceeds ~1e-10.
  const long max_n = std::clamp(static_cast<long>(std::log(1e10) / std::log(p.sigma2 / p.lambda1)), 1L, 60L);
  const auto A_seq = inst.A_seq();
  double C = 1.0;
  const Subspace* parts[3] = {&inst.A_split.E, &inst.A_split.F, &inst.A_split.G};
  const Matrix Minv = inst.M.inverse();
  for (long m = 1; m <= max_n; ++m) {
    const Matrix fwd = A_seq(m);
    const Matrix bwd = A_seq(-m);
    const double dm = static_cast<double>(m);
    for (int b = 0; b < 3; ++b) {
      C = std::max({C, std::pow(bands[b].first, dm) / smin(fwd, *parts[b]),
                    smax(fwd, *parts[b]) / std::pow(bands[b].second, dm),
                    std::pow(bands[b].second, -dm) / smin(bwd, *parts[b]),
                    smax(bwd, *parts[b]) / std::pow(bands[b].first, -dm)});
    }
  }
  p.C = C * (1.0 + 1e-6);
  const auto& sp = inst.A_split;
  p.d = std::max({pair_constant(sp.E, direct_sum({sp.F, sp.G})), pair_constant(sp.F, sp.G),
                  pair_constant(direct_sum({sp.E, sp.F}), sp.G), pair_constant(sp.E, sp.F)}) *
        (1.0 + 1e-6);
  p.a = std::max({p.lambda2 + 1.0 / p.lambda2 + p.sigma1, operator_norm(inst.M), operator_norm(Minv)}) *
        std::exp(0.05 + 0.95 * u(rng));
  p.delta = 0.5;
  const double delta0 = triple_delta0(p);
  p.delta = delta0 * std::pow(10.0, -0.3 - 5.0 * u(rng));

  const double q = std::max({p.lambda2, 1.0 / p.mu1, 1.0 / p.sigma1}) / p.a;
  inst.n = std::clamp(static_cast<long>(std::ceil(std::log(p.delta) / std::log(q))), 1L, max_n);
  const double dn = static_cast<double>(inst.n);
  const double an = std::pow(p.a, dn);

  const Matrix An = power(inst.M, inst.n);
  const Matrix Amn = power(inst.M, -inst.n);
  const auto closeness = [&](const Matrix& R) {
    return std::max(operator_norm(An - R * An * R.transpose()), operator_norm(Amn - R * Amn * R.transpose()));
  };
  const std::uint64_t rot_seed = rng();
  std::mt19937_64 probe_rng(rot_seed);
  const double probe = 1e-6;
  const double gain = closeness(small_rotation(probe_rng, N, probe)) / probe;
  inst.theta = p.delta * an / gain * (0.1 + 0.8 * u(rng));
  for (int attempt = 0; attempt < 60; ++attempt) {
    std::mt19937_64 r(rot_seed);
    inst.R = small_rotation(r, N, inst.theta);
    if (closeness(inst.R) <= p.delta * an) break;
    inst.theta *= 0.5;
  }
  inst.B_split = {image(inst.R, sp.E), image(inst.R, sp.F), image(inst.R, sp.G)};
  return inst;
}

MetricInstance random_metric_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto N = static_cast<Eigen::Index>(2 + rng() % 2);
  const auto k = static_cast<Eigen::Index>(1 + rng() % static_cast<std::uint64_t>(N - 1));
  MetricInstance inst;
  inst.n = 1 + static_cast<long>(rng() % 6);
  const double dn = static_cast<double>(inst.n);
  const double lambda = std::exp(-0.5 + u(rng));
  const double mu = lambda * std::exp(0.3 + 1.2 * u(rng));
  Vector rates(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    rates(i) = i < k ? lambda * std::exp(-0.5 * u(rng)) : mu * std::exp(0.5 * u(rng));
  }
  const Matrix V = well_conditioned(rng, N, 0.3);
  const Matrix An = power(Matrix(V * rates.asDiagonal() * V.inverse()), inst.n);
  const double theta = std::pow(10.0, -7.0 + 5.0 * u(rng)) * std::pow(lambda / mu, dn);
  const Matrix R = small_rotation(rng, N, theta);
  const Matrix Bn = R * An * R.transpose();
  inst.h0 = Matrix::Identity(N, N);
  inst.hE = An.transpose() * An;
  inst.hF = Bn.transpose() * Bn;
  inst.E = columns(V, 0, k);
  inst.F = image(R, inst.E);

  MetricRates& p = inst.rates;
  p.lambda = lambda;
  p.mu = mu;
  const double ln = std::pow(lambda, dn);
  const double mn = std::pow(mu, dn);
  double C = 1.0;
  for (const auto& [h, s] : {std::pair{&inst.hE, &inst.E}, std::pair{&inst.hF, &inst.F}}) {
    C = std::max(C, ratio_extremes(*s, *h, inst.h0).second / ln);
    C = std::max(C, mn / ratio_extremes(metric_complement(inst.h0, *s), *h, inst.h0).first);
  }
  p.C = C * (1.0 + 1e-6);
  p.C2 = 1.0;
  const double t = std::max(1.0, std::expm1(metric_distance(inst.hE, inst.hF))) * (1.0 + 1e-9);
  p.A = std::max(t * 1.01, std::exp(0.5 + 2.5 * u(rng)));
  p.delta = t / std::pow(p.A, dn);
  return inst;
}

SweepSummary pair_sweep(std::size_t target, std::uint64_t seed, std::size_t max_draws) {
  return run_sweep(target, seed, max_draws, random_pair_instance, [](const PairInstance& i) {
    return std::vector<BoundReport>{
        verify_pair_lemma(i.A_n, i.B_n, i.E, i.E_prime, i.F, i.F_prime, i.rates, i.n)};
  });
}

SweepSummary triple_sweep(std::size_t target, std::uint64_t seed, std::size_t max_draws) {
  return run_sweep(target, seed, max_draws, random_triple_instance, [](const TripleInstance& i) {
    const auto r = verify_triple_lemma(i.A_seq(), i.B_seq(), i.A_split, i.B_split, i.rates, i.n);
    return std::vector<BoundReport>{r.E, r.F, r.G};
  });
}

SweepSummary metric_sweep(std::size_t target, std::uint64_t seed, std::size_t max_draws) {
  return run_sweep(target, seed, max_draws, random_metric_instance, [](const MetricInstance& i) {
    return std::vector<BoundReport>{verify_metric_lemma(i.hE, i.hF, i.h0, i.E, i.F, i.rates, i.n)};
  });
}

}  // namespace osl
