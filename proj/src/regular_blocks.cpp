#include "osl/regular_blocks.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include "osl/error.hpp"

namespace osl {
namespace {

constexpr double kSlackTolerance = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Matrix product kept at unit Frobenius norm with the scale in log form.
struct ScaledProduct {
  Matrix p;
  double log_scale = 0.0;

  explicit ScaledProduct(Eigen::Index n) : p(Matrix::Identity(n, n)) {}

  void left_multiply(const Matrix& m) {
    p = m * p;
    const double c = p.norm();
    if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorKind::Overflow, "restricted cocycle product degenerated");
    p /= c;
    log_scale += std::log(c);
  }
};

struct LogExtremes {
  double lo;
  double hi;
};

LogExtremes log_singular_extremes(const Matrix& m, double log_scale) {
  const Vector s = Eigen::JacobiSVD<Matrix>(m).singularValues();
  const double smin = s(s.size() - 1);
  return {smin > 0.0 ? std::log(smin) + log_scale : -kInf, std::log(s(0)) + log_scale};
}

struct Tracker {
  double log_req = -kInf;
  ClauseSite site;

  void update(double lr, ClauseSite s) {
    if (lr > log_req) {
      log_req = lr;
      site = s;
    }
  }
};

BlockMembership finish(const Point& x, const Tracker& t, double ell) {
  BlockMembership m;
  m.point = x;
  m.min_ell = std::exp(t.log_req);
  m.binding = t.site;
  return with_ell(std::move(m), ell);
}

long resolve_filtration_horizon(const RegularBlockParams& p, const OseledetsData& data) {
  if (p.filtration_horizon > 0) return p.filtration_horizon;
  if (data.filtration_horizon > 0) return data.filtration_horizon;
  return default_filtration_horizon(p.spectrum);
}

// Orthonormal frame whose leading dim F^i columns span F^i for every i.
Matrix adapted_frame(const std::vector<Subspace>& flags, std::size_t d) {
  Matrix q(static_cast<Eigen::Index>(d), 0);
  for (const auto& f : flags) {
    const Eigen::Index add = static_cast<Eigen::Index>(f.dim()) - q.cols();
    if (add <= 0) continue;
    const Matrix r = f.frame() - q * (q.transpose() * f.frame());
    Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeThinU);
    Matrix next(q.rows(), q.cols() + add);
    next << q, svd.matrixU().leftCols(add);
    q = std::move(next);
  }
  if (q.cols() != static_cast<Eigen::Index>(d)) {
    throw Error(ErrorKind::RankDeficient, "flag does not end in the whole space");
  }
  return q;
}

std::vector<unsigned long> angle_subsets(std::size_t k, const RegularBlockParams& p, long n) {
  std::vector<unsigned long> masks;
  if (k < 2) return masks;
  // I and its complement give the same angle, so fix index 0 inside I.
  if (k <= 12) {
    const unsigned long full = (1UL << k) - 1;
    for (unsigned long mask = 1; mask < full; mask += 2) masks.push_back(mask);
    return masks;
  }
  if (p.exhaustive_subsets) {
    throw Error(ErrorKind::SubsetBlowup, std::to_string(k) + " exponents: exhaustive angle enumeration refused");
  }
  std::mt19937_64 rng(0x5eed0000ULL + static_cast<unsigned long>(n + (1L << 20)));
  std::bernoulli_distribution coin(0.5);
  for (std::size_t s = 0; s < p.subset_samples; ++s) {
    unsigned long mask = 1;
    bool all = true;
    for (std::size_t b = 1; b < std::min<std::size_t>(k, 64); ++b) {
      if (coin(rng)) mask |= 1UL << b;
      else all = false;
    }
    if (!all) masks.push_back(mask);
  }
  return masks;
}

double subset_cosine(const std::vector<Subspace>& parts, unsigned long mask) {
  std::vector<Subspace> in;
  std::vector<Subspace> out;
  for (std::size_t i = 0; i < parts.size(); ++i) ((mask >> i) & 1UL ? in : out).push_back(parts[i]);
  return max_pair_cosine(direct_sum(in), direct_sum(out));
}

void check_common(const CocycleSystem& sys, const OseledetsData& data, const RegularBlockParams& p) {
  p.validate();
  if (p.spectrum.dim() != sys.dim || data.spectrum.dim() != sys.dim) {
    throw Error(ErrorKind::AmbientMismatch, "spectrum dimension differs from the cocycle dimension");
  }
  if (data.spectrum.count() != p.spectrum.count()) {
    throw Error(ErrorKind::DomainError, "data and block parameters disagree on the number of exponents");
  }
}

}  // namespace

void RegularBlockParams::validate() const {
  if (spectrum.count() == 0) throw Error(ErrorKind::DomainError, "regular block needs a spectrum");
  if (!(eps > 0.0)) throw Error(ErrorKind::DomainError, "eps must be positive");
  const double gap = spectrum.min_gap();
  if (std::isfinite(gap) && !(eps < gap / 10.0)) {
    throw Error(ErrorKind::DomainError, "eps = " + std::to_string(eps) + " is not below min gap / 10 = " +
                                            std::to_string(gap / 10.0));
  }
  if (!(ell > 0.0)) throw Error(ErrorKind::DomainError, "ell must be positive");
  if (horizon < 0) throw Error(ErrorKind::DomainError, "horizon must be >= 0");
}

double expansion_constant(const Spectrum& spectrum) {
  if (spectrum.count() == 0) throw Error(ErrorKind::DomainError, "empty spectrum");
  return std::exp(2.0 * (spectrum.exponents.back() - spectrum.exponents.front()));
}

std::string_view to_string(BlockClause clause) {
  switch (clause) {
    case BlockClause::none: return "none";
    case BlockClause::flag_upper: return "flag_upper";
    case BlockClause::complement_lower: return "complement_lower";
    case BlockClause::complement_upper: return "complement_upper";
    case BlockClause::forward_lower: return "forward_lower";
    case BlockClause::forward_upper: return "forward_upper";
    case BlockClause::backward_lower: return "backward_lower";
    case BlockClause::backward_upper: return "backward_upper";
    case BlockClause::angle: return "angle";
    case BlockClause::no_data: return "no_data";
  }
  return "unknown";
}

BlockMembership with_ell(BlockMembership m, double ell) {
  m.worst_violation = std::log(ell) - std::log(m.min_ell);
  m.passed = m.worst_violation >= -kSlackTolerance;
  m.failing_clause = m.passed ? ClauseSite{} : m.binding;
  return m;
}

BlockMembership membership_noninvertible(const CocycleSystem& sys, const Point& x, const OseledetsData& data,
                                         const RegularBlockParams& p) {
  check_common(sys, data, p);
  if (data.flags.size() != p.spectrum.count()) throw Error(ErrorKind::DomainError, "data carries no forward flag");
  const long h = p.horizon;
  const long nf = resolve_filtration_horizon(p, data);
  const auto d = sys.dim;
  const auto dims = p.spectrum.flag_dims();
  const std::size_t k = p.spectrum.count();

  // Flags along x_0 .. x_{2h}; the restricted cocycle Q_{j+1}^T A(x_j) Q_j
  // is block upper triangular and carries A^n on every F^i exactly.
  OrbitWindow orbit(sys, x, 0, 2 * h + nf);
  std::vector<Matrix> frames;
  frames.reserve(static_cast<std::size_t>(2 * h + 1));
  for (long j = 0; j <= 2 * h; ++j) {
    frames.push_back(adapted_frame(j == 0 ? data.flags : forward_filtration_on(orbit, j, nf, p.spectrum), d));
  }
  std::vector<Matrix> steps;
  for (long j = 0; j < 2 * h; ++j) {
    const auto u = static_cast<std::size_t>(j);
    steps.push_back(frames[u + 1].transpose() * orbit.generator(j) * frames[u]);
  }

  Tracker t;
  for (std::size_t i = 1; i <= k; ++i) {
    const auto s = static_cast<Eigen::Index>(dims[i]);
    const auto s0 = static_cast<Eigen::Index>(dims[i - 1]);
    const double chi = p.spectrum.exponents[i - 1];
    for (long m = 0; m <= h; ++m) {
      ScaledProduct prod(s);
      for (long n = 0; n <= h; ++n) {
        if (n > 0) prod.left_multiply(steps[static_cast<std::size_t>(m + n - 1)].topLeftCorner(s, s));
        const double base_up = (chi + p.eps) * static_cast<double>(n) + p.eps * static_cast<double>(m);
        const double base_lo = (chi - p.eps) * static_cast<double>(n) - p.eps * static_cast<double>(m);
        const auto whole = log_singular_extremes(prod.p, prod.log_scale);
        t.update(whole.hi - base_up, {BlockClause::flag_upper, i, m, n});
        const auto part = log_singular_extremes(prod.p.middleCols(s0, s - s0), prod.log_scale);
        t.update(base_lo - part.lo, {BlockClause::complement_lower, i, m, n});
        t.update(part.hi - base_up, {BlockClause::complement_upper, i, m, n});
      }
    }
  }
  return finish(x, t, p.ell);
}

BlockMembership membership_invertible(const CocycleSystem& sys, const Point& x, const OseledetsData& data,
                                      const RegularBlockParams& p) {
  check_common(sys, data, p);
  if (!sys.invertible) throw Error(ErrorKind::NotInvertible, sys.name + ": invertible block test on a non-invertible system");
  if (!data.splitting) throw Error(ErrorKind::DomainError, "data carries no splitting");
  const long h = p.horizon;
  const long nf = resolve_filtration_horizon(p, data);
  const std::size_t k = p.spectrum.count();
  if (data.splitting->size() != k) throw Error(ErrorKind::DomainError, "splitting size differs from the spectrum");

  OrbitWindow orbit(sys, x, -2 * h - nf, 2 * h + nf);
  // parts[j + 2h] = splitting at x_j
  std::vector<std::vector<Subspace>> parts;
  parts.reserve(static_cast<std::size_t>(4 * h + 1));
  for (long j = -2 * h; j <= 2 * h; ++j) {
    parts.push_back(j == 0 ? *data.splitting : splitting_on(orbit, j, nf, p.spectrum));
  }
  const auto at = [&](long j) -> const std::vector<Subspace>& { return parts[static_cast<std::size_t>(j + 2 * h)]; };

  Tracker t;
  for (std::size_t i = 1; i <= k; ++i) {
    const double chi = p.spectrum.exponents[i - 1];
    // steps[j + 2h] = Q_{j+1}^T A(x_j) Q_j on E_i; exact on the invariant piece.
    std::vector<Matrix> steps;
    std::vector<Matrix> inverse_steps;
    for (long j = -2 * h; j < 2 * h; ++j) {
      const Matrix& q0 = at(j)[i - 1].frame();
      const Matrix& q1 = at(j + 1)[i - 1].frame();
      steps.push_back(q1.transpose() * orbit.generator(j) * q0);
      inverse_steps.push_back(steps.back().inverse());
    }
    const auto step = [&](long j) -> const Matrix& { return steps[static_cast<std::size_t>(j + 2 * h)]; };
    const auto inv = [&](long j) -> const Matrix& { return inverse_steps[static_cast<std::size_t>(j + 2 * h)]; };
    const auto dim = static_cast<Eigen::Index>(p.spectrum.multiplicities[i - 1]);

    for (long m = -h; m <= h; ++m) {
      const double drift = p.eps * static_cast<double>(std::abs(m));
      ScaledProduct fwd(dim);
      for (long n = 0; n <= h; ++n) {
        if (n > 0) fwd.left_multiply(step(m + n - 1));
        const auto e = log_singular_extremes(fwd.p, fwd.log_scale);
        const double dn = static_cast<double>(n);
        t.update((chi - p.eps) * dn - drift - e.lo, {BlockClause::forward_lower, i, m, n});
        t.update(e.hi - (chi + p.eps) * dn - drift, {BlockClause::forward_upper, i, m, n});
      }
      ScaledProduct bwd(dim);
      for (long n = 0; n >= -h; --n) {
        if (n < 0) bwd.left_multiply(inv(m + n));
        const auto e = log_singular_extremes(bwd.p, bwd.log_scale);
        const double dn = static_cast<double>(n);
        t.update((chi + p.eps) * dn - drift - e.lo, {BlockClause::backward_lower, i, m, n});
        t.update(e.hi - (chi - p.eps) * dn - drift, {BlockClause::backward_upper, i, m, n});
      }
    }
  }

  for (long n = -h; n <= h; ++n) {
    for (auto mask : angle_subsets(k, p, n)) {
      const double c = subset_cosine(at(n), mask);
      const double lr = c >= 1.0 ? kInf : -p.eps * static_cast<double>(std::abs(n)) - std::log1p(-c);
      t.update(lr, {BlockClause::angle, 0, 0, n});
    }
  }
  return finish(x, t, p.ell);
}

BlockMembership membership(const CocycleSystem& sys, const Point& x, const OseledetsData& data,
                           const RegularBlockParams& p) {
  return sys.invertible ? membership_invertible(sys, x, data, p) : membership_noninvertible(sys, x, data, p);
}

BoundReport norm_growth_check(const CocycleSystem& sys, const Point& x, const RegularBlockParams& p) {
  if (p.horizon < 0) throw Error(ErrorKind::DomainError, "horizon must be >= 0");
  if (!(p.ell > 0.0) || !(p.L_bound > 0.0)) throw Error(ErrorKind::DomainError, "ell and L must be positive");
  const long h = p.horizon;
  const long lo = sys.invertible ? -h : 0;
  OrbitWindow orbit(sys, x, 2 * lo, 2 * h);
  const auto d = static_cast<Eigen::Index>(sys.dim);

  double worst = -kInf;
  long worst_m = 0;
  long worst_n = 0;
  double worst_log_norm = 0.0;
  double worst_log_bound = 0.0;
  const auto consider = [&](long m, long n, const ScaledProduct& prod) {
    const double log_norm = std::log(operator_norm(prod.p)) + prod.log_scale;
    const double log_bound = std::log(p.ell) + static_cast<double>(std::abs(n)) * std::log(p.L_bound) +
                             p.eps * static_cast<double>(std::abs(m));
    if (log_norm - log_bound > worst) {
      worst = log_norm - log_bound;
      worst_m = m;
      worst_n = n;
      worst_log_norm = log_norm;
      worst_log_bound = log_bound;
    }
  };
  for (long m = lo; m <= h; ++m) {
    ScaledProduct fwd(d);
    for (long n = 0; n <= h; ++n) {
      if (n > 0) fwd.left_multiply(orbit.generator(m + n - 1));
      consider(m, n, fwd);
    }
    if (!sys.invertible) continue;
    ScaledProduct bwd(d);
    for (long n = -1; n >= -h; --n) {
      bwd.left_multiply(orbit.inverse_generator(m + n));
      consider(m, n, bwd);
    }
  }
  auto report = BoundReport::make("norm_growth", std::exp(worst_log_bound), std::exp(worst_log_norm));
  report.details["m"] = static_cast<double>(worst_m);
  report.details["n"] = static_cast<double>(worst_n);
  report.details["log_ratio"] = worst;
  report.details["L"] = p.L_bound;
  report.details["ell"] = p.ell;
  return report;
}

BlockResult build_block(const CocycleSystem& sys, const std::vector<Point>& samples, const DataFn& data_fn,
                        const RegularBlockParams& p, unsigned threads) {
  p.validate();
  BlockResult result;
  std::vector<BlockMembership> verdicts(samples.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t idx = next++; idx < samples.size(); idx = next++) {
      try {
        verdicts[idx] = membership(sys, samples[idx], data_fn(samples[idx]), p);
      } catch (const Error&) {
        BlockMembership failed;
        failed.point = samples[idx];
        failed.min_ell = kInf;
        failed.binding = {BlockClause::no_data, 0, 0, 0};
        verdicts[idx] = with_ell(std::move(failed), p.ell);
      }
    }
  };
  const unsigned n_threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(samples.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  result.members.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (verdicts[i].passed) ++result.passed;
    result.members.emplace_back(samples[i], std::move(verdicts[i]));
  }
  result.fraction = samples.empty() ? 0.0 : static_cast<double>(result.passed) / static_cast<double>(samples.size());
  return result;
}

double passing_fraction(const std::vector<BlockMembership>& verdicts, double ell) {
  if (verdicts.empty()) return 0.0;
  std::size_t count = 0;
  for (const auto& v : verdicts) count += with_ell(v, ell).passed ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(verdicts.size());
}

}  // namespace osl
