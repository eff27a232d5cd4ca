#include "osl/oseledets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "osl/error.hpp"

namespace osl {
namespace {

struct QrStep {
  Matrix q;
  Vector log_diag;
};

QrStep qr_step(const Matrix& z) {
  Eigen::HouseholderQR<Matrix> qr(z);
  const auto d = z.rows();
  QrStep out{qr.householderQ() * Matrix::Identity(d, z.cols()), Vector(z.cols())};
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index i = 0; i < z.cols(); ++i) out.log_diag(i) = std::log(std::abs(r(i, i)));
  return out;
}

// Runs Q <- qr(op * Q) over `ops` and returns the columns reordered so that
// rates ascend.
SingularFrame transposed_cascade(const std::vector<Matrix>& ops, long n) {
  const auto d = ops.front().rows();
  Matrix q = Matrix::Identity(d, d);
  Vector sums = Vector::Zero(d);
  for (const auto& op : ops) {
    auto step = qr_step(op * q);
    q = std::move(step.q);
    sums += step.log_diag;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return sums(a) < sums(b); });
  SingularFrame frame{Matrix(d, d), {}};
  for (Eigen::Index c = 0; c < d; ++c) {
    frame.basis.col(c) = q.col(order[static_cast<std::size_t>(c)]);
    frame.rates.push_back(sums(order[static_cast<std::size_t>(c)]) / static_cast<double>(n));
  }
  return frame;
}

void check_separation(const SingularFrame& frame, const Spectrum& spectrum, long n, const char* which) {
  const double gap = spectrum.min_gap();
  if (static_cast<double>(n) * gap < std::log(1e3)) {
    throw Error(ErrorKind::SeparationFailure, std::string(which) + ": horizon " + std::to_string(n) +
                                                  " too short for the spectral gap " + std::to_string(gap));
  }
  const auto dims = spectrum.flag_dims();
  for (std::size_t i = 1; i + 1 < dims.size(); ++i) {
    const auto b = dims[i];
    const double split = frame.rates[b] - frame.rates[b - 1];
    if (split < spectrum.gap_tol) {
      throw Error(ErrorKind::SeparationFailure, std::string(which) + ": singular log-rates " +
                                                    std::to_string(frame.rates[b - 1]) + " and " +
                                                    std::to_string(frame.rates[b]) + " are not separated");
    }
  }
}

Subspace leading(const Matrix& basis, std::size_t cols) {
  return Subspace(Matrix(basis.leftCols(static_cast<Eigen::Index>(cols))));
}

}  // namespace

std::size_t Spectrum::dim() const noexcept {
  return std::accumulate(multiplicities.begin(), multiplicities.end(), std::size_t{0});
}

double Spectrum::min_gap() const noexcept {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < exponents.size(); ++i) gap = std::min(gap, exponents[i] - exponents[i - 1]);
  return gap;
}

double Spectrum::weighted_sum() const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < exponents.size(); ++i) s += exponents[i] * static_cast<double>(multiplicities[i]);
  return s;
}

std::vector<std::size_t> Spectrum::flag_dims() const {
  std::vector<std::size_t> dims{0};
  for (auto m : multiplicities) dims.push_back(dims.back() + m);
  return dims;
}

OrbitWindow::OrbitWindow(const CocycleSystem& sys, const Point& x, long lo, long hi)
    : lo_(lo), hi_(hi), dim_(sys.dim) {
  if (lo > 0 || hi < 0) throw Error(ErrorKind::DomainError, "orbit window must contain index 0");
  if (lo < 0 && !sys.invertible) {
    throw Error(ErrorKind::NotInvertible, sys.name + ": backward orbit of a non-invertible system");
  }
  const auto size = static_cast<std::size_t>(hi - lo + 1);
  points_.resize(size, x);
  const auto zero = static_cast<std::size_t>(-lo);
  for (std::size_t i = zero + 1; i < size; ++i) points_[i] = sys.step(points_[i - 1]);
  for (std::size_t i = zero; i-- > 0;) points_[i] = sys.inverse_step(points_[i + 1]);
  generators_.reserve(size);
  for (const auto& p : points_) generators_.push_back(sys.generator(p));
  if (sys.invertible) {
    inverses_.reserve(size);
    for (const auto& a : generators_) inverses_.push_back(a.inverse());
  }
}

const Point& OrbitWindow::point(long j) const {
  if (j < lo_ || j > hi_) throw Error(ErrorKind::DomainError, "orbit index outside the window");
  return points_[static_cast<std::size_t>(j - lo_)];
}

const Matrix& OrbitWindow::generator(long j) const {
  if (j < lo_ || j > hi_) throw Error(ErrorKind::DomainError, "orbit index outside the window");
  return generators_[static_cast<std::size_t>(j - lo_)];
}

const Matrix& OrbitWindow::inverse_generator(long j) const {
  if (inverses_.empty()) throw Error(ErrorKind::NotInvertible, "orbit window of a non-invertible system");
  if (j < lo_ || j > hi_) throw Error(ErrorKind::DomainError, "orbit index outside the window");
  return inverses_[static_cast<std::size_t>(j - lo_)];
}

SingularFrame forward_singular_frame(const OrbitWindow& orbit, long j, long n) {
  if (n < 1) throw Error(ErrorKind::DomainError, "filtration horizon must be >= 1");
  std::vector<Matrix> ops;
  ops.reserve(static_cast<std::size_t>(n));
  for (long t = j + n - 1; t >= j; --t) ops.push_back(orbit.generator(t).transpose());
  return transposed_cascade(ops, n);
}

SingularFrame backward_singular_frame(const OrbitWindow& orbit, long j, long n) {
  if (n < 1) throw Error(ErrorKind::DomainError, "filtration horizon must be >= 1");
  std::vector<Matrix> ops;
  ops.reserve(static_cast<std::size_t>(n));
  for (long t = j - n; t <= j - 1; ++t) ops.push_back(orbit.inverse_generator(t).transpose());
  return transposed_cascade(ops, n);
}

Spectrum cluster_rates(std::vector<double> raw_rates, double gap_tol) {
  if (!(gap_tol > 0.0)) throw Error(ErrorKind::DomainError, "gap_tol must be positive");
  std::sort(raw_rates.begin(), raw_rates.end());
  Spectrum s;
  s.gap_tol = gap_tol;
  std::vector<std::vector<double>> groups;
  for (std::size_t i = 0; i < raw_rates.size(); ++i) {
    if (i == 0 || raw_rates[i] - raw_rates[i - 1] >= gap_tol) groups.emplace_back();
    groups.back().push_back(raw_rates[i]);
  }
  for (const auto& g : groups) {
    s.exponents.push_back(std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size()));
    s.multiplicities.push_back(g.size());
  }
  s.raw_rates = std::move(raw_rates);
  s.log_det_rate = std::accumulate(s.raw_rates.begin(), s.raw_rates.end(), 0.0);
  return s;
}

Spectrum lyapunov_spectrum(const CocycleSystem& sys, const Point& x, long n, double gap_tol) {
  if (n < 1) throw Error(ErrorKind::DomainError, "lyapunov_spectrum needs n >= 1");
  if (!(gap_tol > 0.0)) throw Error(ErrorKind::DomainError, "gap_tol must be positive");
  const auto d = static_cast<Eigen::Index>(sys.dim);
  const long transient = n / 4;
  const long tail_start = n - n / 4;

  Matrix q = Matrix::Identity(d, d);
  Vector sums = Vector::Zero(d);
  std::vector<Vector> tail_averages;
  Point p = x;
  for (long t = 0; t < transient + n; ++t) {
    auto step = qr_step(sys.generator(p) * q);
    q = std::move(step.q);
    if (t >= transient) {
      sums += step.log_diag;
      const long done = t - transient + 1;
      if (done >= tail_start) tail_averages.push_back(sums / static_cast<double>(done));
    }
    if (t + 1 < transient + n) p = sys.step(p);
  }
  const Vector final_rates = sums / static_cast<double>(n);

  // Residual tracks each direction's running average, so compare in the
  // per-column order before sorting.
  double residual = 0.0;
  for (const auto& avg : tail_averages) residual = std::max(residual, (avg - final_rates).cwiseAbs().maxCoeff());

  Spectrum s = cluster_rates(std::vector<double>(final_rates.data(), final_rates.data() + d), gap_tol);
  s.horizon = n;
  s.transient = transient;
  s.residual = residual;
  if (residual > gap_tol / 2.0) {
    throw Error(ErrorKind::HorizonTooShort, "exponent drift " + std::to_string(residual) +
                                                " exceeds gap_tol/2; increase the horizon");
  }
  return s;
}

long default_filtration_horizon(const Spectrum& spectrum) {
  const double gap = spectrum.min_gap();
  if (!std::isfinite(gap)) return 2000;
  return std::clamp(static_cast<long>(std::ceil(30.0 / gap)), 10L, 2000L);
}

std::vector<Subspace> forward_filtration_on(const OrbitWindow& orbit, long j, long n, const Spectrum& spectrum) {
  if (spectrum.dim() != orbit.dim()) throw Error(ErrorKind::AmbientMismatch, "spectrum dimension mismatch");
  const auto dims = spectrum.flag_dims();
  if (spectrum.count() == 1) return {Subspace::whole(orbit.dim())};
  const auto frame = forward_singular_frame(orbit, j, n);
  check_separation(frame, spectrum, n, "forward_filtration");
  std::vector<Subspace> flags;
  for (std::size_t i = 1; i < dims.size(); ++i) flags.push_back(leading(frame.basis, dims[i]));
  return flags;
}

std::vector<Subspace> backward_filtration_on(const OrbitWindow& orbit, long j, long n, const Spectrum& spectrum) {
  if (spectrum.dim() != orbit.dim()) throw Error(ErrorKind::AmbientMismatch, "spectrum dimension mismatch");
  if (spectrum.count() == 1) {
    throw Error(ErrorKind::SeparationFailure, "backward_filtration: a single exponent has nothing to separate");
  }
  const auto frame = backward_singular_frame(orbit, j, n);
  // Backward rates ascend as -chi_k, ..., -chi_1, so reverse the multiplicities.
  Spectrum reversed = spectrum;
  std::reverse(reversed.multiplicities.begin(), reversed.multiplicities.end());
  std::reverse(reversed.exponents.begin(), reversed.exponents.end());
  for (auto& e : reversed.exponents) e = -e;
  check_separation(frame, reversed, n, "backward_filtration");
  const auto dims = reversed.flag_dims();
  std::vector<Subspace> flags;
  for (std::size_t i = 1; i < dims.size(); ++i) flags.push_back(leading(frame.basis, dims[i]));
  return flags;
}

std::vector<Subspace> splitting_on(const OrbitWindow& orbit, long j, long n, const Spectrum& spectrum) {
  const auto forward = forward_filtration_on(orbit, j, n, spectrum);
  const auto backward = backward_filtration_on(orbit, j, n, spectrum);
  const std::size_t k = spectrum.count();
  std::vector<Subspace> parts;
  parts.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    // E^i = F^i intersected with G^{k-i+1} (1-based), i.e. backward[k - 1 - i].
    parts.push_back(grassmann_intersect(forward[i], backward[k - 1 - i]));
    if (parts.back().dim() != spectrum.multiplicities[i]) {
      throw Error(ErrorKind::NotGeneralPosition, "splitting piece has the wrong dimension");
    }
  }
  return parts;
}

std::vector<Subspace> forward_filtration(const CocycleSystem& sys, const Point& x, long n, const Spectrum& spectrum) {
  OrbitWindow orbit(sys, x, 0, n);
  return forward_filtration_on(orbit, 0, n, spectrum);
}

std::vector<Subspace> backward_filtration(const CocycleSystem& sys, const Point& x, long n, const Spectrum& spectrum) {
  if (!sys.invertible) throw Error(ErrorKind::NotInvertible, sys.name + ": backward filtration needs an invertible base");
  OrbitWindow orbit(sys, x, -n, 0);
  return backward_filtration_on(orbit, 0, n, spectrum);
}

OseledetsData filtration_data(const CocycleSystem& sys, const Point& x, long n, const Spectrum& spectrum) {
  return OseledetsData{x, spectrum, n, forward_filtration(sys, x, n, spectrum), std::nullopt};
}

OseledetsData splitting(const CocycleSystem& sys, const Point& x, long n, const Spectrum& spectrum) {
  if (!sys.invertible) throw Error(ErrorKind::NotInvertible, sys.name + ": splitting needs an invertible base");
  OrbitWindow orbit(sys, x, -n, n);
  OseledetsData data{x, spectrum, n, forward_filtration_on(orbit, 0, n, spectrum), std::nullopt};
  data.splitting = splitting_on(orbit, 0, n, spectrum);
  return data;
}

double flag_residual(const OseledetsData& data) {
  if (!data.splitting) return 0.0;
  double worst = 0.0;
  for (std::size_t j = 0; j < data.flags.size(); ++j) {
    std::vector<Subspace> parts(data.splitting->begin(), data.splitting->begin() + static_cast<long>(j) + 1);
    worst = std::max(worst, subspace_distance(data.flags[j], direct_sum(parts)));
  }
  return worst;
}

double equivariance_defect(const CocycleSystem& sys, const Point& x, long n, const Spectrum& spectrum) {
  if (!sys.invertible) throw Error(ErrorKind::NotInvertible, sys.name + ": splitting needs an invertible base");
  OrbitWindow orbit(sys, x, -n, n + 1);
  const auto here = splitting_on(orbit, 0, n, spectrum);
  const auto there = splitting_on(orbit, 1, n, spectrum);
  double worst = 0.0;
  for (std::size_t i = 0; i < here.size(); ++i) {
    worst = std::max(worst, subspace_distance(image(orbit.generator(0), here[i]), there[i]));
  }
  return worst;
}

}  // namespace osl
