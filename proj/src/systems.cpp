#include "osl/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "osl/error.hpp"

namespace osl {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::InvalidSpec, what); }

double wrap(double v) {
  double w = v - std::floor(v);
  return w >= 1.0 ? 0.0 : w;
}

double circle_gap(double a, double b) {
  const double g = std::abs(wrap(a) - wrap(b));
  return std::min(g, 1.0 - g);
}

const TorusPoint& torus(const Point& p) {
  const auto* t = std::get_if<TorusPoint>(&p);
  if (!t) throw Error(ErrorKind::DomainError, "expected a torus point");
  return *t;
}

const SymbolPoint& symbols(const Point& p) {
  const auto* s = std::get_if<SymbolPoint>(&p);
  if (!s) throw Error(ErrorKind::DomainError, "expected a symbol-sequence point");
  return *s;
}

double torus_metric(const Point& a, const Point& b) {
  const auto& x = torus(a).coords;
  const auto& y = torus(b).coords;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double g = circle_gap(x(i), y(i));
    s += g * g;
  }
  return std::sqrt(s);
}

double shift_metric(const Point& a, const Point& b) {
  const auto& x = symbols(a);
  const auto& y = symbols(b);
  if (x.word == y.word && x.offset == y.offset) return 0.0;
  const std::size_t n = std::min(x.remaining(), y.remaining());
  for (std::size_t k = 0; k < n; ++k) {
    if ((*x.word)[x.offset + k] != (*y.word)[y.offset + k]) return std::ldexp(1.0, -static_cast<int>(k));
  }
  return 0.0;
}

Point random_torus_point(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector c(static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = u(rng);
  return TorusPoint{c};
}

Point torus_neighbor(const Point& p, double radius, std::uint64_t seed) {
  const auto& x = torus(p).coords;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector dir(x.size());
  do {
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir(i) = g(rng);
  } while (dir.norm() < 1e-12);
  dir /= dir.norm();
  Vector y = x + radius * dir;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = wrap(y(i));
  return TorusPoint{y};
}

Point random_word(std::size_t length, std::size_t alphabet, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, static_cast<int>(alphabet) - 1);
  auto word = std::make_shared<std::vector<std::uint8_t>>(length);
  for (auto& s : *word) s = static_cast<std::uint8_t>(u(rng));
  return SymbolPoint{std::move(word), 0};
}

Point shift_neighbor(const Point& p, double radius, std::uint64_t seed, std::size_t alphabet) {
  const auto& x = symbols(p);
  const std::size_t n = x.remaining();
  const auto k = static_cast<std::size_t>(std::max(0.0, std::round(-std::log2(radius))));
  if (k >= n) throw Error(ErrorKind::DomainError, "neighbor radius finer than the stored window");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, static_cast<int>(alphabet) - 1);
  std::uniform_int_distribution<int> other(1, static_cast<int>(alphabet) - 1);
  auto word = std::make_shared<std::vector<std::uint8_t>>(x.word->begin() + static_cast<long>(x.offset), x.word->end());
  (*word)[k] = static_cast<std::uint8_t>(((*word)[k] + other(rng)) % alphabet);
  for (std::size_t i = k + 1; i < n; ++i) (*word)[i] = static_cast<std::uint8_t>(u(rng));
  return SymbolPoint{std::move(word), 0};
}

void require_invertible(const Matrix& m, const std::string& what) {
  if (m.rows() != m.cols() || m.rows() == 0) invalid(what + " must be a nonempty square matrix");
  if (!(std::abs(m.determinant()) > 1e-14)) invalid(what + " is singular");
}

double spectral_norm(const Matrix& m) { return Eigen::JacobiSVD<Matrix>(m).singularValues()(0); }

// Installs the toral automorphism x -> M x mod 1 as the base of `sys`.
void install_cat_base(CocycleSystem& sys, const Matrix& cat, std::uint64_t seed) {
  if (cat.rows() != cat.cols() || cat.rows() < 1) invalid("cat_matrix must be square");
  for (Eigen::Index i = 0; i < cat.size(); ++i) {
    if (cat.data()[i] != std::round(cat.data()[i])) invalid("cat_matrix must have integer entries");
  }
  const double det = cat.determinant();
  if (std::abs(std::abs(det) - 1.0) > 1e-12) invalid("cat_matrix must have determinant +-1");
  const Matrix inv = cat.inverse().array().round().matrix();
  const auto m = static_cast<std::size_t>(cat.rows());
  sys.invertible = true;
  sys.lipschitz_L = std::max(1.0, spectral_norm(cat));
  sys.step = [cat](const Point& p) {
    Vector y = cat * torus(p).coords;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = wrap(y(i));
    return Point{TorusPoint{y}};
  };
  sys.inverse_step = [inv](const Point& p) {
    Vector y = inv * torus(p).coords;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = wrap(y(i));
    return Point{TorusPoint{y}};
  };
  sys.metric = torus_metric;
  sys.sample = [m, seed](std::uint64_t s) { return random_torus_point(m, mix_seed(seed, s)); };
  sys.neighbor = torus_neighbor;
}

void install_doubling_base(CocycleSystem& sys, std::uint64_t seed) {
  sys.invertible = false;
  sys.lipschitz_L = 2.0;
  sys.step = [](const Point& p) {
    Vector y = torus(p).coords;
    y(0) = wrap(2.0 * y(0));
    return Point{TorusPoint{y}};
  };
  sys.inverse_step = nullptr;
  sys.metric = torus_metric;
  sys.sample = [seed](std::uint64_t s) { return random_torus_point(1, mix_seed(seed, s)); };
  sys.neighbor = torus_neighbor;
}

Vector translation_vector() { return Vector{{std::numbers::sqrt2 - 1.0, std::numbers::sqrt3 - 1.0}}; }

void install_translation_base(CocycleSystem& sys, double time, std::uint64_t seed) {
  const Vector shift = time * translation_vector();
  sys.invertible = true;
  sys.lipschitz_L = 1.0;
  sys.step = [shift](const Point& p) {
    Vector y = torus(p).coords + shift;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = wrap(y(i));
    return Point{TorusPoint{y}};
  };
  sys.inverse_step = [shift](const Point& p) {
    Vector y = torus(p).coords - shift;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = wrap(y(i));
    return Point{TorusPoint{y}};
  };
  sys.metric = torus_metric;
  sys.sample = [seed](std::uint64_t s) { return random_torus_point(2, mix_seed(seed, s)); };
  sys.neighbor = torus_neighbor;
}

void install_shift_base(CocycleSystem& sys, std::size_t alphabet, std::size_t window, std::uint64_t seed) {
  if (alphabet < 2) invalid("shift systems need at least two symbols");
  if (window < 16) invalid("shift_window must be at least 16");
  sys.invertible = false;
  sys.lipschitz_L = 2.0;
  sys.step = [](const Point& p) {
    SymbolPoint s = symbols(p);
    if (s.remaining() <= 1) throw Error(ErrorKind::DomainError, "shift orbit ran past the stored window");
    ++s.offset;
    return Point{std::move(s)};
  };
  sys.inverse_step = nullptr;
  sys.metric = shift_metric;
  sys.sample = [alphabet, window, seed](std::uint64_t s) { return random_word(window, alphabet, mix_seed(seed, s)); };
  sys.neighbor = [alphabet](const Point& p, double r, std::uint64_t s) { return shift_neighbor(p, r, s, alphabet); };
}

void set_constant_generator(CocycleSystem& sys, const Matrix& a) {
  sys.dim = static_cast<std::size_t>(a.rows());
  sys.generator = [a](const Point&) { return a; };
  sys.growth_bound = std::max({1.0, spectral_norm(a), spectral_norm(a.inverse())});
  sys.holder_c0 = 1e-12;  // locally constant: any c0 > 0 works
  sys.holder_nu = 1.0;
}

Matrix embedded_rotation(std::size_t d, double angle) {
  const auto n = static_cast<Eigen::Index>(d);
  Matrix r = Matrix::Identity(n, n);
  r.topLeftCorner(2, 2) = rotation(angle);
  return r;
}

void check_diag(const Vector& diag) {
  if (diag.size() < 2) invalid("diag must have at least two entries");
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(std::abs(diag(i)) > 1e-14)) invalid("diag entries must be nonzero");
  }
}

void check_nu(double nu) {
  if (!(nu > 0.0 && nu <= 1.0)) invalid("nu must lie in (0, 1]");
}

}  // namespace

std::string_view to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::constant: return "constant";
    case SystemKind::cat_map: return "cat_map";
    case SystemKind::doubling: return "doubling";
    case SystemKind::shift_iid: return "shift_iid";
    case SystemKind::shift_holder: return "shift_holder";
    case SystemKind::perturbed_diagonal: return "perturbed_diagonal";
    case SystemKind::linear_flow: return "linear_flow";
  }
  return "unknown";
}

SystemKind parse_system_kind(std::string_view name) {
  for (auto k : {SystemKind::constant, SystemKind::cat_map, SystemKind::doubling, SystemKind::shift_iid,
                 SystemKind::shift_holder, SystemKind::perturbed_diagonal, SystemKind::linear_flow}) {
    if (to_string(k) == name) return k;
  }
  invalid("unknown system kind '" + std::string(name) + "'");
}

std::string_view to_string(BaseKind kind) {
  switch (kind) {
    case BaseKind::cat_map: return "cat_map";
    case BaseKind::doubling: return "doubling";
    case BaseKind::translation: return "translation";
  }
  return "unknown";
}

BaseKind parse_base_kind(std::string_view name) {
  for (auto k : {BaseKind::cat_map, BaseKind::doubling, BaseKind::translation}) {
    if (to_string(k) == name) return k;
  }
  invalid("unknown base kind '" + std::string(name) + "'");
}

SystemSpec::SystemSpec() : cat_matrix{{2.0, 1.0}, {1.0, 1.0}} {}

Matrix rotation(double angle) {
  return Matrix{{std::cos(angle), -std::sin(angle)}, {std::sin(angle), std::cos(angle)}};
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double torus_field_holder_constant(double nu, int terms, int coords) {
  check_nu(nu);
  double per_coord = 0.0;
  if (nu < 1.0) {
    const double q = std::pow(2.0, 1.0 - nu);
    per_coord = kTwoPi * q / (q - 1.0) + 2.0 / (1.0 - std::pow(2.0, -nu));
  } else {
    per_coord = kTwoPi * terms + 4.0;
  }
  return coords * per_coord;
}

double shift_field_holder_constant(double nu) {
  check_nu(nu);
  return 2.0 / (1.0 - std::pow(2.0, -nu));
}

CocycleSystem make_system(const SystemSpec& spec) {
  CocycleSystem sys;
  sys.name = std::string(to_string(spec.kind));
  switch (spec.kind) {
    case SystemKind::constant: {
      require_invertible(spec.matrix, "matrix");
      switch (spec.base) {
        case BaseKind::cat_map: install_cat_base(sys, spec.cat_matrix, spec.seed); break;
        case BaseKind::doubling: install_doubling_base(sys, spec.seed); break;
        case BaseKind::translation: install_translation_base(sys, 1.0, spec.seed); break;
      }
      set_constant_generator(sys, spec.matrix);
      break;
    }
    case SystemKind::cat_map: {
      install_cat_base(sys, spec.cat_matrix, spec.seed);
      set_constant_generator(sys, spec.cat_matrix);
      break;
    }
    case SystemKind::doubling: {
      require_invertible(spec.matrix, "matrix");
      install_doubling_base(sys, spec.seed);
      set_constant_generator(sys, spec.matrix);
      break;
    }
    case SystemKind::shift_iid: {
      if (spec.matrices.size() < 2) invalid("shift_iid needs at least two matrices");
      const auto d = spec.matrices.front().rows();
      double c0 = 0.0;
      double growth = 1.0;
      for (std::size_t i = 0; i < spec.matrices.size(); ++i) {
        require_invertible(spec.matrices[i], "matrices[" + std::to_string(i) + "]");
        if (spec.matrices[i].rows() != d) invalid("shift_iid matrices differ in size");
        growth = std::max({growth, spectral_norm(spec.matrices[i]), spectral_norm(spec.matrices[i].inverse())});
        for (std::size_t j = 0; j < i; ++j) c0 = std::max(c0, spectral_norm(spec.matrices[i] - spec.matrices[j]));
      }
      install_shift_base(sys, spec.matrices.size(), spec.shift_window, spec.seed);
      sys.dim = static_cast<std::size_t>(d);
      sys.generator = [mats = spec.matrices](const Point& p) { return mats[symbols(p).symbol(0)]; };
      sys.growth_bound = growth;
      // Different first symbols means distance 1; equal first symbols give equal matrices.
      sys.holder_c0 = std::max(c0, 1e-12);
      sys.holder_nu = 1.0;
      break;
    }
    case SystemKind::shift_holder: {
      check_diag(spec.diag);
      check_nu(spec.nu);
      if (!(spec.rho >= 0.0)) invalid("rho must be >= 0");
      install_shift_base(sys, 2, spec.shift_window, spec.seed);
      const auto d = static_cast<std::size_t>(spec.diag.size());
      const Matrix diag = spec.diag.asDiagonal();
      const double nu = spec.nu;
      const double rho = spec.rho;
      sys.dim = d;
      sys.generator = [diag, nu, rho, d](const Point& p) {
        const auto& s = symbols(p);
        const std::size_t terms = std::min<std::size_t>(s.remaining(), 64);
        double theta = 0.0;
        for (std::size_t k = 0; k < terms; ++k) {
          theta += ((*s.word)[s.offset + k] ? 1.0 : -1.0) * std::pow(2.0, -nu * static_cast<double>(k));
        }
        return Matrix(diag * embedded_rotation(d, rho * theta));
      };
      const double dmax = spec.diag.cwiseAbs().maxCoeff();
      const double dmin = spec.diag.cwiseAbs().minCoeff();
      sys.growth_bound = std::max({1.0, dmax, 1.0 / dmin});
      sys.holder_c0 = std::max(dmax * rho * shift_field_holder_constant(nu), 1e-12);
      sys.holder_nu = nu;
      break;
    }
    case SystemKind::perturbed_diagonal: {
      check_diag(spec.diag);
      check_nu(spec.nu);
      if (!(spec.rho >= 0.0)) invalid("rho must be >= 0");
      if (spec.fourier_terms < 1) invalid("fourier_terms must be positive");
      install_cat_base(sys, spec.cat_matrix, spec.seed);
      const auto d = static_cast<std::size_t>(spec.diag.size());
      const auto m = spec.cat_matrix.rows();
      const int terms = spec.fourier_terms;
      Matrix phases(m, terms);
      {
        std::mt19937_64 rng(mix_seed(spec.seed, 0xf1e1d));
        std::uniform_real_distribution<double> u(0.0, kTwoPi);
        for (Eigen::Index i = 0; i < phases.size(); ++i) phases.data()[i] = u(rng);
      }
      const Matrix diag = spec.diag.asDiagonal();
      const double nu = spec.nu;
      const double rho = spec.rho;
      sys.dim = d;
      sys.generator = [diag, nu, rho, d, phases, terms](const Point& p) {
        const auto& x = torus(p).coords;
        double theta = 0.0;
        for (Eigen::Index c = 0; c < x.size(); ++c) {
          double scale = 1.0;
          double weight = 1.0;
          for (int j = 0; j < terms; ++j) {
            theta += weight * std::cos(kTwoPi * scale * x(c) + phases(c, j));
            scale *= 2.0;
            weight *= std::pow(2.0, -nu);
          }
        }
        return Matrix(diag * embedded_rotation(d, rho * theta));
      };
      const double dmax = spec.diag.cwiseAbs().maxCoeff();
      const double dmin = spec.diag.cwiseAbs().minCoeff();
      sys.growth_bound = std::max({1.0, dmax, 1.0 / dmin});
      sys.holder_c0 = std::max(dmax * rho * torus_field_holder_constant(nu, terms, static_cast<int>(m)), 1e-12);
      sys.holder_nu = nu;
      break;
    }
    case SystemKind::linear_flow:
      return flow_time_map(spec, spec.tau);
  }
  return sys;
}

CocycleSystem flow_time_map(const SystemSpec& flow_spec, double tau) {
  if (!(tau > 0.0)) invalid("flow time step tau must be positive");
  if (flow_spec.rates.size() < 1) invalid("linear_flow needs at least one rate");
  CocycleSystem sys;
  sys.name = "linear_flow";
  install_translation_base(sys, tau, flow_spec.seed);
  const Vector scaled = (tau * flow_spec.rates).array().exp();
  set_constant_generator(sys, Matrix(scaled.asDiagonal()));
  sys.time_step = tau;
  return sys;
}

}  // namespace osl
