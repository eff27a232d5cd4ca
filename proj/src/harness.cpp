#include "osl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "osl/error.hpp"

namespace osl {
namespace {

using json = nlohmann::json;

constexpr std::uint64_t kPartnerStream = 0x9a17e5ULL;
constexpr std::uint64_t kReferencePoint = 0xfeedULL;

// ---- config parsing ----

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct FieldError {
  std::string message;
};

double parse_number(std::string_view tok) {
  tok = trim(tok);
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end || tok.empty()) throw FieldError{"'" + std::string(tok) + "' is not a number"};
  if (!std::isfinite(v)) throw FieldError{"'" + std::string(tok) + "' is not finite"};
  return v;
}

std::vector<double> parse_numbers(std::string_view s) {
  std::vector<double> out;
  std::string buf(s);
  std::replace(buf.begin(), buf.end(), ',', ' ');
  std::istringstream in(buf);
  std::string tok;
  while (in >> tok) out.push_back(parse_number(tok));
  return out;
}

long parse_integer(std::string_view tok) {
  tok = trim(tok);
  long v = 0;
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end || tok.empty()) throw FieldError{"'" + std::string(tok) + "' is not an integer"};
  return v;
}

std::uint64_t parse_unsigned(std::string_view tok) {
  tok = trim(tok);
  std::uint64_t v = 0;
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end || tok.empty()) {
    throw FieldError{"'" + std::string(tok) + "' is not an unsigned integer"};
  }
  return v;
}

std::size_t parse_count(std::string_view tok) {
  const long v = parse_integer(tok);
  if (v < 0) throw FieldError{"must be >= 0"};
  return static_cast<std::size_t>(v);
}

Matrix parse_matrix(std::string_view s) {
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(';', start);
    const auto row = trim(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (!row.empty()) rows.push_back(parse_numbers(row));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (rows.empty()) throw FieldError{"empty matrix"};
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw FieldError{"matrix rows differ in length"};
  }
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

std::vector<Matrix> parse_matrices(std::string_view s) {
  std::vector<Matrix> out;
  std::size_t start = 0;
  for (;;) {
    const auto end = s.find('|', start);
    out.push_back(parse_matrix(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"name", [](auto& c, auto v) { c.name = std::string(v); }},
      {"experiment",
       [](auto& c, auto v) {
         if (v == "holder") c.experiment = ExperimentKind::holder;
         else if (v == "lemma_sweep") c.experiment = ExperimentKind::lemma_sweep;
         else throw FieldError{"expected holder or lemma_sweep"};
       }},
      {"system", [](auto& c, auto v) { c.system.kind = parse_system_kind(v); }},
      {"base", [](auto& c, auto v) { c.system.base = parse_base_kind(v); }},
      {"matrix", [](auto& c, auto v) { c.system.matrix = parse_matrix(v); }},
      {"matrices", [](auto& c, auto v) { c.system.matrices = parse_matrices(v); }},
      {"diag", [](auto& c, auto v) { c.system.diag = to_vector(parse_numbers(v)); }},
      {"cat_matrix", [](auto& c, auto v) { c.system.cat_matrix = parse_matrix(v); }},
      {"rho", [](auto& c, auto v) { c.system.rho = parse_number(v); }},
      {"nu", [](auto& c, auto v) { c.system.nu = parse_number(v); }},
      {"seed", [](auto& c, auto v) { c.system.seed = parse_unsigned(v); }},
      {"rates", [](auto& c, auto v) { c.system.rates = to_vector(parse_numbers(v)); }},
      {"tau", [](auto& c, auto v) { c.system.tau = parse_number(v); }},
      {"shift_window", [](auto& c, auto v) { c.system.shift_window = parse_count(v); }},
      {"fourier_terms", [](auto& c, auto v) { c.system.fourier_terms = static_cast<int>(parse_integer(v)); }},
      {"eps", [](auto& c, auto v) { c.eps = parse_number(v); }},
      {"ell", [](auto& c, auto v) { c.ell = parse_number(v); }},
      {"ell_sweep", [](auto& c, auto v) { c.ell_sweep = parse_numbers(v); }},
      {"horizon", [](auto& c, auto v) { c.horizon = parse_integer(v); }},
      {"horizon_sweep",
       [](auto& c, auto v) {
         c.horizon_sweep.clear();
         for (double h : parse_numbers(v)) {
           if (h != std::floor(h)) throw FieldError{"horizons must be integers"};
           c.horizon_sweep.push_back(static_cast<long>(h));
         }
       }},
      {"samples", [](auto& c, auto v) { c.sample_count = parse_count(v); }},
      {"delta_min", [](auto& c, auto v) { c.delta_min = parse_number(v); }},
      {"delta_max", [](auto& c, auto v) { c.delta_max = parse_number(v); }},
      {"i_index", [](auto& c, auto v) { c.i_index = parse_count(v); }},
      {"spectrum_horizon", [](auto& c, auto v) { c.spectrum_horizon = parse_integer(v); }},
      {"filtration_horizon", [](auto& c, auto v) { c.filtration_horizon = parse_integer(v); }},
      {"gap_tol", [](auto& c, auto v) { c.gap_tol = parse_number(v); }},
      {"slack", [](auto& c, auto v) { c.slack = parse_number(v); }},
      {"lemma", [](auto& c, auto v) { c.lemma = parse_lemma_kind(v); }},
      {"lemma_instances", [](auto& c, auto v) { c.lemma_instances = parse_count(v); }},
      {"iterate_n_max", [](auto& c, auto v) { c.iterate_n_max = static_cast<int>(parse_integer(v)); }},
      {"csv", [](auto& c, auto v) { c.csv_name = std::string(v); }},
      {"report", [](auto& c, auto v) { c.report_name = std::string(v); }},
  };
  return table;
}

// ---- parallel evaluation ----

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  const unsigned n = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json spectrum_json(const Spectrum& s) {
  return {{"exponents", s.exponents},   {"multiplicities", s.multiplicities}, {"horizon", s.horizon},
          {"transient", s.transient},   {"residual", s.residual},             {"gap_tol", s.gap_tol},
          {"raw_rates", s.raw_rates},   {"log_det_rate", s.log_det_rate}};
}

json report_json(const BoundReport& r) {
  json j = {{"label", r.label}, {"bound", r.bound_value}, {"measured", r.measured},
            {"margin", r.margin}, {"passed", r.passed}};
  for (const auto& [k, v] : r.details) j["details"][k] = v;
  for (const auto& [k, v] : r.notes) j["notes"][k] = v;
  return j;
}

const Subspace& piece(const OseledetsData& data, std::size_t i, bool invertible) {
  if (invertible) {
    if (!data.splitting || i < 1 || i > data.splitting->size()) throw Error(ErrorKind::DomainError, "i_index out of range");
    return (*data.splitting)[i - 1];
  }
  if (i < 1 || i > data.flags.size()) throw Error(ErrorKind::DomainError, "i_index out of range");
  return data.flags[i - 1];
}

}  // namespace

std::string_view to_string(LemmaKind kind) {
  switch (kind) {
    case LemmaKind::pair: return "pair";
    case LemmaKind::triple: return "triple";
    case LemmaKind::metric: return "metric";
    case LemmaKind::iterate: return "iterate";
  }
  return "unknown";
}

LemmaKind parse_lemma_kind(std::string_view name) {
  for (auto k : {LemmaKind::pair, LemmaKind::triple, LemmaKind::metric, LemmaKind::iterate}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::ConfigError, "unknown lemma '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  const auto fail = [](const std::string& m) { throw Error(ErrorKind::ConfigError, m); };
  if (!(eps > 0.0)) fail("eps must be positive");
  if (!(ell >= 0.0)) fail("ell must be >= 0 (0 selects from ell_sweep)");
  if (ell == 0.0 && ell_sweep.empty()) fail("ell_sweep is empty and no ell given");
  for (std::size_t i = 0; i < ell_sweep.size(); ++i) {
    if (!(ell_sweep[i] > 0.0) || (i > 0 && !(ell_sweep[i] > ell_sweep[i - 1]))) fail("ell_sweep must be positive and increasing");
  }
  if (horizon < 0) fail("horizon must be >= 0");
  for (long h : horizon_sweep) {
    if (h < 0) fail("horizon_sweep entries must be >= 0");
  }
  if (sample_count == 0) fail("samples must be >= 1");
  if (!(delta_min > 0.0 && delta_min < delta_max)) fail("need 0 < delta_min < delta_max");
  if (i_index == 0) fail("i_index is 1-based");
  if (spectrum_horizon < 1) fail("spectrum_horizon must be >= 1");
  if (filtration_horizon < 0) fail("filtration_horizon must be >= 0");
  if (!(gap_tol > 0.0)) fail("gap_tol must be positive");
  if (!(slack >= 0.0)) fail("slack must be >= 0");
  if (iterate_n_max < 1) fail("iterate_n_max must be >= 1");
}

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
  ExperimentConfig cfg;
  std::map<std::string, std::size_t, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::ConfigError, where + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw Error(ErrorKind::ConfigError, where + "unknown field '" + std::string(key) + "'");
    if (const auto prev = seen.find(key); prev != seen.end()) {
      throw Error(ErrorKind::ConfigError, where + "field '" + std::string(key) + "' already set on line " +
                                              std::to_string(prev->second));
    }
    seen.emplace(std::string(key), line_no);
    if (value.empty()) throw Error(ErrorKind::ConfigError, where + "field '" + std::string(key) + "': empty value");
    try {
      it->second(cfg, value);
    } catch (const FieldError& e) {
      throw Error(ErrorKind::ConfigError, where + "field '" + std::string(key) + "': " + e.message);
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, where + "field '" + std::string(key) + "': " + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, std::string(source) + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

PairSet sample_block_pairs(const CocycleSystem& sys, const ExperimentConfig& cfg, unsigned threads) {
  cfg.validate();
  PairSet out;
  out.spectrum = lyapunov_spectrum(sys, sys.sample(kReferencePoint), cfg.spectrum_horizon, cfg.gap_tol);
  out.filtration_horizon = cfg.filtration_horizon > 0 ? cfg.filtration_horizon : default_filtration_horizon(out.spectrum);
  const long nf = out.filtration_horizon;
  const Spectrum& spectrum = out.spectrum;
  const std::size_t k = sys.invertible ? spectrum.count() : spectrum.count() - 1;
  if (cfg.i_index > std::max<std::size_t>(k, 1)) {
    throw Error(ErrorKind::ConfigError, "i_index " + std::to_string(cfg.i_index) + " exceeds the available pieces");
  }

  RegularBlockParams params;
  params.eps = cfg.eps;
  params.ell = 1.0;
  params.horizon = cfg.horizon;
  params.spectrum = spectrum;
  params.L_bound = expansion_constant(spectrum);
  params.filtration_horizon = nf;

  const auto data_at = [&](const Point& x) {
    return sys.invertible ? splitting(sys, x, nf, spectrum) : filtration_data(sys, x, nf, spectrum);
  };

  struct SampleResult {
    Point x;
    std::optional<Subspace> piece;
    BlockMembership main;
    std::vector<BlockMembership> by_horizon;
  };
  const std::size_t n = cfg.sample_count;
  std::vector<SampleResult> results(n);
  parallel_for(n, threads, [&](std::size_t s) {
    SampleResult& r = results[s];
    r.x = sys.sample(s);
    try {
      const OseledetsData data = data_at(r.x);
      r.piece = piece(data, cfg.i_index, sys.invertible);
      r.main = membership(sys, r.x, data, params);
      for (long h : cfg.horizon_sweep) {
        RegularBlockParams ph = params;
        ph.horizon = h;
        r.by_horizon.push_back(membership(sys, r.x, data, ph));
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SeparationFailure && e.kind() != ErrorKind::NotGeneralPosition &&
          e.kind() != ErrorKind::RankDeficient && e.kind() != ErrorKind::Overflow) {
        throw;
      }
      r.piece.reset();
      r.main = BlockMembership{};
      r.main.point = r.x;
      r.main.min_ell = std::numeric_limits<double>::infinity();
      r.main.binding = {BlockClause::no_data, 0, 0, 0};
      r.by_horizon.assign(cfg.horizon_sweep.size(), r.main);
    }
  });

  std::vector<BlockMembership> verdicts;
  verdicts.reserve(n);
  for (const auto& r : results) verdicts.push_back(r.main);

  BlockSummary& block = out.block;
  block.eps = cfg.eps;
  block.horizon = cfg.horizon;
  block.samples = n;
  for (const auto& r : results) block.no_data += r.main.binding.clause == BlockClause::no_data ? 1 : 0;
  for (double l : cfg.ell_sweep) block.ell_sweep.push_back({l, passing_fraction(verdicts, l)});
  if (cfg.ell > 0.0) {
    block.ell = cfg.ell;
  } else {
    block.ell = cfg.ell_sweep.back();
    for (const auto& p : block.ell_sweep) {
      if (p.fraction >= 1.0 - cfg.eps) {
        block.ell = p.value;
        break;
      }
    }
  }
  for (std::size_t h = 0; h < cfg.horizon_sweep.size(); ++h) {
    std::vector<BlockMembership> at_h;
    for (const auto& r : results) at_h.push_back(r.by_horizon[h]);
    block.horizon_sweep.push_back({static_cast<double>(cfg.horizon_sweep[h]), passing_fraction(at_h, block.ell)});
  }
  std::vector<std::size_t> members;
  for (std::size_t s = 0; s < n; ++s) {
    if (with_ell(results[s].main, block.ell).passed) members.push_back(s);
  }
  block.passed = members.size();
  block.fraction = static_cast<double>(members.size()) / static_cast<double>(n);
  if (members.empty()) throw Error(ErrorKind::EmptyBlock, "no sample passed the regular-block test");

  params.ell = block.ell;
  struct PartnerResult {
    bool kept = false;
    bool failed = false;
    double d = 0.0;
    double dist = 0.0;
  };
  std::vector<PartnerResult> partners(members.size());
  const std::uint64_t stream = mix_seed(cfg.system.seed, kPartnerStream);
  const double lo = std::log(cfg.delta_min);
  const double hi = std::log(cfg.delta_max);
  parallel_for(members.size(), threads, [&](std::size_t idx) {
    const std::size_t s = members[idx];
    std::mt19937_64 rng(mix_seed(stream, s));
    const double radius = std::exp(std::uniform_real_distribution<double>(lo, hi)(rng));
    const Point y = sys.neighbor(results[s].x, radius, rng());
    PartnerResult& pr = partners[idx];
    pr.d = sys.metric(results[s].x, y);
    if (!(pr.d >= cfg.delta_min && pr.d <= cfg.delta_max)) return;
    try {
      const OseledetsData data = data_at(y);
      if (!membership(sys, y, data, params).passed) {
        pr.failed = true;
        return;
      }
      pr.dist = subspace_distance(*results[s].piece, piece(data, cfg.i_index, sys.invertible));
      pr.kept = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SeparationFailure && e.kind() != ErrorKind::NotGeneralPosition &&
          e.kind() != ErrorKind::RankDeficient && e.kind() != ErrorKind::Overflow) {
        throw;
      }
      pr.failed = true;
    }
  });
  out.candidates = members.size();
  for (std::size_t idx = 0; idx < members.size(); ++idx) {
    const auto& pr = partners[idx];
    if (pr.failed) ++out.partner_failed;
    if (!pr.kept) continue;
    PairSample p;
    p.pair_id = out.pairs.size();
    p.d_base = pr.d;
    p.dist_subspace = pr.dist;
    p.i_index = cfg.i_index;
    p.x_id = members[idx];
    p.y_id = n + members[idx];
    out.pairs.push_back(p);
  }
  return out;
}

HolderFit holder_fit(const std::vector<PairSample>& pairs, double delta_min, double delta_max) {
  const bool windowed = delta_max > 0.0;
  HolderFit fit;
  fit.delta_min = windowed ? delta_min : 0.0;
  fit.delta_max = windowed ? delta_max : 0.0;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& p : pairs) {
    if (!(p.d_base > 0.0)) continue;
    if (windowed && (p.d_base < delta_min || p.d_base > delta_max)) continue;
    if (!(p.dist_subspace > 1e-14)) {
      ++fit.n_zero;
      continue;
    }
    xs.push_back(std::log(p.d_base));
    ys.push_back(std::log(p.dist_subspace));
  }
  fit.n_pairs = xs.size();
  if (xs.size() < 10) {
    throw Error(ErrorKind::InsufficientData, std::to_string(xs.size()) + " usable pairs (need 10); " +
                                                 std::to_string(fit.n_zero) + " zero-distance pairs excluded");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::InsufficientData, "all base distances coincide");
  fit.slope = sxy / sxx;
  fit.intercept_log = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept_log + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

Prediction predict(const CocycleSystem& sys, const Spectrum& spectrum, double eps, double ell, std::size_t i) {
  Prediction p;
  p.c1 = holder_iterate_constant(sys.holder_c0, sys.holder_nu, sys.iterate_growth_constant(), eps);
  p.log_a = std::log(p.c1);
  p.nu = sys.holder_nu;
  p.delta = theorem_delta(spectrum, p.c1);
  for (const auto& e : theorem_exponents(spectrum, eps, p.log_a, sys.invertible, std::max(ell, 1.0))) {
    if (e.i == i) {
      p.i = i;
      p.kind = e.kind;
      p.omega_i = e.exponent;
      p.constant = e.constant;
      return p;
    }
  }
  throw Error(ErrorKind::DomainError, "no theorem exponent for i = " + std::to_string(i));
}

BoundReport compare_to_theorem(const std::optional<HolderFit>& fit, const std::vector<PairSample>& pairs,
                               const Prediction& prediction, double slack) {
  const double target = prediction.nu * prediction.omega_i;
  const double threshold = target - slack;
  std::size_t violations = 0;
  std::size_t checked = 0;
  for (const auto& p : pairs) {
    if (!(p.d_base > 0.0)) continue;
    ++checked;
    const double bound = prediction.constant * std::pow(p.d_base, target);
    if (p.dist_subspace > bound * (1.0 + 1e-9)) ++violations;
  }
  BoundReport r = BoundReport::make("theorem_A", fit ? fit->slope : threshold, threshold);
  const bool slope_ok = fit && fit->slope >= threshold;
  r.passed = slope_ok || violations == 0;
  r.details["nu_omega"] = target;
  r.details["slack"] = slack;
  r.details["slope_ok"] = slope_ok ? 1.0 : 0.0;
  r.details["has_fit"] = fit ? 1.0 : 0.0;
  r.details["pointwise_checked"] = static_cast<double>(checked);
  r.details["pointwise_violations"] = static_cast<double>(violations);
  r.details["pointwise_violation_fraction"] = checked ? static_cast<double>(violations) / static_cast<double>(checked) : 0.0;
  r.details["pointwise_pass_fraction"] = checked ? 1.0 - static_cast<double>(violations) / static_cast<double>(checked) : 1.0;
  r.notes["semantics"] = "bound = empirical slope, measured = nu*omega_i - slack";
  return r;
}

std::vector<std::pair<Point, Point>> base_pairs(const CocycleSystem& sys, std::size_t count, std::uint64_t seed,
                                                double dmin, double dmax) {
  if (!(dmin > 0.0 && dmin <= dmax)) throw Error(ErrorKind::DomainError, "need 0 < dmin <= dmax");
  std::vector<std::pair<Point, Point>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::mt19937_64 rng(mix_seed(seed, i));
    const double r = std::exp(std::uniform_real_distribution<double>(std::log(dmin), std::log(dmax))(rng));
    Point x = sys.sample(mix_seed(seed, i) ^ 0x51ULL);
    Point y = sys.neighbor(x, r, rng());
    out.emplace_back(std::move(x), std::move(y));
  }
  return out;
}

std::string pairs_csv(const std::vector<PairSample>& pairs) {
  std::string out = "pair_id,d_base,dist_subspace,i_index,x_id,y_id\n";
  for (const auto& p : pairs) {
    out += std::to_string(p.pair_id) + "," + fmt(p.d_base) + "," + fmt(p.dist_subspace) + "," +
           std::to_string(p.i_index) + "," + std::to_string(p.x_id) + "," + std::to_string(p.y_id) + "\n";
  }
  return out;
}

namespace {

ExperimentResult run_holder(const ExperimentConfig& cfg, unsigned threads) {
  const CocycleSystem sys = make_system(cfg.system);
  const PairSet set = sample_block_pairs(sys, cfg, threads);
  json report;
  report["name"] = cfg.name;
  report["system"] = sys.name;
  report["spectrum"] = spectrum_json(set.spectrum);
  report["spectrum"]["filtration_horizon"] = set.filtration_horizon;
  const auto& b = set.block;
  json block = {{"eps", b.eps},         {"ell", b.ell},           {"horizon", b.horizon}, {"samples", b.samples},
                {"passed", b.passed},   {"fraction", b.fraction}, {"no_data", b.no_data},
                {"partners_drawn", set.candidates}, {"partners_outside_block", set.partner_failed}};
  for (const auto& p : b.ell_sweep) block["ell_sweep"].push_back({{"ell", p.value}, {"fraction", p.fraction}});
  for (const auto& p : b.horizon_sweep) block["horizon_sweep"].push_back({{"horizon", p.value}, {"fraction", p.fraction}});
  report["block_summary"] = block;

  std::optional<HolderFit> fit;
  try {
    fit = holder_fit(set.pairs, cfg.delta_min, cfg.delta_max);
    report["fit"] = {{"slope", fit->slope},       {"intercept_log", fit->intercept_log},
                     {"r2", fit->r_squared},      {"n_pairs", fit->n_pairs},
                     {"n_zero", fit->n_zero},     {"delta_min", fit->delta_min},
                     {"delta_max", fit->delta_max}};
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InsufficientData) throw;
    std::size_t zero = 0;
    for (const auto& p : set.pairs) zero += p.dist_subspace > 1e-14 ? 0 : 1;
    report["fit"] = {{"slope", nullptr}, {"intercept_log", nullptr}, {"r2", nullptr}, {"n_pairs", 0},
                     {"n_zero", zero},   {"error", e.what()}};
  }

  ExperimentResult result;
  result.csv = pairs_csv(set.pairs);
  try {
    const Prediction pred = predict(sys, set.spectrum, cfg.eps, b.ell, cfg.i_index);
    report["prediction"] = {{"omega_i", pred.omega_i}, {"nu", pred.nu},       {"constant", pred.constant},
                            {"kind", to_string(pred.kind)}, {"i", pred.i},    {"log_a", pred.log_a},
                            {"c1", pred.c1},           {"delta", pred.delta}, {"nu_omega", pred.nu * pred.omega_i}};
    const BoundReport cmp = compare_to_theorem(fit, set.pairs, pred, cfg.slack);
    report["comparison"] = report_json(cmp);
    result.passed = cmp.passed;
    report["verdict"] = cmp.passed ? "pass" : "fail";
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DomainError) throw;
    report["prediction"] = {{"omega_i", nullptr}, {"nu", sys.holder_nu}, {"constant", nullptr}, {"error", e.what()}};
    report["verdict"] = "inconclusive";
  }
  report["pairs"] = set.pairs.size();
  report["versions"] = {{"schema", 1}, {"oslab", "0.1.0"}};
  result.report = report.dump(2) + "\n";
  return result;
}

ExperimentResult run_lemma_sweep(const ExperimentConfig& cfg) {
  json report;
  report["name"] = cfg.name;
  report["lemma"] = std::string(to_string(cfg.lemma));
  std::string csv = "instance,label,n,delta,bound,measured,passed\n";
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t violations = 0;
  double worst = 0.0;
  const std::uint64_t seed = cfg.system.seed;
  const auto record = [&](std::size_t id, const BoundReport& r, long n, double delta) {
    csv += std::to_string(id) + "," + r.label + "," + std::to_string(n) + "," + fmt(delta) + "," + fmt(r.bound_value) +
           "," + fmt(r.measured) + "," + (r.passed ? "1" : "0") + "\n";
    if (!r.passed) ++violations;
    if (r.bound_value > 0.0) worst = std::max(worst, r.measured / r.bound_value);
  };

  if (cfg.lemma == LemmaKind::iterate) {
    const CocycleSystem sys = make_system(cfg.system);
    const auto pairs = base_pairs(sys, cfg.lemma_instances, seed, cfg.delta_min, cfg.delta_max);
    const BoundReport r = verify_iterate_holder(sys, pairs, cfg.iterate_n_max, cfg.eps);
    report["iterate"] = report_json(r);
    accepted = pairs.size();
    violations = static_cast<std::size_t>(r.details.at("violations"));
    worst = r.details.at("worst_ratio");
    csv += "0," + r.label + "," + std::to_string(cfg.iterate_n_max) + ",0," + fmt(r.bound_value) + "," +
           fmt(r.measured) + "," + (r.passed ? "1" : "0") + "\n";
  } else {
    const std::size_t max_draws = 200 * cfg.lemma_instances + 1000;
    for (std::size_t i = 0; i < max_draws && accepted < cfg.lemma_instances; ++i) {
      const std::uint64_t s = mix_seed(seed, i);
      try {
        switch (cfg.lemma) {
          case LemmaKind::pair: {
            const auto in = random_pair_instance(s);
            const auto r = verify_pair_lemma(in.A_n, in.B_n, in.E, in.E_prime, in.F, in.F_prime, in.rates, in.n);
            record(accepted, r, in.n, in.rates.delta);
            break;
          }
          case LemmaKind::triple: {
            const auto in = random_triple_instance(s);
            const auto r = verify_triple_lemma(in.A_seq(), in.B_seq(), in.A_split, in.B_split, in.rates, in.n);
            for (const auto* x : {&r.E, &r.F, &r.G}) record(accepted, *x, in.n, in.rates.delta);
            break;
          }
          case LemmaKind::metric: {
            const auto in = random_metric_instance(s);
            record(accepted, verify_metric_lemma(in.hE, in.hF, in.h0, in.E, in.F, in.rates, in.n), in.n, in.rates.delta);
            break;
          }
          case LemmaKind::iterate: break;
        }
        ++accepted;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::HypothesisFailure && e.kind() != ErrorKind::DeltaTooLarge &&
            e.kind() != ErrorKind::NotTransverse) {
          throw;
        }
        ++rejected;
      }
    }
  }
  report["lemma_sweep"] = {{"accepted", accepted}, {"rejected_hypothesis", rejected}, {"violations", violations},
                           {"worst_ratio", worst}, {"requested", cfg.lemma_instances}};
  const bool passed = violations == 0 && accepted >= cfg.lemma_instances;
  report["spectrum"] = nullptr;
  report["block_summary"] = nullptr;
  report["fit"] = nullptr;
  report["prediction"] = nullptr;
  report["verdict"] = passed ? "pass" : "fail";
  report["versions"] = {{"schema", 1}, {"oslab", "0.1.0"}};
  return {csv, report.dump(2) + "\n", passed};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + path.string());
  out << text;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, unsigned threads) {
  cfg.validate();
  ExperimentResult result = cfg.experiment == ExperimentKind::holder ? run_holder(cfg, threads) : run_lemma_sweep(cfg);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / cfg.csv_name, result.csv);
    write_file(out_dir / cfg.report_name, result.report);
  }
  return result;
}

}  // namespace osl
