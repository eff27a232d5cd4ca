#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "osl/bounds.hpp"
#include "osl/cocycle.hpp"
#include "osl/error.hpp"
#include "osl/harness.hpp"
#include "osl/oseledets.hpp"
#include "osl/systems.hpp"

namespace {

using osl::Matrix;
using json = nlohmann::json;

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(b), 1e-300); }

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

osl::CocycleSystem constant(const Matrix& m) {
  osl::SystemSpec spec;
  spec.kind = osl::SystemKind::constant;
  spec.matrix = m;
  return osl::make_system(spec);
}

struct Eig {
  std::vector<double> logs;
  std::vector<osl::Subspace> lines;
};

Eig eigen_oracle(const Matrix& a) {
  const Eigen::EigenSolver<Matrix> es(a);
  std::vector<std::pair<double, Eigen::VectorXd>> v;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    v.emplace_back(std::log(std::abs(es.eigenvalues()(i).real())), es.eigenvectors().col(i).real());
  }
  std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  Eig out;
  for (const auto& [l, vec] : v) {
    out.logs.push_back(l);
    out.lines.push_back(osl::orthonormalize({vec}));
  }
  return out;
}

Outcome criterion1() {
  Outcome o;
  const auto rel = [&](double got, double want, double tol, const std::string& what) {
    o.require(close_rel(got, want, tol), what + " = " + fmt("%.12g", got) + ", expected " + fmt("%.12g", want));
  };
  rel(osl::pair_lemma_bound({1.0, 2.0, 1.0, 1.0, 4.0, 1.0 / 16.0}), 1.5, 1e-9, "pair bound");
  rel(osl::pair_lemma_exponent({1.0, 2.0, 1.0, 1.0, 4.0, 1.0 / 16.0}), 0.5, 1e-9, "pair exponent");

  osl::TripleRates t{0.2, 0.5, 1.0, 2.0, 4.0, 8.0, 1.0, 1.0, 8.0, 1e-4};
  const auto e = osl::triple_lemma_exponents(t);
  o.require(std::abs(e.alpha - 0.25) <= 1e-12, "alpha");
  o.require(std::abs(e.eta - 0.5) <= 1e-12, "eta");
  o.require(std::abs(e.gamma - 0.2) <= 1e-12, "gamma");
  o.require(std::abs(e.beta - 1.0 / 6.0) <= 1e-12, "beta");
  const auto b = osl::triple_lemma_bounds(t);
  rel(b.E, 0.6, 1e-9, "triple bound E");
  rel(b.G, 6.0 * std::pow(1e-4, 0.2), 1e-9, "triple bound G");
  rel(osl::tau_of_L(1.0, 0.4), 1.4 / 0.6, 1e-9, "tau");

  const double eu = std::numbers::e;
  rel(osl::metric_lemma_bound({1.0, eu, 1.0, 1.0, eu * eu, std::pow(eu, -4.0)}), (2 + eu * eu) / (eu * eu), 1e-9,
      "metric bound");
  rel(osl::holder_iterate_constant(1.0, 1.0, 2.0, 0.1), 4.0, 1e-9, "c1(1,1,2,0.1)");
  rel(osl::holder_iterate_constant(5.0, 0.5, 1.0, 0.0), 6.0, 1e-9, "c1(5,0.5,1,0)");

  const auto w = osl::theorem_exponents(osl::cluster_rates({-1.0, 1.0}, 0.05), 0.1, 3.0, false);
  rel(w.at(0).exponent, 1.8 / 3.9, 1e-9, "omega_1");
  const auto v = osl::theorem_exponents(osl::cluster_rates({-1.0, 0.0, 1.0}, 0.05), 0.1, 3.0, true);
  rel(v.at(1).eta, 0.8 / 2.9, 1e-9, "eta_2");
  rel(v.at(1).exponent, (0.8 / 2.9) * (0.8 / 2.9), 1e-9, "beta_2");
  if (o.passed) o.detail = "all worked examples reproduced";
  return o;
}

Outcome criterion2() {
  Outcome o;
  double worst = 0.0;
  double worst_det = 0.0;
  for (const Matrix& a : {mat2(2, 0, 0, 0.5), mat2(3, 0, 0, 1.0 / 3.0), mat2(2, 1, 1, 1)}) {
    const auto sys = constant(a);
    const auto s = osl::lyapunov_spectrum(sys, sys.sample(0), 2000);
    const auto ref = eigen_oracle(a);
    o.require(s.count() == 2, "wrong exponent count");
    if (s.count() != 2) continue;
    for (std::size_t i = 0; i < 2; ++i) worst = std::max(worst, std::abs(s.exponents[i] - ref.logs[i]));
    worst_det = std::max(worst_det, std::abs(s.weighted_sum() - s.log_det_rate));
  }
  o.require(worst <= 1e-8, "exponent error " + fmt("%.3g", worst));
  o.require(worst_det <= 1e-9, "determinant residual " + fmt("%.3g", worst_det));
  if (o.passed) o.detail = "max exponent error " + fmt("%.2e", worst) + ", det residual " + fmt("%.2e", worst_det);
  return o;
}

Outcome criterion3() {
  Outcome o;
  double dist = 0.0;
  double flag = 0.0;
  double equi = 0.0;
  for (const Matrix& a : {mat2(2, 0, 0, 0.5), mat2(3, 0, 0, 1.0 / 3.0), mat2(2, 1, 1, 1)}) {
    const auto sys = constant(a);
    const auto s = osl::lyapunov_spectrum(sys, sys.sample(0), 2000);
    const auto ref = eigen_oracle(a);
    for (std::uint64_t p = 0; p < 5; ++p) {
      const auto x = sys.sample(p);
      const long nf = osl::default_filtration_horizon(s);
      const auto data = osl::splitting(sys, x, nf, s);
      for (std::size_t i = 0; i < 2; ++i) dist = std::max(dist, osl::subspace_distance((*data.splitting)[i], ref.lines[i]));
      flag = std::max(flag, osl::flag_residual(data));
      equi = std::max(equi, osl::equivariance_defect(sys, x, nf, s));
    }
  }
  o.require(dist <= 1e-8, "eigendirection distance " + fmt("%.3g", dist));
  o.require(flag <= 1e-8, "flag residual " + fmt("%.3g", flag));
  o.require(equi <= 1e-6, "equivariance " + fmt("%.3g", equi));
  if (o.passed) {
    o.detail = "distance " + fmt("%.2e", dist) + ", flag " + fmt("%.2e", flag) + ", equivariance " + fmt("%.2e", equi);
  }
  return o;
}

bool is_hypothesis_failure(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const osl::Error& e) {
    return e.kind() == osl::ErrorKind::HypothesisFailure;
  }
  return false;
}

Outcome criterion4() {
  Outcome o;
  const auto pair = osl::pair_sweep(1000, 20240601);
  const auto triple = osl::triple_sweep(1000, 20240602);
  o.require(pair.accepted == 1000, "pair sweep accepted only " + std::to_string(pair.accepted));
  o.require(triple.accepted == 1000, "triple sweep accepted only " + std::to_string(triple.accepted));
  o.require(pair.violations == 0, std::to_string(pair.violations) + " pair violations");
  o.require(triple.violations == 0, std::to_string(triple.violations) + " triple violations");

  // Instances with understated delta break the closeness hypothesis and
  // must be rejected, never scored.
  std::size_t rejected = 0;
  std::size_t tried = 0;
  for (std::uint64_t s = 0; tried < 100 && s < 1000; ++s) {
    auto in = osl::random_pair_instance(osl::mix_seed(77, s));
    if (in.theta == 0.0) continue;
    ++tried;
    in.rates.delta *= 1e-6;
    rejected += is_hypothesis_failure(
        [&] { osl::verify_pair_lemma(in.A_n, in.B_n, in.E, in.E_prime, in.F, in.F_prime, in.rates, in.n); });
  }
  std::size_t triple_tried = 0;
  std::size_t triple_rejected = 0;
  for (std::uint64_t s = 0; triple_tried < 100 && s < 5000; ++s) {
    auto in = osl::random_triple_instance(osl::mix_seed(78, s));
    try {
      osl::verify_triple_lemma(in.A_seq(), in.B_seq(), in.A_split, in.B_split, in.rates, in.n);
    } catch (const osl::Error&) {
      continue;
    }
    ++triple_tried;
    in.rates.delta *= 1e-6;
    triple_rejected += is_hypothesis_failure(
        [&] { osl::verify_triple_lemma(in.A_seq(), in.B_seq(), in.A_split, in.B_split, in.rates, in.n); });
  }
  o.require(tried == 100 && rejected == tried, "pair rejections " + std::to_string(rejected) + "/" + std::to_string(tried));
  o.require(triple_tried == 100 && triple_rejected == triple_tried,
            "triple rejections " + std::to_string(triple_rejected) + "/" + std::to_string(triple_tried));
  if (o.passed) {
    o.detail = "pair 1000/1000 (worst ratio " + fmt("%.3g", pair.worst_ratio) + "), triple 1000/1000 (worst ratio " +
               fmt("%.3g", triple.worst_ratio) + ", " + std::to_string(triple.rejected) +
               " draws rejected), 200 violating instances rejected";
  }
  return o;
}

Outcome criterion5() {
  Outcome o;
  std::string detail;
  for (const char* name : {"shift_iid", "shift_holder"}) {
    auto cfg = osl::load_config(std::string(OSL_CONFIG_DIR) + "/" + name + ".cfg");
    const auto sys = osl::make_system(cfg.system);
    const auto pairs = osl::base_pairs(sys, 500, cfg.system.seed, cfg.delta_min, cfg.delta_max);
    const auto r = osl::verify_iterate_holder(sys, pairs, 10, cfg.eps);
    const double violations = r.details.at("violations");
    o.require(pairs.size() == 500 && r.passed && violations == 0.0, std::string(name) + " violations");
    detail += std::string(detail.empty() ? "" : ", ") + name + " 0/500 violations (worst ratio " +
              fmt("%.3g", r.details.at("worst_ratio")) + ")";
  }
  if (o.passed) o.detail = detail;
  return o;
}

struct HolderRun {
  osl::ExperimentResult result;
  json report;
  double seconds = 0.0;
};

HolderRun run_perturbed(unsigned threads, const std::filesystem::path& out) {
  const auto cfg = osl::load_config(std::string(OSL_CONFIG_DIR) + "/perturbed_cat.cfg");
  const auto t0 = std::chrono::steady_clock::now();
  HolderRun run;
  run.result = osl::run_experiment(cfg, out, threads);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.report = json::parse(run.result.report);
  return run;
}

Outcome criterion6(const HolderRun& run) {
  Outcome o;
  const auto& r = run.report;
  if (r["fit"]["slope"].is_null() || r["prediction"]["omega_i"].is_null()) {
    o.require(false, "no fit or no prediction");
    return o;
  }
  const double slope = r["fit"]["slope"];
  const double r2 = r["fit"]["r2"];
  const double nu_omega = r["prediction"]["nu_omega"];
  const double pointwise = r["comparison"]["details"]["pointwise_pass_fraction"];
  const std::size_t n_pairs = r["fit"]["n_pairs"];
  o.require(pointwise >= 0.99, "pointwise pass fraction " + fmt("%.4f", pointwise));
  o.require(slope >= nu_omega - 0.1, "slope " + fmt("%.4f", slope) + " < " + fmt("%.4f", nu_omega - 0.1));
  o.require(n_pairs >= 10, "too few pairs");
  o.require(run.seconds < 300.0, "runtime " + fmt("%.0f", run.seconds) + " s");
  o.detail += std::string(o.detail.empty() ? "" : "; ") + "slope " + fmt("%.4f", slope) + " vs nu*omega " +
              fmt("%.4f", nu_omega) + " (R^2 " + fmt("%.3f", r2) + "), pointwise " + fmt("%.4f", pointwise) + " over " +
              std::to_string(n_pairs) + " pairs, ell " + fmt("%g", r["block_summary"]["ell"].get<double>()) + ", " +
              fmt("%.0f", run.seconds) + " s";
  return o;
}

Outcome criterion7() {
  Outcome o;
  double worst = 0.0;
  osl::SystemSpec spec;
  spec.kind = osl::SystemKind::linear_flow;
  spec.rates = Eigen::Vector2d(-1.0, 1.0);
  for (double tau : {0.5, 1.0, 2.0}) {
    const auto sys = osl::flow_time_map(spec, tau);
    const auto s = osl::lyapunov_spectrum(sys, sys.sample(0), 2000);
    o.require(s.count() == 2, "exponent count at tau " + fmt("%g", tau));
    if (s.count() != 2) continue;
    worst = std::max({worst, std::abs(s.exponents[0] + tau), std::abs(s.exponents[1] - tau)});
  }
  o.require(worst <= 1e-8, "error " + fmt("%.3g", worst));
  if (o.passed) o.detail = "tau in {0.5, 1, 2}, max error " + fmt("%.2e", worst);
  return o;
}

Outcome criterion8(const HolderRun& run) {
  Outcome o;
  const auto& b = run.report["block_summary"];
  std::string ells;
  double prev = -1.0;
  for (const auto& p : b["ell_sweep"]) {
    const double f = p["fraction"];
    o.require(f >= prev, "ell sweep inversion at ell " + fmt("%g", p["ell"].get<double>()));
    prev = f;
    ells += fmt("%.3f", f) + " ";
  }
  std::string hs;
  prev = 2.0;
  for (const auto& p : b["horizon_sweep"]) {
    const double f = p["fraction"];
    o.require(f <= prev, "horizon sweep inversion at " + fmt("%g", p["horizon"].get<double>()));
    prev = f;
    hs += fmt("%.3f", f) + " ";
  }
  o.require(b["ell_sweep"].size() == 5 && b["horizon_sweep"].size() == 3, "sweeps missing");
  o.detail += std::string(o.detail.empty() ? "" : "; ") + "ell {1,2,4,8,16}: " + ells + "| horizon {10,25,50}: " + hs;
  return o;
}

Outcome criterion9(const HolderRun& a, const HolderRun& b) {
  Outcome o;
  o.require(a.result.csv == b.result.csv, "CSV differs between 1 and 8 threads");
  o.require(!a.result.csv.empty(), "empty CSV");
  if (o.passed) o.detail = std::to_string(a.result.csv.size()) + " bytes identical at 1 and 8 threads";
  return o;
}

}  // namespace

int main() {
  std::vector<std::pair<int, Outcome>> results;
  const auto guarded = [&](int id, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %d: %s (%s)\n", id, o.passed ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    results.emplace_back(id, o);
  };

  guarded(1, criterion1);
  guarded(2, criterion2);
  guarded(3, criterion3);
  guarded(4, criterion4);
  guarded(5, criterion5);

  const std::filesystem::path out = std::filesystem::temp_directory_path() / "oslab_acceptance";
  std::optional<HolderRun> single;
  std::optional<HolderRun> multi;
  std::string run_error;
  try {
    single = run_perturbed(1, out / "threads1");
    multi = run_perturbed(8, out / "threads8");
  } catch (const std::exception& e) {
    run_error = e.what();
  }
  const auto need_runs = [&](auto fn) {
    return [&, fn]() -> Outcome {
      if (!single || !multi) throw std::runtime_error(run_error);
      return fn();
    };
  };
  guarded(6, need_runs([&] { return criterion6(*single); }));
  guarded(7, criterion7);
  guarded(8, need_runs([&] { return criterion8(*single); }));
  guarded(9, need_runs([&] { return criterion9(*single, *multi); }));

  bool all = true;
  for (const auto& [id, o] : results) all = all && o.passed;
  std::printf("%s\n", all ? "all criteria passed" : "some criteria failed");
  return all ? 0 : 1;
}
