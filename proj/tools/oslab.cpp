#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "osl/bounds.hpp"
#include "osl/error.hpp"
#include "osl/harness.hpp"
#include "osl/oseledets.hpp"
#include "osl/regular_blocks.hpp"
#include "osl/systems.hpp"

namespace {

using json = nlohmann::json;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 1;
  std::string format = "json";
};

osl::ExperimentConfig load(const Globals& g, bool required) {
  osl::ExperimentConfig cfg;
  if (!g.config.empty()) {
    cfg = osl::load_config(g.config);
  } else if (required) {
    throw osl::Error(osl::ErrorKind::ConfigError, "this subcommand needs --config");
  }
  if (g.seed) cfg.system.seed = *g.seed;
  return cfg;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(const Globals& g, const std::string& name, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(g.out);
  const auto path = std::filesystem::path(g.out) / name;
  std::ofstream(path, std::ios::binary) << text;
  std::cerr << "wrote " << path.string() << "\n";
}

json frame_json(const osl::Subspace& s) {
  json cols = json::array();
  const auto& q = s.frame();
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    json col = json::array();
    for (Eigen::Index r = 0; r < q.rows(); ++r) col.push_back(q(r, c));
    cols.push_back(col);
  }
  return cols;
}

int cmd_exponents(const Globals& g) {
  const auto cfg = load(g, true);
  const auto sys = osl::make_system(cfg.system);
  const auto s = osl::lyapunov_spectrum(sys, sys.sample(0), cfg.spectrum_horizon, cfg.gap_tol);
  if (g.format == "csv") {
    std::string out = "index,exponent,multiplicity\n";
    for (std::size_t i = 0; i < s.count(); ++i) {
      out += std::to_string(i + 1) + "," + num(s.exponents[i]) + "," + std::to_string(s.multiplicities[i]) + "\n";
    }
    emit(g, "exponents.csv", out);
  } else {
    json j = {{"system", sys.name},        {"exponents", s.exponents}, {"multiplicities", s.multiplicities},
              {"horizon", s.horizon},      {"residual", s.residual},   {"raw_rates", s.raw_rates},
              {"log_det_rate", s.log_det_rate}, {"time_step", sys.time_step}};
    emit(g, "exponents.json", j.dump(2) + "\n");
  }
  return 0;
}

int cmd_splitting(const Globals& g, std::uint64_t point) {
  const auto cfg = load(g, true);
  const auto sys = osl::make_system(cfg.system);
  const auto spectrum = osl::lyapunov_spectrum(sys, sys.sample(0), cfg.spectrum_horizon, cfg.gap_tol);
  const long nf = cfg.filtration_horizon > 0 ? cfg.filtration_horizon : osl::default_filtration_horizon(spectrum);
  const auto x = sys.sample(point);
  const auto data = sys.invertible ? osl::splitting(sys, x, nf, spectrum) : osl::filtration_data(sys, x, nf, spectrum);
  json j = {{"system", sys.name}, {"point", point}, {"filtration_horizon", nf}, {"exponents", spectrum.exponents}};
  for (const auto& f : data.flags) j["flags"].push_back(frame_json(f));
  if (data.splitting) {
    for (const auto& e : *data.splitting) j["splitting"].push_back(frame_json(e));
    j["equivariance_defect"] = osl::equivariance_defect(sys, x, nf, spectrum);
  }
  j["flag_residual"] = osl::flag_residual(data);
  emit(g, "splitting.json", j.dump(2) + "\n");
  return 0;
}

int cmd_block(const Globals& g) {
  const auto cfg = load(g, true);
  const auto sys = osl::make_system(cfg.system);
  const auto spectrum = osl::lyapunov_spectrum(sys, sys.sample(0), cfg.spectrum_horizon, cfg.gap_tol);
  const long nf = cfg.filtration_horizon > 0 ? cfg.filtration_horizon : osl::default_filtration_horizon(spectrum);
  osl::RegularBlockParams p;
  p.eps = cfg.eps;
  p.ell = cfg.ell > 0.0 ? cfg.ell : cfg.ell_sweep.back();
  p.horizon = cfg.horizon;
  p.spectrum = spectrum;
  p.L_bound = osl::expansion_constant(spectrum);
  p.filtration_horizon = nf;
  std::vector<osl::Point> samples;
  for (std::size_t s = 0; s < cfg.sample_count; ++s) samples.push_back(sys.sample(s));
  const osl::DataFn data_fn = [&](const osl::Point& x) {
    return sys.invertible ? osl::splitting(sys, x, nf, spectrum) : osl::filtration_data(sys, x, nf, spectrum);
  };
  const auto block = osl::build_block(sys, samples, data_fn, p, g.threads);
  if (g.format == "csv") {
    std::string out = "x_id,passed,min_ell,worst_violation,binding_clause,binding_i,binding_m,binding_n\n";
    for (std::size_t s = 0; s < block.members.size(); ++s) {
      const auto& m = block.members[s].second;
      out += std::to_string(s) + "," + (m.passed ? "1" : "0") + "," + num(m.min_ell) + "," + num(m.worst_violation) +
             "," + std::string(osl::to_string(m.binding.clause)) + "," + std::to_string(m.binding.i) + "," +
             std::to_string(m.binding.m) + "," + std::to_string(m.binding.n) + "\n";
    }
    emit(g, "block.csv", out);
  } else {
    std::vector<osl::BlockMembership> verdicts;
    for (const auto& [pt, m] : block.members) verdicts.push_back(m);
    json j = {{"system", sys.name}, {"eps", p.eps},           {"ell", p.ell},
              {"horizon", p.horizon}, {"samples", samples.size()}, {"passed", block.passed},
              {"fraction", block.fraction}};
    for (double l : cfg.ell_sweep) j["ell_sweep"].push_back({{"ell", l}, {"fraction", osl::passing_fraction(verdicts, l)}});
    emit(g, "block.json", j.dump(2) + "\n");
  }
  return 0;
}

int run(const Globals& g, osl::ExperimentConfig cfg) {
  const auto result = osl::run_experiment(cfg, g.out, g.threads);
  if (g.out.empty()) {
    std::cout << (g.format == "csv" ? result.csv : result.report);
  } else {
    std::cerr << "wrote " << (std::filesystem::path(g.out) / cfg.csv_name).string() << " and "
              << (std::filesystem::path(g.out) / cfg.report_name).string() << "\n";
  }
  std::cerr << cfg.name << ": " << (result.passed ? "pass" : "fail") << "\n";
  return result.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on Hoelder continuity of Oseledets subspaces"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment config file");
  app.add_option("--seed", g.seed, "Override the system seed");
  app.add_option("--out", g.out, "Output directory (stdout when omitted)");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1U, 256U));
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  auto* exponents = app.add_subcommand("exponents", "Lyapunov spectrum at a reference point");
  std::uint64_t point = 0;
  auto* split = app.add_subcommand("splitting", "Oseledets filtration and splitting at a sample point");
  split->add_option("--point", point, "Sample index of the base point");
  auto* block = app.add_subcommand("block", "Regular-block membership of the configured samples");
  auto* verify = app.add_subcommand("verify-lemma", "Randomized soundness sweep of a lemma bound");
  std::string lemma;
  std::optional<std::size_t> instances;
  verify->add_option("lemma", lemma, "pair, triple, metric or iterate")
      ->required()
      ->check(CLI::IsMember({"pair", "triple", "metric", "iterate"}));
  verify->add_option("--instances", instances, "Accepted instances (pairs for iterate)");
  auto* holder = app.add_subcommand("holder", "End-to-end Hoelder experiment");
  auto* report = app.add_subcommand("report", "Run the configured experiment and write CSV and report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*exponents) return cmd_exponents(g);
    if (*split) return cmd_splitting(g, point);
    if (*block) return cmd_block(g);
    if (*verify) {
      auto cfg = load(g, false);
      cfg.experiment = osl::ExperimentKind::lemma_sweep;
      cfg.lemma = osl::parse_lemma_kind(lemma);
      if (instances) cfg.lemma_instances = *instances;
      if (g.config.empty()) {
        cfg.name = lemma + "_lemma";
        cfg.csv_name = lemma + "_lemma.csv";
      }
      return run(g, cfg);
    }
    if (*holder) {
      auto cfg = load(g, true);
      cfg.experiment = osl::ExperimentKind::holder;
      return run(g, cfg);
    }
    if (*report) return run(g, load(g, true));
  } catch (const osl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
