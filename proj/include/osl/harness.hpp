#ifndef OSL_HARNESS_HPP
#define OSL_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "osl/bounds.hpp"
#include "osl/oseledets.hpp"
#include "osl/regular_blocks.hpp"
#include "osl/systems.hpp"

namespace osl {

enum class ExperimentKind { holder, lemma_sweep };
enum class LemmaKind { pair, triple, metric, iterate };

std::string_view to_string(LemmaKind kind);
LemmaKind parse_lemma_kind(std::string_view name);

struct ExperimentConfig {
  std::string name = "experiment";
  ExperimentKind experiment = ExperimentKind::holder;
  SystemSpec system;

  double eps = 0.1;
  /// Fixed ell; 0 selects the smallest value of ell_sweep whose passing
  /// fraction reaches 1 - eps.
  double ell = 0.0;
  std::vector<double> ell_sweep{1, 2, 4, 8, 16};
  long horizon = 50;
  /// Extra horizons whose passing fractions are reported.
  std::vector<long> horizon_sweep;
  std::size_t sample_count = 200;
  double delta_min = 1e-6;
  double delta_max = 1e-2;
  std::size_t i_index = 1;
  long spectrum_horizon = 2000;
  long filtration_horizon = 0;
  double gap_tol = kDefaultGapTol;
  double slack = 0.1;

  LemmaKind lemma = LemmaKind::triple;
  std::size_t lemma_instances = 1000;
  int iterate_n_max = 10;

  std::string csv_name = "pairs.csv";
  std::string report_name = "report.json";

  /// Throws ConfigError on inconsistent values.
  void validate() const;
};

/// Parses the flat `key = value` format. Lines starting with '#' are comments;
/// matrices are row-major numbers with ';' between rows and '|' between
/// matrices. Errors carry "source:line: field 'key': ...".
ExperimentConfig parse_config(std::string_view text, std::string_view source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

struct PairSample {
  std::size_t pair_id = 0;
  double d_base = 0.0;
  double dist_subspace = 0.0;
  std::size_t i_index = 0;
  std::size_t x_id = 0;
  std::size_t y_id = 0;
};

struct SweepPoint {
  double value = 0.0;
  double fraction = 0.0;
};

struct BlockSummary {
  double eps = 0.0;
  double ell = 0.0;
  long horizon = 0;
  std::size_t samples = 0;
  std::size_t passed = 0;
  double fraction = 0.0;
  std::vector<SweepPoint> ell_sweep;
  std::vector<SweepPoint> horizon_sweep;  ///< at the selected ell
  std::size_t no_data = 0;
};

struct PairSet {
  Spectrum spectrum;
  long filtration_horizon = 0;
  BlockSummary block;
  std::vector<PairSample> pairs;
  std::size_t candidates = 0;     ///< partners drawn for passing samples
  std::size_t partner_failed = 0; ///< partners outside the block
};

/// Spectrum at a reference sample, membership of `sample_count` base points,
/// one partner per passing point at a log-uniform distance in the window;
/// pairs keep both points inside the block. Deterministic in (cfg, seed)
/// for any thread count. EmptyBlock when no sample passes.
PairSet sample_block_pairs(const CocycleSystem& sys, const ExperimentConfig& cfg, unsigned threads = 1);

struct HolderFit {
  double slope = 0.0;
  double intercept_log = 0.0;
  double r_squared = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_zero = 0;
  double delta_min = 0.0;
  double delta_max = 0.0;
};

/// Least squares of log dist against log d over pairs with d in the window
/// (all pairs when the window is empty). InsufficientData below 10 usable
/// pairs.
HolderFit holder_fit(const std::vector<PairSample>& pairs, double delta_min = 0.0, double delta_max = 0.0);

struct Prediction {
  std::size_t i = 0;
  ExponentKind kind = ExponentKind::omega;
  double omega_i = 0.0;
  double nu = 1.0;
  double constant = 0.0;
  double log_a = 0.0;
  double c1 = 0.0;
  double delta = 0.0;
};

/// Theorem exponent for piece i with log a = log c1.
Prediction predict(const CocycleSystem& sys, const Spectrum& spectrum, double eps, double ell, std::size_t i);

/// Empirical slope against nu * omega_i: bound_value is the slope, measured
/// is nu*omega_i - slack. Passes when the slope clears it or when every pair
/// lies under constant * d^{nu omega_i}; the pointwise violation fraction is
/// in details.
BoundReport compare_to_theorem(const std::optional<HolderFit>& fit, const std::vector<PairSample>& pairs,
                               const Prediction& prediction, double slack = 0.1);

/// `count` pairs (x, y) with d(x, y) log-uniform in [dmin, dmax].
std::vector<std::pair<Point, Point>> base_pairs(const CocycleSystem& sys, std::size_t count, std::uint64_t seed,
                                                double dmin, double dmax);

struct ExperimentResult {
  std::string csv;
  std::string report;
  bool passed = false;
};

std::string pairs_csv(const std::vector<PairSample>& pairs);

/// Runs the configured pipeline and writes csv_name and report_name under
/// out_dir (when non-empty).
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, unsigned threads = 1);

}  // namespace osl

#endif  // OSL_HARNESS_HPP
