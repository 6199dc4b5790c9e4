#pragma once

#include "sdre/analysis.hpp"
#include "sdre/density_ratio.hpp"
#include "sdre/environments.hpp"
#include "sdre/estimators.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sdre {

// Flat key = value config, one pair per line, '#' comments. The first
// setting must be `schema_version = 1`. Unknown or repeated keys are errors.
// See README.md for the key list.
inline constexpr int kConfigSchemaVersion = 1;

struct RatioSettings {
  FeatureKind features = FeatureKind::kOneHot;
  std::size_t rff_dim = 64;
  double rff_bandwidth = 0.0;  ///< 0 means median pairwise distance of the embedding
  KernelKind kernel = KernelKind::kDelta;
  double bandwidth = 0.0;      ///< 0 means the median heuristic on the data
  SgdHyper sgd;
};

struct ExperimentConfig {
  std::string environment = "circle";  ///< circle | gridworld | random
  CircleSpec circle;
  GridworldSpec gridworld;
  RandomMdpSpec random;
  std::size_t n_trajectories = 100;
  std::size_t horizon = 100;
  double gamma = 1.0;
  /// Behavior = (1 - alpha) target + alpha base, where base is the uniform
  /// policy for the gridworld and the environment's own behavior otherwise.
  /// Unset keeps the environment's behavior.
  std::optional<double> alpha;
  std::string sweep_var = "n";  ///< n | T | gamma | alpha
  std::vector<double> sweep_values{100.0};
  std::vector<std::string> estimators{"traj_wis", "step_wis", "stationary_sgd"};
  std::size_t replicates = 10;
  std::uint64_t base_seed = 0;
  std::string output = "sweep.csv";
  int threads = 0;  ///< 0 uses the OpenMP default
  RatioSettings ratio;

  /// Throws std::invalid_argument on an empty grid, zero replicates, unknown
  /// estimators or out-of-range values.
  void validate() const;
};

/// Names accepted in `estimators`.
const std::vector<std::string>& known_estimators();

/// Set one key from its text value (the parser and `--set` use this).
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form listing every key; parse_config(serialize_config(c))
/// reproduces c.
std::string serialize_config(const ExperimentConfig& config);

/// FNV-1a over the canonical text form, ignoring `threads` and `output`.
std::uint64_t config_hash(const ExperimentConfig& config);

/// Config with the sweep variable set to `value`.
ExperimentConfig config_at(const ExperimentConfig& config, double value);

/// Environment for a (non-sweep) config, with `alpha` applied.
Environment build_environment(const ExperimentConfig& config);

/// Seed of replicate r at grid point g: base_seed + g * replicates + r, so
/// no two tasks of one sweep share a seed.
std::uint64_t replicate_seed(const ExperimentConfig& config, std::size_t grid_index,
                             std::size_t replicate);

/// Runs every configured estimator on `data`. Failures become reports with a
/// NaN estimate and an "error" entry in `errors` (same index).
std::vector<EstimateReport> run_estimators(const ExperimentConfig& config, const Environment& env,
                                           const std::vector<Trajectory>& data,
                                           std::uint64_t seed, std::vector<std::string>* errors,
                                           const RatioModel* fitted = nullptr);

/// Fits the ratio model the `stationary_sgd` estimator would use.
FitResult fit_ratio(const ExperimentConfig& config, const Environment& env,
                    const std::vector<Trajectory>& data, std::uint64_t seed);

struct SweepRow {
  std::string sweep_var;
  double sweep_value = 0.0;
  std::string estimator;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double truth = 0.0;
  double sq_error = 0.0;
  std::string error;  ///< empty on success
};

struct SummaryRow {
  std::string sweep_var;
  double sweep_value = 0.0;
  std::string estimator;
  std::size_t replicates = 0;
  std::size_t failures = 0;
  double mse = 0.0;        ///< over successful replicates
  double log10_mse = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  ///< grid order, then replicate, then estimator order

  std::vector<SummaryRow> summary() const;
};

/// Every grid point x replicate runs independently (in parallel under
/// OpenMP) and writes to its own row slots, so results do not depend on
/// scheduling.
SweepResult run_sweep(const ExperimentConfig& config);

/// Header sweep_var,sweep_value,estimator,replicate,seed,estimate,truth,sq_error;
/// LF endings; shortest round-trip decimals; "nan" for failures.
void write_sweep_csv(std::ostream& out, const SweepResult& result);
void emit_csv(const SweepResult& result, const std::filesystem::path& path);

/// Header sweep_var,sweep_value,estimator,replicates,failures,mse,log10_mse.
void write_summary_csv(std::ostream& out, const SweepResult& result);

/// Header estimator,normalization,estimate,truth,sq_error,seed,config_hash,diagnostics
/// where diagnostics is `key=value` pairs joined by ';'.
void write_reports_csv(std::ostream& out, const std::vector<EstimateReport>& reports,
                       double truth);

struct VarianceDemoRow {
  CircleVarianceReport closed;
  CircleVarianceSample empirical;
  std::uint64_t seed = 0;
};

/// Closed-form and simulated circle variances for every (rho, T) pair; cell
/// k uses seed derive_seed(seed, k).
std::vector<VarianceDemoRow> run_variance_demo(const std::vector<double>& rhos,
                                               const std::vector<std::size_t>& horizons,
                                               std::size_t replicates, std::uint64_t seed);

/// Header rho,T,A_rho,B_rho_T,D_rho_T,var_weight_closed,var_weight_empirical,
/// var_wR_closed,var_wR_empirical,rel_err_weight,rel_err_wR,mean_weight,replicates,seed.
void write_variance_csv(std::ostream& out, const std::vector<VarianceDemoRow>& rows);

/// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sdre
