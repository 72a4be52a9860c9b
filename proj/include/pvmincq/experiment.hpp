#pragma once

// End-to-end experiments: configuration, single runs and angle sweeps.
//
// A configuration is a flat list of `key = value` entries. Recognized keys:
//
//   method                 pv-mincq | nn-mincq | mincq-no-adapt
//   seed / seeds           run seed / comma-separated sweep seeds
//   source.csv             labeled CSV, or generated moons with
//   source.n_per_class, source.noise, source.angle
//   target.csv             labeled CSV (labels used for diagnostics only), or
//   target.n_per_class, target.noise, target.angle
//   test.csv               labeled CSV, or moons at the target angle with
//   test.n_per_class, test.noise
//   gamma, mu, epsilon     fixed hyperparameters (select = false)
//   select                 true | false; defaults to false exactly when every
//                          hyperparameter the method needs is given
//   grid.gammas, grid.mus, grid.epsilons, grid.k_folds
//   k_nn                   neighbours for nn-mincq (odd, default 1)
//   sweep.angles, sweep.methods
//   threads                sweep worker count (0 = hardware concurrency)
//   output                 output path
//
// Seeds of the generated domains and the fold split derive from the run
// seed, so a configuration plus a seed fixes every result.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pvmincq/dataset.hpp"
#include "pvmincq/selection.hpp"

namespace pvmincq {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ConfigEntries = std::map<std::string, std::string>;

/// Reads `key = value` lines; `#` starts a comment. Throws config_error.
ConfigEntries read_config_file(const std::filesystem::path& path);

/// Parses `key=value`.
std::pair<std::string, std::string> parse_assignment(const std::string& text);

struct DomainSpec {
  std::optional<std::filesystem::path> csv;
  MoonsParams moons;  // the seed is derived per run
};

struct ExperimentConfig {
  Method method = Method::pv_mincq;
  std::vector<std::uint64_t> seeds{0};
  DomainSpec source;
  DomainSpec target;
  DomainSpec test;
  std::optional<double> gamma, mu, epsilon;
  bool select = true;
  HyperGrid grid;
  std::size_t k_nn = 1;
  std::vector<double> sweep_angles{20, 30, 40, 50, 60, 70, 80};
  std::vector<Method> sweep_methods{Method::mincq_no_adapt, Method::nn_mincq, Method::pv_mincq};
  unsigned threads = 0;
  std::optional<std::filesystem::path> output;

  ConfigEntries entries;  // what the configuration was built from
};

/// Builds and validates a configuration. Throws config_error.
ExperimentConfig make_config(const ConfigEntries& entries);

/// Stream `stream` of the run seed `seed` (splitmix64 of both).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct ExperimentData {
  LabeledSample source;
  LabeledSample target;  // labels kept for diagnostics only
  LabeledSample test;
};

ExperimentData load_data(const ExperimentConfig& config, std::uint64_t seed);

/// One run. Failures of the pipeline (empty transfer, infeasible QP, failed
/// selection) are reported through the "status" and "error" fields; the
/// returned JSON is a deterministic function of (config, seed).
nlohmann::json run_experiment(const ExperimentConfig& config, std::uint64_t seed);

/// Selection alone, with the configured method.
SelectionResult run_selection(const ExperimentConfig& config, std::uint64_t seed);

/// Runs every (method, angle, seed) of the configuration, writes each report
/// to `dir/runs/<method>_angle<a>_seed<s>.json` and returns the paths.
std::vector<std::filesystem::path> run_sweep(const ExperimentConfig& config, const std::filesystem::path& dir);

struct SweepCell {
  std::size_t runs = 0;
  std::size_t failed = 0;
  double mean = 0.0;  // accuracy in percent over successful runs
  double std = 0.0;   // sample standard deviation
};

struct SweepTable {
  std::vector<std::string> methods;
  std::vector<double> angles;
  std::map<std::pair<std::string, double>, SweepCell> cells;
};

/// Aggregates run reports, keyed by (method, target angle).
SweepTable aggregate_runs(const std::vector<nlohmann::json>& reports);
SweepTable aggregate_run_files(const std::filesystem::path& runs_dir);

/// One row per method, `<angle>_mean,<angle>_std` columns, 4 significant
/// digits.
void write_sweep_csv(const SweepTable& table, const std::filesystem::path& path);

/// `value` with 4 significant digits.
std::string format_4g(double value);

}  // namespace pvmincq
