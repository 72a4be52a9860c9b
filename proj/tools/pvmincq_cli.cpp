// pvmincq command-line front end.
//
// Exit status: 0 on success, 1 on a usage or configuration error, 2 when the
// computation itself fails.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pvmincq/dataset.hpp"
#include "pvmincq/experiment.hpp"
#include "pvmincq/pv.hpp"
#include "pvmincq/selection.hpp"

using namespace pvmincq;

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

// Options shared by run, sweep and select. Later sources win: config file,
// then --set, then the dedicated flags.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> assignments;
  std::optional<std::string> method;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> gamma, mu, epsilon;

  void attach(CLI::App* cmd, bool hyperparameters) {
    cmd->add_option("-c,--config", config_path, "key = value configuration file");
    cmd->add_option("--set", assignments, "override a configuration entry (key=value)");
    cmd->add_option("--method", method, "pv-mincq, nn-mincq or mincq-no-adapt");
    cmd->add_option("--seed", seed, "run seed");
    if (hyperparameters) {
      cmd->add_option("--gamma", gamma, "kernel width");
      cmd->add_option("--mu", mu, "MinCq margin");
      cmd->add_option("--epsilon", epsilon, "matching radius");
    }
  }

  ExperimentConfig build(ConfigEntries extra = {}) const {
    ConfigEntries entries;
    if (!config_path.empty()) entries = read_config_file(config_path);
    for (const auto& text : assignments) {
      auto [key, value] = parse_assignment(text);
      entries.insert_or_assign(std::move(key), std::move(value));
    }
    if (method) entries["method"] = *method;
    if (seed) {
      entries.erase("seeds");
      entries["seed"] = std::to_string(*seed);
    }
    if (gamma) entries["gamma"] = *gamma;
    if (mu) entries["mu"] = *mu;
    if (epsilon) entries["epsilon"] = *epsilon;
    for (auto& [key, value] : extra) entries.insert_or_assign(key, value);
    return make_config(entries);
  }
};

void write_text(const std::optional<std::filesystem::path>& path, const std::string& text) {
  if (!path) {
    std::cout << text;
    return;
  }
  std::ofstream out(*path);
  if (!out) throw std::runtime_error("cannot write " + path->string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Domain adaptation by Perturbed Variation matching and MinCq majority votes"};
  app.require_subcommand(1);

  // generate
  MoonsParams moons;
  std::string generate_out;
  bool generate_header = false;
  auto* generate = app.add_subcommand("generate", "write a rotated two-moons sample as CSV");
  generate->add_option("--n", moons.n_per_class, "points per class")->check(CLI::PositiveNumber);
  generate->add_option("--angle", moons.rotation_deg, "anticlockwise rotation in degrees");
  generate->add_option("--seed", moons.seed, "random seed");
  generate->add_option("--noise", moons.noise_std, "Gaussian noise standard deviation")->check(CLI::NonNegativeNumber);
  generate->add_option("--out", generate_out, "output CSV")->required();
  generate->add_flag("--header", generate_header, "write a header line");

  // pv
  std::string pv_source, pv_target;
  double pv_epsilon = 0.0;
  bool pv_labels = false, pv_header = false;
  auto* pv = app.add_subcommand("pv", "empirical Perturbed Variation between two CSV samples");
  pv->add_option("source", pv_source, "source CSV")->required();
  pv->add_option("target", pv_target, "target CSV")->required();
  pv->add_option("--epsilon", pv_epsilon, "matching radius")->required()->check(CLI::PositiveNumber);
  pv->add_flag("--labels", pv_labels, "the last column of both files is a label");
  pv->add_flag("--header", pv_header, "both files start with a header line");

  // run
  ConfigFlags run_flags;
  std::optional<std::string> run_out;
  auto* run = app.add_subcommand("run", "train on the source/target pair and report target test accuracy as JSON");
  run_flags.attach(run, true);
  run->add_option("--out", run_out, "output JSON (default: config output, else stdout)");

  // sweep
  ConfigFlags sweep_flags;
  std::string sweep_dir;
  std::optional<unsigned> sweep_threads;
  auto* sweep = app.add_subcommand("sweep", "run every (method, angle, seed) and tabulate mean accuracy");
  sweep_flags.attach(sweep, true);
  sweep->add_option("--out-dir", sweep_dir, "directory for runs/ and table.csv")->required();
  sweep->add_option("--threads", sweep_threads, "worker threads (0 = all cores)");

  // select
  ConfigFlags select_flags;
  std::optional<std::string> select_out;
  auto* select_cmd = app.add_subcommand("select", "k-fold hyperparameter selection; writes the grid table as CSV");
  select_flags.attach(select_cmd, false);
  select_cmd->add_option("--out", select_out, "output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*generate) {
      write_csv(generate_moons(moons), generate_out, generate_header);
      return 0;
    }

    if (*pv) {
      const auto source = read_unlabeled_csv(pv_source, pv_header, pv_labels);
      const auto target = read_unlabeled_csv(pv_target, pv_header, pv_labels);
      const MatchingResult result = max_matching(build_graph(source.points, target.points, pv_epsilon));
      std::cout << "pv " << format_4g(result.pv_value) << '\n'
                << "unmatched_source " << result.unmatched_s << '\n'
                << "unmatched_target " << result.unmatched_t << '\n';
      return 0;
    }

    if (*run) {
      const ExperimentConfig config = run_flags.build();
      if (config.seeds.size() != 1) throw config_error("run takes a single seed");
      const nlohmann::json report = run_experiment(config, config.seeds.front());
      std::optional<std::filesystem::path> out = config.output;
      if (run_out) out = *run_out;
      write_text(out, report.dump(2) + "\n");
      if (report["status"] != "ok") {
        std::cerr << "run failed: " << report["error"].get<std::string>() << '\n';
        return kRuntimeError;
      }
      return 0;
    }

    if (*sweep) {
      ConfigEntries extra;
      if (sweep_threads) extra["threads"] = std::to_string(*sweep_threads);
      const ExperimentConfig config = sweep_flags.build(extra);
      run_sweep(config, sweep_dir);
      const SweepTable table = aggregate_run_files(std::filesystem::path(sweep_dir) / "runs");
      const auto csv = std::filesystem::path(sweep_dir) / "table.csv";
      write_sweep_csv(table, csv);
      std::ifstream in(csv);
      std::cout << in.rdbuf();
      return 0;
    }

    if (*select_cmd) {
      const ExperimentConfig config = select_flags.build();
      if (config.seeds.size() != 1) throw config_error("select takes a single seed");
      const SelectionResult result = run_selection(config, config.seeds.front());
      if (select_out) write_selection_csv(result, *select_out);
      std::cout << "gamma " << format_4g(result.gamma) << '\n' << "mu " << format_4g(result.mu) << '\n';
      if (result.epsilon) std::cout << "epsilon " << format_4g(*result.epsilon) << '\n';
      std::cout << "score " << format_4g(result.score) << '\n';
      return 0;
    }
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
