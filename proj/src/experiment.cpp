#include "pvmincq/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "pvmincq/bounds.hpp"
#include "pvmincq/mincq.hpp"
#include "pvmincq/pv.hpp"
#include "pvmincq/transfer.hpp"

namespace pvmincq {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double to_double(const std::string& key, const std::string& text) {
  std::string_view view = text;
  if (!view.empty() && view.front() == '+') view.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(view.data(), view.data() + view.size(), value);
  if (view.empty() || ec != std::errc() || ptr != view.data() + view.size() || !std::isfinite(value))
    throw config_error(key + ": not a number: '" + text + "'");
  return value;
}

std::uint64_t to_uint(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw config_error(key + ": not a nonnegative integer: '" + text + "'");
  return value;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw config_error(key + ": expected true or false, got '" + text + "'");
}

std::vector<std::string> split_list(const std::string& key, const std::string& text) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    items.push_back(trim(std::string_view(text).substr(start, comma - start)));
    if (items.back().empty()) throw config_error(key + ": empty list item in '" + text + "'");
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return items;
}

std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(key, text)) out.push_back(to_double(key, item));
  return out;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "method",       "seed",         "seeds",         "gamma",         "mu",
      "epsilon",      "select",       "k_nn",          "threads",       "output",
      "grid.gammas",  "grid.mus",     "grid.epsilons", "grid.k_folds",  "sweep.angles",
      "sweep.methods", "source.csv",  "source.n_per_class", "source.noise", "source.angle",
      "target.csv",   "target.n_per_class", "target.noise", "target.angle", "test.csv",
      "test.n_per_class", "test.noise"};
  return keys;
}

DomainSpec make_domain(const ConfigEntries& entries, const std::string& prefix, bool has_angle) {
  DomainSpec spec;
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = entries.find(prefix + "." + key);
    return it == entries.end() ? nullptr : &it->second;
  };
  bool generated = false;
  if (const auto* v = get("n_per_class")) {
    spec.moons.n_per_class = to_uint(prefix + ".n_per_class", *v);
    if (spec.moons.n_per_class == 0) throw config_error(prefix + ".n_per_class must be positive");
    generated = true;
  }
  if (const auto* v = get("noise")) {
    spec.moons.noise_std = to_double(prefix + ".noise", *v);
    if (spec.moons.noise_std < 0.0) throw config_error(prefix + ".noise must be nonnegative");
    generated = true;
  }
  if (has_angle) {
    if (const auto* v = get("angle")) {
      spec.moons.rotation_deg = to_double(prefix + ".angle", *v);
      generated = true;
    }
  }
  if (const auto* v = get("csv")) {
    if (generated) throw config_error(prefix + ": both a CSV file and generator parameters given");
    spec.csv = *v;
  }
  return spec;
}

bool csv_has_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    std::string field = trim(line.substr(0, line.find(',')));
    if (field.empty()) continue;
    if (field.front() == '+') field.erase(0, 1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    return ec != std::errc() || ptr != field.data() + field.size();
  }
  return false;
}

LabeledSample load_domain(const DomainSpec& spec, std::uint64_t seed) {
  if (spec.csv) return read_labeled_csv(*spec.csv, csv_has_header(*spec.csv));
  MoonsParams params = spec.moons;
  params.seed = seed;
  return generate_moons(params);
}

enum Stream : std::uint64_t { source_stream = 1, target_stream = 2, test_stream = 3, fold_stream = 4 };

SelectionResult select_on(const ExperimentConfig& config, const ExperimentData& data, std::uint64_t seed) {
  const std::uint64_t fold_seed = derive_seed(seed, fold_stream);
  if (config.method == Method::pv_mincq) return select(data.source, data.target.points, config.grid, fold_seed);
  return select_baseline(data.source, data.target.points, config.grid, config.method, config.k_nn, fold_seed);
}

}  // namespace

ConfigEntries read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path.string());
  ConfigEntries entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(line.substr(0, hash));
    if (body.empty()) continue;
    try {
      auto [key, value] = parse_assignment(body);
      entries.insert_or_assign(std::move(key), std::move(value));
    } catch (const config_error& e) {
      throw config_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return entries;
}

std::pair<std::string, std::string> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw config_error("expected key=value, got '" + text + "'");
  std::string key = trim(std::string_view(text).substr(0, eq));
  std::string value = trim(std::string_view(text).substr(eq + 1));
  if (key.empty()) throw config_error("empty key in '" + text + "'");
  return {std::move(key), std::move(value)};
}

ExperimentConfig make_config(const ConfigEntries& entries) {
  for (const auto& [key, value] : entries)
    if (!known_keys().count(key)) throw config_error("unknown config key '" + key + "'");

  ExperimentConfig config;
  config.entries = entries;
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };

  try {
    if (const auto* v = get("method")) config.method = parse_method(*v);
    if (const auto* v = get("sweep.methods")) {
      config.sweep_methods.clear();
      for (const auto& name : split_list("sweep.methods", *v)) config.sweep_methods.push_back(parse_method(name));
    }
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }

  if (get("seed") && get("seeds")) throw config_error("give either seed or seeds, not both");
  if (const auto* v = get("seed")) config.seeds = {to_uint("seed", *v)};
  if (const auto* v = get("seeds")) {
    config.seeds.clear();
    for (const auto& item : split_list("seeds", *v)) config.seeds.push_back(to_uint("seeds", item));
  }

  config.source = make_domain(entries, "source", true);
  config.target = make_domain(entries, "target", true);
  config.test = make_domain(entries, "test", false);
  if (config.target.csv && !config.test.csv) throw config_error("test.csv is required when target.csv is given");
  if (!config.test.csv) {
    if (!get("test.n_per_class")) config.test.moons.n_per_class = 500;
    if (!get("test.noise")) config.test.moons.noise_std = config.target.moons.noise_std;
    config.test.moons.rotation_deg = config.target.moons.rotation_deg;
  }

  if (const auto* v = get("gamma")) config.gamma = to_double("gamma", *v);
  if (const auto* v = get("mu")) config.mu = to_double("mu", *v);
  if (const auto* v = get("epsilon")) config.epsilon = to_double("epsilon", *v);
  if (const auto* v = get("k_nn")) config.k_nn = to_uint("k_nn", *v);
  if (config.k_nn == 0 || config.k_nn % 2 == 0) throw config_error("k_nn must be odd");
  if (const auto* v = get("threads")) config.threads = static_cast<unsigned>(to_uint("threads", *v));
  if (const auto* v = get("output")) config.output = *v;

  if (const auto* v = get("grid.gammas")) config.grid.gammas = to_doubles("grid.gammas", *v);
  if (const auto* v = get("grid.mus")) config.grid.mus = to_doubles("grid.mus", *v);
  if (const auto* v = get("grid.epsilons")) config.grid.epsilons = to_doubles("grid.epsilons", *v);
  if (const auto* v = get("grid.k_folds")) config.grid.k_folds = to_uint("grid.k_folds", *v);
  try {
    config.grid.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  if (const auto* v = get("sweep.angles")) config.sweep_angles = to_doubles("sweep.angles", *v);

  const bool needs_epsilon = config.method == Method::pv_mincq;
  const bool all_fixed = config.gamma && config.mu && (!needs_epsilon || config.epsilon);
  config.select = get("select") ? to_bool("select", *get("select")) : !all_fixed;
  if (!config.select && !all_fixed)
    throw config_error(needs_epsilon ? "select = false needs gamma, mu and epsilon" : "select = false needs gamma and mu");
  if (config.select && (config.gamma || config.mu || config.epsilon) && get("select"))
    throw config_error("fixed hyperparameters given together with select = true");
  for (const auto& value : {config.gamma, config.mu, config.epsilon})
    if (value && !(*value > 0.0)) throw config_error("gamma, mu and epsilon must be positive");
  return config;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(seed) ^ stream);
}

ExperimentData load_data(const ExperimentConfig& config, std::uint64_t seed) {
  ExperimentData data{load_domain(config.source, derive_seed(seed, source_stream)),
                      load_domain(config.target, derive_seed(seed, target_stream)),
                      load_domain(config.test, derive_seed(seed, test_stream))};
  if (data.source.dim() != data.target.dim() || data.source.dim() != data.test.dim())
    throw parse_error("source, target and test samples differ in dimension");
  return data;
}

SelectionResult run_selection(const ExperimentConfig& config, std::uint64_t seed) {
  return select_on(config, load_data(config, seed), seed);
}

nlohmann::json run_experiment(const ExperimentConfig& config, std::uint64_t seed) {
  nlohmann::json report;
  report["seed"] = seed;
  report["method"] = to_string(config.method);
  report["config"] = config.entries;
  report["target_angle"] = config.target.csv ? nlohmann::json(nullptr)
                                             : nlohmann::json(std::fmod(config.target.moons.rotation_deg, 360.0));

  const ExperimentData data = load_data(config, seed);
  report["sizes"] = {{"source", data.source.size()}, {"target", data.target.size()}, {"test", data.test.size()}};

  try {
    double gamma = config.gamma.value_or(0.0), mu = config.mu.value_or(0.0);
    double epsilon = config.epsilon.value_or(0.0);
    nlohmann::json hyper;
    if (config.select) {
      const SelectionResult selection = select_on(config, data, seed);
      gamma = selection.gamma;
      mu = selection.mu;
      epsilon = selection.epsilon.value_or(0.0);
      hyper["selection_score"] = selection.score;
    }
    hyper["gamma"] = gamma;
    hyper["mu"] = mu;
    hyper["epsilon"] = config.method == Method::pv_mincq ? nlohmann::json(epsilon) : nlohmann::json(nullptr);
    hyper["selected"] = config.select;
    if (config.method == Method::nn_mincq) hyper["k_nn"] = config.k_nn;
    report["hyperparameters"] = hyper;

    LabeledSample train;
    std::optional<TransferredSample> transferred;
    nlohmann::json transfer;
    switch (config.method) {
      case Method::pv_mincq: {
        const MatchingResult matching = max_matching(build_graph(data.source.points, data.target.points, epsilon));
        transfer = {{"pv", matching.pv_value},
                    {"unmatched_source", matching.unmatched_s},
                    {"unmatched_target", matching.unmatched_t}};
        transferred = pv_transfer(data.source, data.target.points, epsilon);
        break;
      }
      case Method::nn_mincq:
        transferred = nn_transfer(data.source, data.target.points, config.k_nn);
        break;
      case Method::mincq_no_adapt:
        break;
    }
    if (transferred) {
      transfer["kept"] = transferred->kept_indices.size();
      train = transferred->sample;
    } else {
      train = data.source;
    }
    report["transfer"] = transfer.is_null() ? nlohmann::json::object() : transfer;

    const MinCqModel model = train_mincq(train, gamma, mu);
    const BoundsReport test_report = make_report(model.vote, data.test);
    report["accuracy"] = 1.0 - test_report.bayes_risk;

    nlohmann::json bounds;
    bounds["test"] = to_json(test_report);
    if (transferred) {
      const LabeledSample kept = data.target.subset(transferred->kept_indices);
      bounds["train"] = to_json(make_report(model.vote, kept, &transferred->sample.labels, &data.source.points,
                                            &data.target.points));
    } else {
      bounds["train"] = to_json(make_report(model.vote, data.source, nullptr, &data.source.points,
                                            &data.target.points));
    }
    report["bounds"] = bounds;

    const Posterior& p = model.posterior;
    report["solver"] = {{"voters", model.vote.voters.size()},   {"iterations", p.iterations},
                        {"objective", p.objective},             {"kkt_residual", p.kkt_residual},
                        {"equality_residual", p.equality_residual}, {"converged", p.converged}};
    report["status"] = "ok";
  } catch (const empty_transfer_error& e) {
    report["status"] = "empty_transfer";
    report["error"] = e.what();
  } catch (const infeasible_error& e) {
    report["status"] = "infeasible";
    report["error"] = e.what();
  } catch (const selection_error& e) {
    report["status"] = "selection_failed";
    report["error"] = e.what();
  }
  return report;
}

std::vector<std::filesystem::path> run_sweep(const ExperimentConfig& config, const std::filesystem::path& dir) {
  if (config.target.csv) throw config_error("sweep needs a generated target domain");
  struct Task {
    Method method;
    double angle;
    std::uint64_t seed;
    std::filesystem::path path;
  };
  const auto runs_dir = dir / "runs";
  std::filesystem::create_directories(runs_dir);

  std::vector<Task> tasks;
  std::vector<ExperimentConfig> configs;
  for (Method method : config.sweep_methods)
    for (double angle : config.sweep_angles) {
      ConfigEntries entries = config.entries;
      entries["method"] = to_string(method);
      entries["target.angle"] = format_double(angle);
      entries.erase("seed");
      entries.erase("seeds");
      configs.push_back(make_config(entries));
      for (std::uint64_t seed : config.seeds) {
        const std::string name = to_string(method) + "_angle" + format_double(angle) + "_seed" +
                                 std::to_string(seed) + ".json";
        tasks.push_back({method, angle, seed, runs_dir / name});
      }
    }

  const std::size_t per_config = config.seeds.size();
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(tasks.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        ExperimentConfig run_config = configs[i / per_config];
        run_config.entries["seed"] = std::to_string(tasks[i].seed);
        run_config.seeds = {tasks[i].seed};
        const nlohmann::json report = run_experiment(run_config, tasks[i].seed);
        std::ofstream out(tasks[i].path);
        if (!out) throw std::runtime_error("cannot write " + tasks[i].path.string());
        out << report.dump(2) << '\n';
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n_threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, tasks.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();
  for (const auto& error : errors)
    if (error) std::rethrow_exception(error);

  std::vector<std::filesystem::path> paths;
  for (const auto& task : tasks) paths.push_back(task.path);
  return paths;
}

SweepTable aggregate_runs(const std::vector<nlohmann::json>& reports) {
  std::map<std::pair<std::string, double>, std::vector<double>> accuracies;
  SweepTable table;
  std::set<std::string> methods;
  std::set<double> angles;
  for (const auto& report : reports) {
    if (!report.contains("target_angle") || report["target_angle"].is_null())
      throw std::invalid_argument("run report without a target angle");
    const std::string method = report.at("method").get<std::string>();
    const double angle = report["target_angle"].get<double>();
    methods.insert(method);
    angles.insert(angle);
    auto& cell = table.cells[{method, angle}];
    ++cell.runs;
    if (report.value("status", "") == "ok")
      accuracies[{method, angle}].push_back(100.0 * report.at("accuracy").get<double>());
    else
      ++cell.failed;
  }
  for (auto& [key, cell] : table.cells) {
    const auto& values = accuracies[key];
    if (values.empty()) continue;
    double sum = 0.0;
    for (double v : values) sum += v;
    cell.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - cell.mean) * (v - cell.mean);
    cell.std = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  }
  table.methods.assign(methods.begin(), methods.end());
  table.angles.assign(angles.begin(), angles.end());
  return table;
}

SweepTable aggregate_run_files(const std::filesystem::path& runs_dir) {
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(runs_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  std::vector<nlohmann::json> reports;
  for (const auto& path : paths) {
    std::ifstream in(path);
    reports.push_back(nlohmann::json::parse(in));
  }
  return aggregate_runs(reports);
}

std::string format_4g(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", value);
  return buf;
}

void write_sweep_csv(const SweepTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "method";
  for (double angle : table.angles) out << ',' << format_double(angle) << "_mean," << format_double(angle) << "_std";
  out << ",failed\n";
  for (const auto& method : table.methods) {
    out << method;
    std::size_t failed = 0;
    for (double angle : table.angles) {
      const auto it = table.cells.find({method, angle});
      if (it == table.cells.end() || it->second.runs == it->second.failed) {
        out << ",,";
      } else {
        out << ',' << format_4g(it->second.mean) << ',' << format_4g(it->second.std);
      }
      if (it != table.cells.end()) failed += it->second.failed;
    }
    out << ',' << failed << '\n';
  }
}

}  // namespace pvmincq
