// Acceptance checks. Prints one PASS/FAIL line per criterion; with an
// argument N runs criterion N alone. Exit status is nonzero if any check
// fails.

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "oracles.hpp"
#include "pvmincq/bounds.hpp"
#include "pvmincq/experiment.hpp"
#include "pvmincq/mincq.hpp"
#include "pvmincq/pv.hpp"

using namespace pvmincq;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// Hopcroft-Karp against exhaustive enumeration, 200 graphs, |S|,|T| <= 8.
Outcome matching_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> size(1, 8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t ns = size(rng), nt = size(rng);
    const double density = unit(rng);
    std::vector<std::vector<bool>> adj(ns, std::vector<bool>(nt));
    EpsilonGraph g{ns, nt, 1.0, std::vector<std::vector<std::size_t>>(ns)};
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t t = 0; t < nt; ++t)
        if ((adj[s][t] = unit(rng) < density)) g.adjacency[s].push_back(t);
    mismatches += max_matching(g).pairs.size() != oracle::brute_force_matching(adj);
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && elapsed < 5.0, fmt("200 graphs, %d mismatches, %.2f s (limit 5 s)", mismatches, elapsed)};
}

// PV monotone in epsilon, zero on identical samples, one below all distances.
Outcome pv_properties() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  for (int pair = 0; pair < 50; ++pair) {
    const auto s = generate_moons({.n_per_class = 5 + rng() % 40, .noise_std = 0.1, .rotation_deg = 0, .seed = rng()});
    const auto t = generate_moons(
        {.n_per_class = 5 + rng() % 40, .noise_std = 0.1, .rotation_deg = 90 * unit(rng), .seed = rng()});
    double previous = 1.0;
    for (int k = 0; k < 10; ++k) {
      const double eps = 0.02 * std::pow(1.6, k);
      const double value = pv_estimate(s.points, t.points, eps);
      violations += value > previous;
      previous = value;
    }
    violations += pv_estimate(s.points, s.points, 0.01 + unit(rng)) != 0.0;
    double min_distance = 1e300;
    for (Eigen::Index i = 0; i < s.points.rows(); ++i)
      for (Eigen::Index j = 0; j < t.points.rows(); ++j)
        min_distance = std::min(min_distance, oracle::distance(s.points, i, t.points, j));
    violations += pv_estimate(s.points, t.points, 0.5 * min_distance) != 1.0;
  }
  const double elapsed = seconds_since(start);
  return {violations == 0 && elapsed < 5.0,
          fmt("50 pairs x 10 radii, %d violations, %.2f s (limit 5 s)", violations, elapsed)};
}

// Solver against a grid oracle on 100 instances with |H| <= 3.
Outcome qp_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(3);
  int failures = 0;
  double worst_gap = -1e300, worst_eq = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index h = 1 + trial % 3;
    const auto p = oracle::random_qp(rng, h);
    const auto post = solve_qp(p);
    const double grid = oracle::grid_search_qp(p, h == 2 ? 10000 : 300);
    const double gap = post.objective - grid;
    const double eq = std::abs(p.m_vec.dot(post.rho) - p.rhs);
    const bool box = post.rho.minCoeff() >= 0.0 && post.rho.maxCoeff() <= p.box_upper;
    worst_gap = std::max(worst_gap, gap);
    worst_eq = std::max(worst_eq, eq);
    failures += !(gap <= 1e-4 && eq <= 1e-8 && box);
  }
  const double elapsed = seconds_since(start);
  return {failures == 0 && elapsed < 30.0,
          fmt("100 instances, %d failures, max(solver - grid) = %.3g (limit 1e-4), max equality residual = %.3g "
              "(limit 1e-8), %.2f s (limit 30 s)",
              failures, worst_gap, worst_eq, elapsed)};
}

// Trained vote's first moment equals mu.
Outcome first_moment_is_mu() {
  std::mt19937_64 rng(4);
  const std::array<double, 5> gammas{0.1, 0.5, 1, 2, 5};
  const std::array<double, 4> mus{1e-4, 1e-3, 1e-2, 1e-1};
  int failures = 0, done = 0;
  double worst = 0.0;
  while (done < 50) {
    const auto s = generate_moons(
        {.n_per_class = 10 + rng() % 60, .noise_std = 0.1, .rotation_deg = double(rng() % 90), .seed = rng()});
    const double gamma = gammas[rng() % gammas.size()];
    const double mu = mus[rng() % mus.size()];
    MinCqModel model;
    try {
      model = train_mincq(s, gamma, mu);
    } catch (const infeasible_error&) {
      continue;
    }
    const double err = std::abs(first_moment(model.vote, s) - mu);
    worst = std::max(worst, err);
    failures += !(err <= 1e-6);
    ++done;
  }
  return {failures == 0, fmt("50 instances, max |first moment - mu| = %.3g (limit 1e-6)", worst)};
}

// bayes <= 2 gibbs, bayes <= c-bound when defined, second >= first^2.
Outcome risk_relations() {
  std::mt19937_64 rng(5);
  int violations = 0, with_bound = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto [vote, s] = oracle::random_vote(rng);
    const auto r = make_report(vote, s);
    violations += !(r.bayes_risk <= 2 * r.gibbs_risk + 1e-12);
    violations += !(r.second_moment >= r.first_moment * r.first_moment - 1e-12);
    if (r.first_moment > 0) {
      ++with_bound;
      violations += !(r.c_bound && r.bayes_risk <= *r.c_bound + 1e-12);
    }
  }
  return {violations == 0, fmt("200 instances (%d with positive margin), %d violations", with_bound, violations)};
}

// With the true labels the label-transfer bound collapses to the c-bound.
Outcome da_bound_collapses() {
  std::mt19937_64 rng(6);
  int failures = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = generate_moons(
        {.n_per_class = 10 + rng() % 40, .noise_std = 0.15, .rotation_deg = double(rng() % 360), .seed = rng()});
    const auto model = train_mincq(s, 1.0, 0.01);
    const auto plain = c_bound(model.vote, s);
    const auto da = da_c_bound(model.vote, s, s.labels);
    if (!plain || !da) {
      ++failures;
      continue;
    }
    worst = std::max(worst, std::abs(*plain - *da));
    failures += !(std::abs(*plain - *da) <= 1e-12);
  }
  return {failures == 0, fmt("50 instances, %d failures, max difference %.3g (limit 1e-12)", failures, worst)};
}

// accuracy trends on rotated moons.
Outcome table_trends() {
  const auto start = Clock::now();
  const auto dir = std::filesystem::temp_directory_path() / "pvmincq_acceptance_sweep";
  std::filesystem::remove_all(dir);
  const auto config = make_config({{"seeds", "0,1,2,3,4,5,6,7,8,9"},
                                   {"sweep.angles", "20,30,40,50,60"},
                                   {"sweep.methods", "mincq-no-adapt,nn-mincq,pv-mincq"},
                                   {"source.n_per_class", "150"},
                                   {"source.noise", "0.1"},
                                   {"target.n_per_class", "150"},
                                   {"target.noise", "0.1"}});
  run_sweep(config, dir);
  const auto table = aggregate_run_files(dir / "runs");
  write_sweep_csv(table, dir / "table.csv");
  const double elapsed = seconds_since(start);

  auto mean = [&](const std::string& method, double angle) { return table.cells.at({method, angle}).mean; };
  std::ifstream in(dir / "table.csv");
  std::cout << in.rdbuf();
  std::size_t failed_runs = 0;
  for (const auto& [key, cell] : table.cells) failed_runs += cell.failed;

  const bool a = mean("pv-mincq", 20) >= 90 && mean("pv-mincq", 30) >= 90;
  bool b = true;
  double pv_avg = 0, nn_avg = 0;
  for (double angle : {20.0, 30.0, 40.0, 50.0}) {
    b = b && mean("pv-mincq", angle) >= mean("nn-mincq", angle) - 2;
    pv_avg += mean("pv-mincq", angle) / 4;
    nn_avg += mean("nn-mincq", angle) / 4;
  }
  b = b && pv_avg > nn_avg;
  double pv_far = 0, plain_far = 0;
  for (double angle : {40.0, 50.0, 60.0}) {
    pv_far += mean("pv-mincq", angle) / 3;
    plain_far += mean("mincq-no-adapt", angle) / 3;
  }
  const bool c = pv_far >= plain_far + 5;
  const bool fast = elapsed < 900;
  return {a && b && c && fast,
          fmt("(a) %s: pv-mincq %.2f%% at 20, %.2f%% at 30 (need >= 90); "
              "(b) %s: pv-mincq avg %.2f vs nn-mincq avg %.2f over 20..50 (need >= nn - 2 at each angle and greater on "
              "average); (c) %s: pv-mincq %.2f vs no-adapt %.2f over 40..60 (need +5); %zu failed runs; %.0f s "
              "(limit 900 s)",
              a ? "ok" : "FAIL", mean("pv-mincq", 20), mean("pv-mincq", 30), b ? "ok" : "FAIL", pv_avg, nn_avg,
              c ? "ok" : "FAIL", pv_far, plain_far, failed_runs, elapsed)};
}

// `run` twice with the same configuration and seed: byte-identical JSON.
Outcome run_is_deterministic() {
  const auto dir = std::filesystem::temp_directory_path() / "pvmincq_acceptance_run";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "run.conf") << "method = pv-mincq\ntarget.angle = 30\n";
  auto run = [&](const std::string& out) {
    const std::string cmd = "'" PVMINCQ_CLI "' run --config '" + (dir / "run.conf").string() + "' --seed 7 --out '" +
                            (dir / out).string() + "'";
    const int raw = std::system(cmd.c_str());
    std::ifstream in(dir / out, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return std::make_pair(WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, ss.str());
  };
  const auto first = run("first.json");
  const auto second = run("second.json");
  const bool same = first.second == second.second && !first.second.empty();
  return {same && first.first == 0 && second.first == 0,
          fmt("exit codes %d/%d, %zu bytes, %s", first.first, second.first, first.second.size(),
              same ? "identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::array<std::pair<const char*, std::function<Outcome()>>, 8> criteria{{
      {"matching cardinality vs exhaustive enumeration", matching_oracle},
      {"PV monotonicity and extreme values", pv_properties},
      {"QP solver vs grid oracle", qp_oracle},
      {"MinCq first moment equals mu", first_moment_is_mu},
      {"Bayes/Gibbs/C-bound relations", risk_relations},
      {"label-transfer C-bound with true labels", da_bound_collapses},
      {"accuracy trends on rotated moons", table_trends},
      {"run determinism", run_is_deterministic},
  }};
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  if (only < 0 || only > 8) {
    std::cerr << "usage: acceptance [1-8]\n";
    return 2;
  }
  bool all = true;
  for (int i = 1; i <= 8; ++i) {
    if (only && i != only) continue;
    Outcome outcome;
    try {
      outcome = criteria[i - 1].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << i << " (" << criteria[i - 1].first << "): " << (outcome.pass ? "PASS" : "FAIL")
              << "; " << outcome.detail << std::endl;
    all = all && outcome.pass;
  }
  return all ? 0 : 1;
}
