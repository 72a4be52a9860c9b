#include "pvmincq/selection.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

#include "pvmincq/bounds.hpp"
#include "pvmincq/pv.hpp"
#include "pvmincq/transfer.hpp"

namespace pvmincq {

std::string to_string(Method method) {
  switch (method) {
    case Method::pv_mincq: return "pv-mincq";
    case Method::nn_mincq: return "nn-mincq";
    case Method::mincq_no_adapt: return "mincq-no-adapt";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "pv-mincq") return Method::pv_mincq;
  if (name == "nn-mincq") return Method::nn_mincq;
  if (name == "mincq-no-adapt") return Method::mincq_no_adapt;
  throw std::invalid_argument("unknown method '" + name + "' (expected pv-mincq, nn-mincq or mincq-no-adapt)");
}

void HyperGrid::validate() const {
  auto check = [](const std::vector<double>& values, const char* name) {
    if (values.empty()) throw std::invalid_argument(std::string("grid: no ") + name);
    for (double v : values)
      if (!(v > 0.0)) throw std::invalid_argument(std::string("grid: ") + name + " must be positive");
  };
  check(gammas, "gammas");
  check(mus, "mus");
  check(epsilons, "epsilons");
  if (k_folds < 2) throw std::invalid_argument("grid: k_folds must be at least 2");
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || n < k) throw std::invalid_argument("make_folds: need 2 <= k <= n");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(order[i]);
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

namespace {

struct FoldSplit {
  LabeledSample train;
  LabeledSample held_out;
};

std::vector<FoldSplit> split_folds(const LabeledSample& source, std::size_t k, std::uint64_t seed) {
  const auto folds = make_folds(source.size(), k, seed);
  std::vector<FoldSplit> splits;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds.size(); ++g)
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    std::sort(train.begin(), train.end());
    splits.push_back({source.subset(train), source.subset(folds[f])});
  }
  return splits;
}

// Accumulates per-fold risks of the (gamma, mu) cells that share one
// training sample.
struct CellAccumulator {
  double risk_sum = 0.0;
  bool skipped = false;
  std::string cause;

  void skip(const std::string& why) {
    if (!skipped) cause = why;
    skipped = true;
  }
};

// Trains MinCq on `train` for every (gamma, mu) and adds the held-out risk
// to acc[gamma_index * |mus| + mu_index].
void evaluate_fold(const LabeledSample& train, const LabeledSample& held_out, const HyperGrid& grid,
                   const SolverOptions& options, std::vector<CellAccumulator>& acc) {
  for (std::size_t gi = 0; gi < grid.gammas.size(); ++gi) {
    const VoterSet voters = build_voters(train.points, grid.gammas[gi]);
    const Eigen::MatrixXd train_votes = vote_matrix(voters, train.points);
    const Eigen::MatrixXd held_votes = vote_matrix(voters, held_out.points);
    for (std::size_t mi = 0; mi < grid.mus.size(); ++mi) {
      auto& cell = acc[gi * grid.mus.size() + mi];
      if (cell.skipped) continue;
      try {
        const Posterior posterior = solve_qp(assemble_qp(train_votes, train.labels, grid.mus[mi]), options);
        const double h = static_cast<double>(voters.size());
        const Eigen::VectorXd coefficients = (2.0 * posterior.rho.array() - 1.0 / h).matrix();
        cell.risk_sum += from_scores::bayes_risk(held_votes * coefficients, held_out.labels);
      } catch (const infeasible_error& e) {
        cell.skip(e.what());
      }
    }
  }
}

bool better(const CellRecord& a, const CellRecord& b) {
  if (a.score != b.score) return a.score < b.score;
  return std::make_tuple(a.epsilon.value_or(0.0), a.mu, a.gamma) <
         std::make_tuple(b.epsilon.value_or(0.0), b.mu, b.gamma);
}

SelectionResult finish_selection(std::vector<CellRecord> table) {
  const CellRecord* best = nullptr;
  for (const auto& cell : table)
    if (!cell.skipped && (!best || better(cell, *best))) best = &cell;
  if (!best) {
    std::ostringstream msg;
    msg << "hyperparameter selection failed: every cell was skipped";
    for (const auto& cell : table) {
      msg << "\n  gamma=" << cell.gamma << " mu=" << cell.mu;
      if (cell.epsilon) msg << " epsilon=" << *cell.epsilon;
      msg << ": " << cell.cause;
    }
    throw selection_error(msg.str());
  }
  SelectionResult result;
  result.gamma = best->gamma;
  result.mu = best->mu;
  result.epsilon = best->epsilon;
  result.score = best->score;
  result.table = std::move(table);
  return result;
}

}  // namespace

SelectionResult select(const LabeledSample& source, const PointMatrix& target, const HyperGrid& grid,
                       std::uint64_t seed, const SolverOptions& options) {
  grid.validate();
  source.validate();
  if (source.size() < grid.k_folds) throw std::invalid_argument("select: fewer source points than folds");

  const auto splits = split_folds(source, grid.k_folds, seed);
  const std::size_t n_gm = grid.gammas.size() * grid.mus.size();
  const double folds = static_cast<double>(grid.k_folds);

  // results[ei][gi * |mus| + mi]
  std::vector<std::vector<CellRecord>> by_epsilon(grid.epsilons.size());
  for (std::size_t ei = 0; ei < grid.epsilons.size(); ++ei) {
    const double epsilon = grid.epsilons[ei];
    const double pv = pv_estimate(source.points, target, epsilon);
    std::vector<CellAccumulator> acc(n_gm);
    for (const auto& split : splits) {
      try {
        const TransferredSample transferred = pv_transfer(split.train, target, epsilon);
        evaluate_fold(transferred.sample, split.held_out, grid, options, acc);
      } catch (const empty_transfer_error& e) {
        for (auto& cell : acc) cell.skip(e.what());
        break;
      }
    }
    auto& records = by_epsilon[ei];
    for (std::size_t gi = 0; gi < grid.gammas.size(); ++gi)
      for (std::size_t mi = 0; mi < grid.mus.size(); ++mi) {
        const auto& cell = acc[gi * grid.mus.size() + mi];
        CellRecord record;
        record.gamma = grid.gammas[gi];
        record.mu = grid.mus[mi];
        record.epsilon = epsilon;
        record.pv = pv;
        record.skipped = cell.skipped;
        record.cause = cell.cause;
        if (!cell.skipped) {
          record.source_risk = cell.risk_sum / folds;
          record.score = record.source_risk + pv;
        }
        records.push_back(std::move(record));
      }
  }

  std::vector<CellRecord> table;
  for (std::size_t gm = 0; gm < n_gm; ++gm)
    for (std::size_t ei = 0; ei < grid.epsilons.size(); ++ei) table.push_back(by_epsilon[ei][gm]);
  return finish_selection(std::move(table));
}

SelectionResult select_baseline(const LabeledSample& source, const PointMatrix& target, const HyperGrid& grid,
                                Method method, std::size_t nn_k, std::uint64_t seed,
                                const SolverOptions& options) {
  if (method == Method::pv_mincq) throw std::invalid_argument("select_baseline: use select() for pv-mincq");
  grid.validate();
  source.validate();
  if (source.size() < grid.k_folds) throw std::invalid_argument("select: fewer source points than folds");

  const auto splits = split_folds(source, grid.k_folds, seed);
  std::vector<CellAccumulator> acc(grid.gammas.size() * grid.mus.size());
  for (const auto& split : splits) {
    if (method == Method::nn_mincq)
      evaluate_fold(nn_transfer(split.train, target, nn_k).sample, split.held_out, grid, options, acc);
    else
      evaluate_fold(split.train, split.held_out, grid, options, acc);
  }

  std::vector<CellRecord> table;
  for (std::size_t gi = 0; gi < grid.gammas.size(); ++gi)
    for (std::size_t mi = 0; mi < grid.mus.size(); ++mi) {
      const auto& cell = acc[gi * grid.mus.size() + mi];
      CellRecord record;
      record.gamma = grid.gammas[gi];
      record.mu = grid.mus[mi];
      record.skipped = cell.skipped;
      record.cause = cell.cause;
      if (!cell.skipped) {
        record.source_risk = cell.risk_sum / static_cast<double>(grid.k_folds);
        record.score = record.source_risk;
      }
      table.push_back(std::move(record));
    }
  return finish_selection(std::move(table));
}

void write_selection_csv(const SelectionResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  out << "gamma,mu,epsilon,source_risk,pv,score,skipped\n";
  for (const auto& cell : result.table) {
    out << format_double(cell.gamma) << ',' << format_double(cell.mu) << ',' << opt(cell.epsilon) << ',';
    if (cell.skipped)
      out << ',' << opt(cell.pv) << ",,1\n";
    else
      out << format_double(cell.source_risk) << ',' << opt(cell.pv) << ',' << format_double(cell.score) << ",0\n";
  }
}

}  // namespace pvmincq
