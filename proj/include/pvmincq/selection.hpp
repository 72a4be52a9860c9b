#pragma once

// Hyperparameter selection by k-fold validation on the source sample.
//
// For PV-MinCq each (gamma, mu, epsilon) cell scores
//   mean held-out source risk + PV(S, T, epsilon),
// where every fold trains MinCq on the target points labeled through the
// PV matching from the remaining source folds. The baselines score the mean
// held-out source risk alone over (gamma, mu).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvmincq/dataset.hpp"
#include "pvmincq/mincq.hpp"

namespace pvmincq {

enum class Method { pv_mincq, nn_mincq, mincq_no_adapt };

std::string to_string(Method method);
/// Accepts "pv-mincq", "nn-mincq" and "mincq-no-adapt".
Method parse_method(const std::string& name);

class selection_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HyperGrid {
  std::vector<double> gammas{0.1, 0.5, 1.0, 2.0, 5.0};
  std::vector<double> mus{1e-4, 1e-3, 1e-2, 1e-1};
  std::vector<double> epsilons{0.1, 0.25, 0.5, 1.0};
  std::size_t k_folds = 5;

  void validate() const;
};

struct CellRecord {
  double gamma = 0.0;
  double mu = 0.0;
  std::optional<double> epsilon;  // PV-MinCq only
  double source_risk = 0.0;       // mean held-out source risk
  std::optional<double> pv;       // PV-MinCq only
  double score = 0.0;
  bool skipped = false;
  std::string cause;  // why the cell was skipped
};

struct SelectionResult {
  double gamma = 0.0;
  double mu = 0.0;
  std::optional<double> epsilon;
  double score = 0.0;
  std::vector<CellRecord> table;  // gamma-major, then mu, then epsilon
};

/// Shuffled round-robin assignment of 0..n-1 to k folds.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

/// PV-MinCq selection. A cell is skipped when any fold's transfer is empty or
/// its QP infeasible. Ties in score go to the smaller epsilon, then mu, then
/// gamma. Throws selection_error when every cell is skipped.
SelectionResult select(const LabeledSample& source, const PointMatrix& target, const HyperGrid& grid,
                       std::uint64_t seed, const SolverOptions& options = {});

/// Selection for the NN-MinCq (`nn_k` neighbours) and no-adaptation
/// baselines over (gamma, mu); grid.epsilons is ignored.
SelectionResult select_baseline(const LabeledSample& source, const PointMatrix& target, const HyperGrid& grid,
                                Method method, std::size_t nn_k, std::uint64_t seed,
                                const SolverOptions& options = {});

/// CSV `gamma,mu,epsilon,source_risk,pv,score,skipped`; absent values are
/// left empty.
void write_selection_csv(const SelectionResult& result, const std::filesystem::path& path);

}  // namespace pvmincq
