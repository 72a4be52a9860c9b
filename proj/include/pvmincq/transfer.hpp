#pragma once

// Auto-labeling of the target sample from source labels.

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "pvmincq/dataset.hpp"

namespace pvmincq {

/// Raised when a transfer keeps no target point.
class empty_transfer_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TransferredSample {
  LabeledSample sample;                    // kept target points, transferred labels
  std::vector<std::size_t> kept_indices;   // row of each kept point in T
  // Source row that donated each label; for k-NN transfer, the nearest one.
  std::vector<std::size_t> source_indices;
};

/// Keeps the target points covered by the maximum matching of the
/// epsilon-graph and gives each one the label of its matched source point.
/// Points come out in increasing target index.
TransferredSample pv_transfer(const LabeledSample& source, const PointMatrix& target, double epsilon);

/// Labels every target point by majority vote of its k nearest source points
/// (Euclidean; ties in distance go to the lower source index). k must be odd.
TransferredSample nn_transfer(const LabeledSample& source, const PointMatrix& target, std::size_t k);

/// CSV `x1,...,xd,label,source_index` with a header line.
void write_transfer_csv(const TransferredSample& transferred, const std::filesystem::path& path);

}  // namespace pvmincq
