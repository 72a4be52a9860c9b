#pragma once

// Gaussian-kernel voters h_j(x) = exp(-gamma * ||x - c_j||^2).

#include <cstddef>

#include "pvmincq/dataset.hpp"

namespace pvmincq {

/// exp(-gamma * ||x - c||^2). Throws std::invalid_argument on a dimension
/// mismatch or gamma <= 0.
double gaussian_kernel(const PointRef& x, const PointRef& c, double gamma);

struct VoterSet {
  PointMatrix centers;
  double gamma = 1.0;

  std::size_t size() const { return static_cast<std::size_t>(centers.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(centers.cols()); }
};

/// One voter per row of `points`, duplicates included.
VoterSet build_voters(const PointMatrix& points, double gamma);

/// n x |H| matrix whose entry (i, j) is h_j(x_i).
Eigen::MatrixXd vote_matrix(const VoterSet& voters, const PointMatrix& points);

/// Voter outputs for a single point.
Eigen::VectorXd voter_outputs(const VoterSet& voters, const PointRef& x);

}  // namespace pvmincq
