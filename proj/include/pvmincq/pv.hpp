#pragma once

// Empirical Perturbed Variation between two point clouds: the fraction of
// points left unmatched by a maximum matching of the bipartite graph that
// joins source and target points within Euclidean distance epsilon.

#include <cstddef>
#include <utility>
#include <vector>

#include "pvmincq/dataset.hpp"

namespace pvmincq {

struct EpsilonGraph {
  std::size_t left_size = 0;   // |S|
  std::size_t right_size = 0;  // |T|
  double epsilon = 0.0;
  // adjacency[s] holds the target indices within epsilon of source s, nearest
  // first (ties by index).
  std::vector<std::vector<std::size_t>> adjacency;

  std::size_t edge_count() const;
  /// (s, t) pairs in adjacency order.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
};

struct MatchingResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (s, t), sorted by s
  std::size_t unmatched_s = 0;
  std::size_t unmatched_t = 0;
  double pv_value = 0.0;  // (unmatched_s/|S| + unmatched_t/|T|) / 2
};

/// Edge (s, t) iff ||x_s - x_t|| <= epsilon. Throws std::invalid_argument for
/// epsilon <= 0, empty samples or mismatched dimensions.
EpsilonGraph build_graph(const PointMatrix& source, const PointMatrix& target, double epsilon);

/// Maximum-cardinality matching by Hopcroft-Karp. Within a phase each source
/// vertex tries its neighbours nearest first, so among maximum matchings
/// short edges tend to be preferred; only the cardinality is canonical.
MatchingResult max_matching(const EpsilonGraph& graph);

double pv_estimate(const PointMatrix& source, const PointMatrix& target, double epsilon);

}  // namespace pvmincq
