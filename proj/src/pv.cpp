#include "pvmincq/pv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace pvmincq {

std::size_t EpsilonGraph::edge_count() const {
  std::size_t count = 0;
  for (const auto& row : adjacency) count += row.size();
  return count;
}

std::vector<std::pair<std::size_t, std::size_t>> EpsilonGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(edge_count());
  for (std::size_t s = 0; s < adjacency.size(); ++s)
    for (std::size_t t : adjacency[s]) out.emplace_back(s, t);
  return out;
}

EpsilonGraph build_graph(const PointMatrix& source, const PointMatrix& target, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (source.rows() == 0 || target.rows() == 0) throw std::invalid_argument("build_graph: empty sample");
  if (source.cols() != target.cols()) throw std::invalid_argument("build_graph: dimension mismatch");

  EpsilonGraph graph;
  graph.left_size = static_cast<std::size_t>(source.rows());
  graph.right_size = static_cast<std::size_t>(target.rows());
  graph.epsilon = epsilon;
  graph.adjacency.resize(graph.left_size);

  std::vector<std::pair<double, std::size_t>> near;
  for (Eigen::Index s = 0; s < source.rows(); ++s) {
    near.clear();
    for (Eigen::Index t = 0; t < target.rows(); ++t) {
      const double d = (source.row(s) - target.row(t)).norm();
      if (d <= epsilon) near.emplace_back(d, static_cast<std::size_t>(t));
    }
    std::sort(near.begin(), near.end());
    auto& row = graph.adjacency[static_cast<std::size_t>(s)];
    row.reserve(near.size());
    for (const auto& [d, t] : near) row.push_back(t);
  }
  return graph;
}

namespace {

constexpr std::size_t kFree = std::numeric_limits<std::size_t>::max();

class HopcroftKarp {
 public:
  explicit HopcroftKarp(const EpsilonGraph& graph)
      : graph_(graph),
        match_left_(graph.left_size, kFree),
        match_right_(graph.right_size, kFree),
        dist_(graph.left_size),
        next_edge_(graph.left_size) {}

  void run() {
    while (bfs()) {
      std::fill(next_edge_.begin(), next_edge_.end(), 0);
      for (std::size_t s = 0; s < graph_.left_size; ++s)
        if (match_left_[s] == kFree) augment(s);
    }
  }

  const std::vector<std::size_t>& match_left() const { return match_left_; }

 private:
  // Layers free left vertices at distance 0 and reports whether some free
  // right vertex is reachable along an alternating path.
  bool bfs() {
    std::queue<std::size_t> queue;
    for (std::size_t s = 0; s < graph_.left_size; ++s) {
      if (match_left_[s] == kFree) {
        dist_[s] = 0;
        queue.push(s);
      } else {
        dist_[s] = kFree;
      }
    }
    bool found = false;
    while (!queue.empty()) {
      const std::size_t s = queue.front();
      queue.pop();
      for (std::size_t t : graph_.adjacency[s]) {
        const std::size_t mate = match_right_[t];
        if (mate == kFree) {
          found = true;
        } else if (dist_[mate] == kFree) {
          dist_[mate] = dist_[s] + 1;
          queue.push(mate);
        }
      }
    }
    return found;
  }

  // Iterative DFS along the BFS layers; avoids deep recursion on large graphs.
  bool augment(std::size_t root) {
    std::vector<std::size_t> path{root};
    while (!path.empty()) {
      const std::size_t s = path.back();
      const auto& adj = graph_.adjacency[s];
      bool advanced = false;
      while (next_edge_[s] < adj.size()) {
        const std::size_t t = adj[next_edge_[s]];
        const std::size_t mate = match_right_[t];
        if (mate == kFree) {
          // Flip the alternating path ending at t.
          std::size_t right = t;
          for (auto it = path.rbegin(); it != path.rend(); ++it) {
            const std::size_t left = *it;
            const std::size_t previous = match_left_[left];
            match_left_[left] = right;
            match_right_[right] = left;
            right = previous;
          }
          return true;
        }
        if (dist_[mate] == dist_[s] + 1) {
          path.push_back(mate);
          advanced = true;
          break;
        }
        ++next_edge_[s];
      }
      if (!advanced) {
        dist_[s] = kFree;  // dead end for the rest of this phase
        path.pop_back();
        if (!path.empty()) ++next_edge_[path.back()];
      }
    }
    return false;
  }

  const EpsilonGraph& graph_;
  std::vector<std::size_t> match_left_;
  std::vector<std::size_t> match_right_;
  std::vector<std::size_t> dist_;
  std::vector<std::size_t> next_edge_;
};

}  // namespace

MatchingResult max_matching(const EpsilonGraph& graph) {
  if (graph.adjacency.size() != graph.left_size) throw std::invalid_argument("max_matching: malformed graph");
  MatchingResult result;
  if (graph.left_size == 0 || graph.right_size == 0) throw std::invalid_argument("max_matching: empty side");

  HopcroftKarp solver(graph);
  solver.run();
  for (std::size_t s = 0; s < graph.left_size; ++s)
    if (solver.match_left()[s] != kFree) result.pairs.emplace_back(s, solver.match_left()[s]);

  result.unmatched_s = graph.left_size - result.pairs.size();
  result.unmatched_t = graph.right_size - result.pairs.size();
  result.pv_value = 0.5 * (static_cast<double>(result.unmatched_s) / static_cast<double>(graph.left_size) +
                           static_cast<double>(result.unmatched_t) / static_cast<double>(graph.right_size));
  return result;
}

double pv_estimate(const PointMatrix& source, const PointMatrix& target, double epsilon) {
  return max_matching(build_graph(source, target, epsilon)).pv_value;
}

}  // namespace pvmincq
