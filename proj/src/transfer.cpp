#include "pvmincq/transfer.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "pvmincq/pv.hpp"

namespace pvmincq {

TransferredSample pv_transfer(const LabeledSample& source, const PointMatrix& target, double epsilon) {
  source.validate();
  const MatchingResult matching = max_matching(build_graph(source.points, target, epsilon));
  if (matching.pairs.empty())
    throw empty_transfer_error("epsilon too small for any match (epsilon = " + format_double(epsilon) + ")");

  std::vector<std::pair<std::size_t, std::size_t>> by_target;  // (t, s)
  by_target.reserve(matching.pairs.size());
  for (const auto& [s, t] : matching.pairs) by_target.emplace_back(t, s);
  std::sort(by_target.begin(), by_target.end());

  TransferredSample out;
  out.sample.points.resize(static_cast<Eigen::Index>(by_target.size()), target.cols());
  for (std::size_t r = 0; r < by_target.size(); ++r) {
    const auto [t, s] = by_target[r];
    out.sample.points.row(static_cast<Eigen::Index>(r)) = target.row(static_cast<Eigen::Index>(t));
    out.sample.labels.push_back(source.labels[s]);
    out.kept_indices.push_back(t);
    out.source_indices.push_back(s);
  }
  return out;
}

TransferredSample nn_transfer(const LabeledSample& source, const PointMatrix& target, std::size_t k) {
  source.validate();
  if (k == 0 || k % 2 == 0) throw std::invalid_argument("k must be odd and positive");
  if (k > source.size()) throw std::invalid_argument("k exceeds the source sample size");
  if (target.rows() == 0) throw empty_transfer_error("target sample is empty");
  if (target.cols() != source.points.cols()) throw std::invalid_argument("nn_transfer: dimension mismatch");

  TransferredSample out;
  out.sample.points = target;
  out.sample.labels.reserve(static_cast<std::size_t>(target.rows()));

  std::vector<std::size_t> order(source.size());
  std::vector<double> dist(source.size());
  for (Eigen::Index t = 0; t < target.rows(); ++t) {
    for (std::size_t s = 0; s < source.size(); ++s)
      dist[s] = (source.points.row(static_cast<Eigen::Index>(s)) - target.row(t)).squaredNorm();
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto closer = [&](std::size_t a, std::size_t b) { return dist[a] != dist[b] ? dist[a] < dist[b] : a < b; };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), closer);

    int vote = 0;
    for (std::size_t r = 0; r < k; ++r) vote += source.labels[order[r]];
    out.sample.labels.push_back(vote > 0 ? 1 : -1);  // k odd: never zero
    out.kept_indices.push_back(static_cast<std::size_t>(t));
    out.source_indices.push_back(order[0]);
  }
  return out;
}

void write_transfer_csv(const TransferredSample& transferred, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const auto& points = transferred.sample.points;
  for (Eigen::Index k = 0; k < points.cols(); ++k) out << 'x' << (k + 1) << ',';
  out << "label,source_index\n";
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index k = 0; k < points.cols(); ++k) out << format_double(points(i, k)) << ',';
    const auto r = static_cast<std::size_t>(i);
    out << transferred.sample.labels[r] << ',' << transferred.source_indices[r] << '\n';
  }
}

}  // namespace pvmincq
