#pragma once

// Point clouds, the rotating two-moons generator and CSV I/O.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pvmincq {

/// One point per row; rows are contiguous so a row can be viewed as a vector.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PointRef = Eigen::Ref<const Eigen::RowVectorXd>;

class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Points with labels in {-1,+1}.
struct LabeledSample {
  PointMatrix points;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }

  /// Throws std::invalid_argument when the sample breaks its invariants.
  void validate() const;

  /// Rows `indices` of this sample, in the given order.
  LabeledSample subset(const std::vector<std::size_t>& indices) const;
};

struct UnlabeledSample {
  PointMatrix points;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points.cols()); }
};

struct MoonsParams {
  std::size_t n_per_class = 150;
  double noise_std = 0.1;
  double rotation_deg = 0.0;
  std::uint64_t seed = 0;
};

/// Fixed point of every rotation applied by generate_moons: the centroid of
/// the noiseless two-moons shape.
Eigen::RowVector2d moons_rotation_center();

/// Two interleaved half circles in R^2. Class +1 lies on the upper unit
/// semicircle around the origin, class -1 on the lower unit semicircle around
/// (1, 0.5). Angles along each arc are uniform, Gaussian noise is added, and
/// the cloud is rotated anticlockwise by `rotation_deg` about
/// moons_rotation_center(). The first n_per_class rows are class +1.
LabeledSample generate_moons(const MoonsParams& params);

// CSV rows are `x1,...,xd[,label]` with an optional header line.
LabeledSample read_labeled_csv(const std::filesystem::path& path, bool has_header = false);

/// With `drop_last_column` the final column (a label) is parsed as a number
/// and discarded.
UnlabeledSample read_unlabeled_csv(const std::filesystem::path& path, bool has_header = false,
                                   bool drop_last_column = false);

void write_csv(const LabeledSample& sample, const std::filesystem::path& path,
               bool with_header = false);
void write_csv(const UnlabeledSample& sample, const std::filesystem::path& path,
               bool with_header = false);

/// Formats a double so that reading it back gives the same value.
std::string format_double(double value);

}  // namespace pvmincq
