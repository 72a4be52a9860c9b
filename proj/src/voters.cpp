#include "pvmincq/voters.hpp"

#include <cmath>
#include <stdexcept>

namespace pvmincq {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be positive");
}

}  // namespace

double gaussian_kernel(const PointRef& x, const PointRef& c, double gamma) {
  check_gamma(gamma);
  if (x.size() != c.size()) throw std::invalid_argument("gaussian_kernel: dimension mismatch");
  return std::exp(-gamma * (x - c).squaredNorm());
}

VoterSet build_voters(const PointMatrix& points, double gamma) {
  check_gamma(gamma);
  if (points.rows() == 0 || points.cols() == 0) throw std::invalid_argument("build_voters: no points");
  return VoterSet{points, gamma};
}

Eigen::MatrixXd vote_matrix(const VoterSet& voters, const PointMatrix& points) {
  check_gamma(voters.gamma);
  if (points.cols() != voters.centers.cols())
    throw std::invalid_argument("vote_matrix: dimension mismatch");
  Eigen::MatrixXd values(points.rows(), voters.centers.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = 0; j < voters.centers.rows(); ++j)
      values(i, j) = std::exp(-voters.gamma * (points.row(i) - voters.centers.row(j)).squaredNorm());
  return values;
}

Eigen::VectorXd voter_outputs(const VoterSet& voters, const PointRef& x) {
  check_gamma(voters.gamma);
  if (x.size() != voters.centers.cols()) throw std::invalid_argument("voter_outputs: dimension mismatch");
  Eigen::VectorXd out(voters.centers.rows());
  for (Eigen::Index j = 0; j < voters.centers.rows(); ++j)
    out(j) = std::exp(-voters.gamma * (x - voters.centers.row(j)).squaredNorm());
  return out;
}

}  // namespace pvmincq
