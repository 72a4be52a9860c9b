#pragma once

// MinCq: learn a majority vote over self-complemented voters by minimizing
// the vote's second moment at a fixed first moment (margin) mu.
//
//   minimize    rho' M rho - A' rho
//   subject to  m' rho = mu/2 + sum_j m_j / (2|H|)
//               0 <= rho_j <= 1/|H|
//
// and output the vote sign(sum_j (2 rho_j - 1/|H|) h_j(x)).

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "pvmincq/dataset.hpp"
#include "pvmincq/voters.hpp"

namespace pvmincq {

/// Thrown when no posterior in the box reaches the requested margin.
class infeasible_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QpProblem {
  Eigen::MatrixXd M;       // (1/|S|) V'V
  Eigen::VectorXd m_vec;   // (1/|S|) V'y
  Eigen::VectorXd A_vec;   // row sums of M divided by |H|
  double mu = 0.0;
  double box_upper = 0.0;  // 1/|H|
  double rhs = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(m_vec.size()); }
};

/// `votes` is the n x |H| vote matrix of the training sample.
QpProblem assemble_qp(const Eigen::MatrixXd& votes, const std::vector<int>& labels, double mu);
QpProblem assemble_qp(const LabeledSample& sample, const VoterSet& voters, double mu);

enum class SolverMethod {
  interior_point,      // primal-dual, with a projected-gradient fallback
  projected_gradient,  // accelerated, monotone in the objective
};

struct SolverOptions {
  SolverMethod method = SolverMethod::interior_point;
  double tolerance = 1e-8;  // on kkt_residual
  std::size_t max_iterations = 50000;  // projected-gradient iterations
  bool record_trace = false;
};

struct Posterior {
  Eigen::VectorXd rho;
  double objective = 0.0;
  double kkt_residual = 0.0;
  double equality_residual = 0.0;  // |m' rho - rhs|
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // objective after every iteration (when recorded)
};

double qp_objective(const QpProblem& problem, const Eigen::VectorXd& rho);

/// Range of m' rho over the box [0, box_upper]^|H|.
std::pair<double, double> margin_range(const QpProblem& problem);

/// Euclidean projection of z onto {0 <= x <= upper, m' x = rhs}. The
/// multiplier of the hyperplane is found by bisection over the sorted
/// breakpoints of the piecewise-linear map lambda -> m' clip(z + lambda m),
/// then solved exactly on the bracketing segment. rhs is clamped into the
/// reachable range.
Eigen::VectorXd project_box_hyperplane(const Eigen::VectorXd& z, const Eigen::VectorXd& m,
                                       double upper, double rhs);

/// Infinity norm of rho - P(rho - grad f(rho)); zero exactly at KKT points.
double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& rho);

/// Solves the MinCq program to options.tolerance on kkt_residual. The
/// interior-point method needs a feasible set with nonempty relative
/// interior; when rhs sits at an end of margin_range(), or the interior-point
/// iteration stalls, the projected-gradient method takes over. That method
/// uses step 1/L, L = 2 lambda_max(M) bounded from above, and restarts its
/// momentum on any objective increase. `warm_start` seeds the
/// projected-gradient method only. Throws infeasible_error when rhs is outside
/// margin_range().
Posterior solve_qp(const QpProblem& problem, const SolverOptions& options = {},
                   const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

/// sign(score) with sign(0) = +1.
inline int sign_label(double score) { return score >= 0.0 ? 1 : -1; }

struct MajorityVote {
  Eigen::VectorXd coefficients;  // 2 rho_j - 1/|H|
  VoterSet voters;

  double score(const PointRef& x) const;
  int predict(const PointRef& x) const { return sign_label(score(x)); }
  Eigen::VectorXd scores(const PointMatrix& points) const;
  std::vector<int> predict_all(const PointMatrix& points) const;
};

MajorityVote make_majority_vote(const Posterior& posterior, VoterSet voters);

struct MinCqModel {
  MajorityVote vote;
  Posterior posterior;
};

/// Voters centered on the training points, QP assembled and solved.
MinCqModel train_mincq(const LabeledSample& sample, double gamma, double mu,
                       const SolverOptions& options = {});

/// (M, m, A, rho) and solver statistics, for debugging dumps.
nlohmann::json qp_diagnostics(const QpProblem& problem, const Posterior& posterior);

}  // namespace pvmincq
