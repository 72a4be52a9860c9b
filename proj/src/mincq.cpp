#include "pvmincq/mincq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pvmincq {

QpProblem assemble_qp(const Eigen::MatrixXd& votes, const std::vector<int>& labels, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  if (votes.rows() == 0 || votes.cols() == 0) throw std::invalid_argument("assemble_qp: empty vote matrix");
  if (static_cast<std::size_t>(votes.rows()) != labels.size())
    throw std::invalid_argument("assemble_qp: vote matrix rows and labels differ");

  const double n = static_cast<double>(votes.rows());
  const double h = static_cast<double>(votes.cols());
  Eigen::VectorXd y(votes.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label != 1 && label != -1) throw std::invalid_argument("label must be -1 or +1");
    y(i) = label;
  }

  QpProblem p;
  // rankUpdate fills one triangle; mirroring it keeps M exactly symmetric.
  p.M = Eigen::MatrixXd::Zero(votes.cols(), votes.cols());
  p.M.selfadjointView<Eigen::Lower>().rankUpdate(votes.transpose(), 1.0 / n);
  p.M = p.M.selfadjointView<Eigen::Lower>();
  p.m_vec = votes.transpose() * y / n;
  p.A_vec = p.M.rowwise().sum() / h;
  p.mu = mu;
  p.box_upper = 1.0 / h;
  p.rhs = mu / 2.0 + p.m_vec.sum() / (2.0 * h);
  return p;
}

QpProblem assemble_qp(const LabeledSample& sample, const VoterSet& voters, double mu) {
  sample.validate();
  return assemble_qp(vote_matrix(voters, sample.points), sample.labels, mu);
}

double qp_objective(const QpProblem& problem, const Eigen::VectorXd& rho) {
  return rho.dot(problem.M * rho) - problem.A_vec.dot(rho);
}

std::pair<double, double> margin_range(const QpProblem& problem) {
  double lo = 0.0, hi = 0.0;
  for (Eigen::Index j = 0; j < problem.m_vec.size(); ++j) {
    const double v = problem.m_vec(j) * problem.box_upper;
    (v < 0.0 ? lo : hi) += v;
  }
  return {lo, hi};
}

Eigen::VectorXd project_box_hyperplane(const Eigen::VectorXd& z, const Eigen::VectorXd& m, double upper,
                                       double rhs) {
  const Eigen::Index n = z.size();
  auto clipped = [&](double lambda) {
    Eigen::VectorXd x(n);
    for (Eigen::Index j = 0; j < n; ++j) x(j) = std::clamp(z(j) + lambda * m(j), 0.0, upper);
    return x;
  };
  auto margin = [&](double lambda) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) s += m(j) * std::clamp(z(j) + lambda * m(j), 0.0, upper);
    return s;
  };

  std::vector<double> breaks;
  breaks.reserve(static_cast<std::size_t>(2 * n));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (m(j) == 0.0) continue;
    breaks.push_back(-z(j) / m(j));
    breaks.push_back((upper - z(j)) / m(j));
  }
  if (breaks.empty()) return clipped(0.0);
  std::sort(breaks.begin(), breaks.end());

  std::size_t lo = 0, hi = breaks.size() - 1;
  double g_lo = margin(breaks[lo]);
  double g_hi = margin(breaks[hi]);
  if (rhs <= g_lo) return clipped(breaks[lo]);
  if (rhs >= g_hi) return clipped(breaks[hi]);
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const double g = margin(breaks[mid]);
    if (g <= rhs) {
      lo = mid;
      g_lo = g;
    } else {
      hi = mid;
      g_hi = g;
    }
  }
  // No breakpoint strictly inside (breaks[lo], breaks[hi]): the map is linear there.
  double lambda = breaks[lo];
  if (g_hi > g_lo) lambda += (rhs - g_lo) * (breaks[hi] - breaks[lo]) / (g_hi - g_lo);
  return clipped(lambda);
}

namespace {

double natural_residual(const QpProblem& p, const Eigen::VectorXd& rho, const Eigen::VectorXd& grad) {
  const Eigen::VectorXd step = project_box_hyperplane(rho - grad, p.m_vec, p.box_upper, p.rhs);
  return (rho - step).lpNorm<Eigen::Infinity>();
}

// Rigorous upper bound on 2 * lambda_max(M): the smallest of trace, maximum
// absolute row sum and, for entrywise nonnegative M, the Collatz-Wielandt
// bound max_i (Mv)_i / v_i at a power-iteration vector v.
double lipschitz_bound(const Eigen::MatrixXd& M) {
  double bound = std::min(M.trace(), M.cwiseAbs().rowwise().sum().maxCoeff());
  if (M.minCoeff() >= 0.0 && M.rows() > 0) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(M.rows());
    for (int it = 0; it < 50; ++it) {
      Eigen::VectorXd w = M * v;
      const double norm = w.norm();
      if (!(norm > 0.0)) break;
      v = w / norm;
    }
    if (v.minCoeff() > 0.0) {
      const Eigen::VectorXd w = M * v;
      bound = std::min(bound, (w.array() / v.array()).maxCoeff());
    }
  }
  return bound > 0.0 ? 2.0 * bound : 1.0;
}

}  // namespace

double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& rho) {
  const Eigen::VectorXd grad = 2.0 * (problem.M * rho) - problem.A_vec;
  return natural_residual(problem, rho, grad);
}

namespace {

void check_feasible(const QpProblem& p) {
  const Eigen::Index h = p.m_vec.size();
  if (h == 0 || p.M.rows() != h || p.M.cols() != h || p.A_vec.size() != h)
    throw std::invalid_argument("solve_qp: inconsistent problem dimensions");
  const auto [lo, hi] = margin_range(p);
  const double slack = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  if (p.rhs < lo - slack || p.rhs > hi + slack) {
    std::ostringstream msg;
    msg << "MinCq problem infeasible: the margin constraint needs m'rho = " << p.rhs
        << " but the box only reaches [" << lo << ", " << hi << "]; the desired margin mu = " << p.mu
        << " is likely too large (at most " << 2.0 * hi - p.m_vec.sum() / static_cast<double>(h)
        << " is reachable)";
    throw infeasible_error(msg.str());
  }
}

// The feasible set has no relative interior when rhs sits at an end of the
// reachable range; only the first-order method handles that face.
bool degenerate_margin(const QpProblem& p) {
  const auto [lo, hi] = margin_range(p);
  const double slack = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  return p.rhs <= lo + slack || p.rhs >= hi - slack;
}

void finish(const QpProblem& p, const SolverOptions& options, Posterior& out) {
  out.objective = qp_objective(p, out.rho);
  out.kkt_residual = kkt_residual(p, out.rho);
  out.equality_residual = std::abs(p.m_vec.dot(out.rho) - p.rhs);
  out.converged = out.kkt_residual <= options.tolerance;
}

// Accelerated projected gradient, step 1/L, restarted whenever the momentum
// step would increase the objective. Accepted objectives never increase.
void projected_gradient(const QpProblem& p, const SolverOptions& options, Eigen::VectorXd x,
                        Posterior& out) {
  const double step = 1.0 / lipschitz_bound(p.M);
  auto project = [&](const Eigen::VectorXd& z) { return project_box_hyperplane(z, p.m_vec, p.box_upper, p.rhs); };

  x = project(x);
  Eigen::VectorXd Mx = p.M * x;
  double fx = x.dot(Mx) - p.A_vec.dot(x);
  Eigen::VectorXd y = x, My = Mx;
  double t = 1.0;
  double residual = natural_residual(p, x, 2.0 * Mx - p.A_vec);
  std::size_t it = 0;
  while (residual > options.tolerance && it < options.max_iterations) {
    ++it;
    const Eigen::VectorXd grad_x = 2.0 * Mx - p.A_vec;
    Eigen::VectorXd xn = project(y - step * (2.0 * My - p.A_vec));
    Eigen::VectorXd Mxn = p.M * xn;
    double fn = xn.dot(Mxn) - p.A_vec.dot(xn);
    if (fn > fx) {
      t = 1.0;
      xn = project(x - step * grad_x);
      Mxn = p.M * xn;
      fn = xn.dot(Mxn) - p.A_vec.dot(xn);
      if (fn > fx) break;  // rounding floor
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / tn;
    y = xn + beta * (xn - x);
    My = Mxn + beta * (Mxn - Mx);  // M is linear, no extra product needed
    x = std::move(xn);
    Mx = std::move(Mxn);
    fx = fn;
    t = tn;
    if (options.record_trace) out.objective_trace.push_back(fx);
    residual = natural_residual(p, x, 2.0 * Mx - p.A_vec);
  }
  out.rho = std::move(x);
  out.iterations += it;
}

// Mehrotra predictor-corrector on
//   min 1/2 x'Qx + q'x,  a'x = b,  0 <= x <= u,   Q = 2M, q = -A.
// Each Newton system (Q + D) dx - a dy = r is reduced with one Cholesky
// factorization and the bordered row eliminated by a second solve.
// Returns false if the iteration broke down.
bool interior_point(const QpProblem& p, const SolverOptions& options, Posterior& out) {
  using Eigen::VectorXd;
  const Eigen::Index h = p.m_vec.size();
  const double u = p.box_upper;
  const VectorXd& a = p.m_vec;
  const double b = p.rhs;

  VectorXd x = project_box_hyperplane(VectorXd::Constant(h, u / 2.0), a, u, b);
  x = x.cwiseMax(0.01 * u).cwiseMin(0.99 * u);
  VectorXd g = 2.0 * (p.M * x) - p.A_vec;
  const double z0 = std::max(1e-8, g.lpNorm<Eigen::Infinity>());
  VectorXd zl = VectorXd::Constant(h, z0), zu = VectorXd::Constant(h, z0);
  double y = 0.0;

  Eigen::MatrixXd K(h, h);
  Eigen::LLT<Eigen::MatrixXd> llt;
  VectorXd Ka, dx, dzl, dzu;
  double dy = 0.0;

  for (std::size_t it = 0; it < 200; ++it) {
    const VectorXd s = (u - x.array()).matrix();
    g = 2.0 * (p.M * x) - p.A_vec;
    const VectorXd rd = g - a * y - zl + zu;
    const double rp = a.dot(x) - b;
    const double gap = (x.dot(zl) + s.dot(zu)) / (2.0 * static_cast<double>(h));
    if (natural_residual(p, x, g) <= options.tolerance && std::abs(rp) <= 1e-13) {
      out.rho = x;
      return true;
    }
    if (!(gap > 0.0) || !std::isfinite(gap)) break;

    const VectorXd D = (zl.array() / x.array() + zu.array() / s.array()).matrix();
    double ridge = 1e-14 * std::max(1.0, (2.0 * p.M.diagonal() + D).maxCoeff());
    bool factored = false;
    for (int attempt = 0; attempt < 6 && !factored; ++attempt, ridge *= 100.0) {
      K = 2.0 * p.M;
      K.diagonal() += D;
      K.diagonal().array() += ridge;
      llt.compute(K);
      factored = llt.info() == Eigen::Success;
    }
    if (!factored) break;
    Ka = llt.solve(a);
    const double aKa = a.dot(Ka);
    if (!(aKa > 0.0)) break;

    auto newton = [&](const VectorXd& rl, const VectorXd& ru) {
      const VectorXd rhs = -rd + (rl.array() / x.array()).matrix() - (ru.array() / s.array()).matrix();
      const VectorXd Kr = llt.solve(rhs);
      dy = (-rp - a.dot(Kr)) / aKa;
      dx = Kr + Ka * dy;
      dzl = ((rl.array() - zl.array() * dx.array()) / x.array()).matrix();
      dzu = ((ru.array() + zu.array() * dx.array()) / s.array()).matrix();
    };
    auto max_steps = [&]() {
      double primal = 1.0, dual = 1.0;
      for (Eigen::Index j = 0; j < h; ++j) {
        if (dx(j) < 0.0) primal = std::min(primal, -x(j) / dx(j));
        if (dx(j) > 0.0) primal = std::min(primal, s(j) / dx(j));
        if (dzl(j) < 0.0) dual = std::min(dual, -zl(j) / dzl(j));
        if (dzu(j) < 0.0) dual = std::min(dual, -zu(j) / dzu(j));
      }
      return std::pair{primal, dual};
    };

    // Predictor: pure Newton direction toward complementarity.
    newton((-(x.array() * zl.array())).matrix(), (-(s.array() * zu.array())).matrix());
    auto [ap, ad] = max_steps();
    const double gap_aff =
        ((x + ap * dx).dot(zl + ad * dzl) + (s - ap * dx).dot(zu + ad * dzu)) / (2.0 * static_cast<double>(h));
    const double sigma = std::pow(std::clamp(gap_aff / gap, 0.0, 1.0), 3);

    // Corrector with centering and the second-order term.
    newton((sigma * gap - x.array() * zl.array() - dx.array() * dzl.array()).matrix(),
           (sigma * gap - s.array() * zu.array() + dx.array() * dzu.array()).matrix());
    std::tie(ap, ad) = max_steps();
    const double eta = std::max(0.9, 1.0 - gap);
    ap = std::min(1.0, eta * ap);
    ad = std::min(1.0, eta * ad);
    if (!(ap > 0.0) && !(ad > 0.0)) break;

    x += ap * dx;
    y += ad * dy;
    zl += ad * dzl;
    zu += ad * dzu;
    ++out.iterations;
    if (options.record_trace) out.objective_trace.push_back(qp_objective(p, x));
  }
  // Pull the last iterate onto the feasible set for the first-order fallback.
  out.rho = project_box_hyperplane(x, a, u, b);
  return false;
}

}  // namespace

Posterior solve_qp(const QpProblem& p, const SolverOptions& options,
                   const std::optional<Eigen::VectorXd>& warm_start) {
  check_feasible(p);
  const Eigen::Index h = p.m_vec.size();
  Posterior out;

  bool done = false;
  if (options.method == SolverMethod::interior_point && !degenerate_margin(p)) {
    done = interior_point(p, options, out);
    if (!done) {
      // Finish from the interior-point estimate with the monotone method.
      Eigen::VectorXd start = std::move(out.rho);
      projected_gradient(p, options, std::move(start), out);
      done = true;
    }
  }
  if (!done) {
    Eigen::VectorXd start = warm_start && warm_start->size() == h
                                ? *warm_start
                                : Eigen::VectorXd::Constant(h, p.box_upper / 2.0);
    projected_gradient(p, options, std::move(start), out);
  }
  finish(p, options, out);
  return out;
}

double MajorityVote::score(const PointRef& x) const {
  return coefficients.dot(voter_outputs(voters, x));
}

Eigen::VectorXd MajorityVote::scores(const PointMatrix& points) const {
  return vote_matrix(voters, points) * coefficients;
}

std::vector<int> MajorityVote::predict_all(const PointMatrix& points) const {
  const Eigen::VectorXd s = scores(points);
  std::vector<int> out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = sign_label(s(i));
  return out;
}

MajorityVote make_majority_vote(const Posterior& posterior, VoterSet voters) {
  if (static_cast<std::size_t>(posterior.rho.size()) != voters.size())
    throw std::invalid_argument("posterior and voter set sizes differ");
  const double h = static_cast<double>(voters.size());
  return MajorityVote{(2.0 * posterior.rho.array() - 1.0 / h).matrix(), std::move(voters)};
}

MinCqModel train_mincq(const LabeledSample& sample, double gamma, double mu, const SolverOptions& options) {
  sample.validate();
  VoterSet voters = build_voters(sample.points, gamma);
  const QpProblem problem = assemble_qp(vote_matrix(voters, sample.points), sample.labels, mu);
  Posterior posterior = solve_qp(problem, options);
  MajorityVote vote = make_majority_vote(posterior, std::move(voters));
  return MinCqModel{std::move(vote), std::move(posterior)};
}

nlohmann::json qp_diagnostics(const QpProblem& problem, const Posterior& posterior) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < problem.M.rows(); ++i) rows.push_back(vec(problem.M.row(i).transpose()));
  return {
      {"M", rows},
      {"m", vec(problem.m_vec)},
      {"A", vec(problem.A_vec)},
      {"mu", problem.mu},
      {"rhs", problem.rhs},
      {"box_upper", problem.box_upper},
      {"rho", vec(posterior.rho)},
      {"objective", posterior.objective},
      {"kkt_residual", posterior.kkt_residual},
      {"equality_residual", posterior.equality_residual},
      {"iterations", posterior.iterations},
      {"converged", posterior.converged},
  };
}

}  // namespace pvmincq
