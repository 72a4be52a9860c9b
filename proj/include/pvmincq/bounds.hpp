#pragma once

// Empirical risks and C-bound quantities of a majority vote.
//
// With self-complemented voters the rho-average of voter outputs at x is the
// vote's score, and the average over independent voter pairs factorizes:
//   E_{h~rho} h(x) = score(x),   E_{(h,h')~rho^2} h(x) h'(x) = score(x)^2.

#include <optional>
#include <vector>

#include <json.hpp>

#include "pvmincq/dataset.hpp"
#include "pvmincq/mincq.hpp"

namespace pvmincq {

enum class DivergenceMode {
  abs_outside,  // |mean(y - l)| / 2
  abs_inside,   // mean(|y - l|) / 2, the disagreement rate
};

/// Misclassification rate, sign(0) = +1.
double bayes_risk(const MajorityVote& vote, const LabeledSample& sample);
/// (1 - first_moment) / 2.
double gibbs_risk(const MajorityVote& vote, const LabeledSample& sample);
/// mean_i y_i score(x_i).
double first_moment(const MajorityVote& vote, const LabeledSample& sample);
/// mean_i score(x_i)^2.
double second_moment(const MajorityVote& vote, const PointMatrix& points);

/// 1 - first^2 / second, or nullopt unless first > 0 and second > 0.
std::optional<double> c_bound(const MajorityVote& vote, const LabeledSample& sample);

double label_divergence(const std::vector<int>& true_labels, const std::vector<int>& transferred_labels,
                        DivergenceMode mode = DivergenceMode::abs_outside);

/// C-bound measured with the labels `transferred_labels` plus the label
/// divergence to the true labels of `target`. nullopt unless the first moment
/// against the transferred labels is positive.
std::optional<double> da_c_bound(const MajorityVote& vote, const LabeledSample& target,
                                 const std::vector<int>& transferred_labels,
                                 DivergenceMode mode = DivergenceMode::abs_outside);

/// |mean_T score^2 - mean_S score^2|.
double domain_disagreement(const MajorityVote& vote, const PointMatrix& source, const PointMatrix& target);

// The same quantities from precomputed scores; the vote overloads call these.
namespace from_scores {
double bayes_risk(const Eigen::VectorXd& scores, const std::vector<int>& labels);
double first_moment(const Eigen::VectorXd& scores, const std::vector<int>& labels);
double second_moment(const Eigen::VectorXd& scores);
std::optional<double> c_bound(const Eigen::VectorXd& scores, const std::vector<int>& labels);
}  // namespace from_scores

struct BoundsReport {
  double bayes_risk = 0.0;
  double gibbs_risk = 0.0;
  double first_moment = 0.0;
  double second_moment = 0.0;
  std::optional<double> c_bound;
  std::optional<double> label_divergence;
  std::optional<double> da_c_bound;
  std::optional<double> domain_disagreement;
};

/// Risks and C-bound of `vote` on `sample` (true labels). With
/// `transferred_labels` (one per row of sample) the label divergence and the
/// label-transfer C-bound are filled in; with both point clouds the domain
/// disagreement is.
BoundsReport make_report(const MajorityVote& vote, const LabeledSample& sample,
                         const std::vector<int>* transferred_labels = nullptr,
                         const PointMatrix* source_points = nullptr, const PointMatrix* target_points = nullptr,
                         DivergenceMode mode = DivergenceMode::abs_outside);

nlohmann::json to_json(const BoundsReport& report);

}  // namespace pvmincq
