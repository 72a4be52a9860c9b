#include "pvmincq/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace pvmincq {

namespace from_scores {

namespace {
void check(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
  if (labels.empty()) throw std::invalid_argument("empty sample");
  if (static_cast<std::size_t>(scores.size()) != labels.size())
    throw std::invalid_argument("scores and labels differ in length");
}
}  // namespace

double bayes_risk(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
  check(scores, labels);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    errors += sign_label(scores(static_cast<Eigen::Index>(i))) != labels[i];
  return static_cast<double>(errors) / static_cast<double>(labels.size());
}

double first_moment(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
  check(scores, labels);
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) sum += labels[i] * scores(static_cast<Eigen::Index>(i));
  return sum / static_cast<double>(labels.size());
}

double second_moment(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) throw std::invalid_argument("empty sample");
  return scores.squaredNorm() / static_cast<double>(scores.size());
}

std::optional<double> c_bound(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
  const double first = first_moment(scores, labels);
  const double second = second_moment(scores);
  if (!(first > 0.0) || !(second > 0.0)) return std::nullopt;
  return 1.0 - first * first / second;
}

}  // namespace from_scores

double bayes_risk(const MajorityVote& vote, const LabeledSample& sample) {
  return from_scores::bayes_risk(vote.scores(sample.points), sample.labels);
}

double gibbs_risk(const MajorityVote& vote, const LabeledSample& sample) {
  return 0.5 * (1.0 - first_moment(vote, sample));
}

double first_moment(const MajorityVote& vote, const LabeledSample& sample) {
  return from_scores::first_moment(vote.scores(sample.points), sample.labels);
}

double second_moment(const MajorityVote& vote, const PointMatrix& points) {
  return from_scores::second_moment(vote.scores(points));
}

std::optional<double> c_bound(const MajorityVote& vote, const LabeledSample& sample) {
  return from_scores::c_bound(vote.scores(sample.points), sample.labels);
}

double label_divergence(const std::vector<int>& true_labels, const std::vector<int>& transferred_labels,
                        DivergenceMode mode) {
  if (true_labels.empty()) throw std::invalid_argument("label_divergence: empty labels");
  if (true_labels.size() != transferred_labels.size())
    throw std::invalid_argument("label_divergence: lengths differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const int y = true_labels[i], l = transferred_labels[i];
    if ((y != 1 && y != -1) || (l != 1 && l != -1)) throw std::invalid_argument("label must be -1 or +1");
    sum += mode == DivergenceMode::abs_outside ? double(y - l) : std::abs(double(y - l));
  }
  return 0.5 * std::abs(sum) / static_cast<double>(true_labels.size());
}

std::optional<double> da_c_bound(const MajorityVote& vote, const LabeledSample& target,
                                 const std::vector<int>& transferred_labels, DivergenceMode mode) {
  const Eigen::VectorXd scores = vote.scores(target.points);
  const auto bound = from_scores::c_bound(scores, transferred_labels);
  if (!bound) return std::nullopt;
  return *bound + label_divergence(target.labels, transferred_labels, mode);
}

double domain_disagreement(const MajorityVote& vote, const PointMatrix& source, const PointMatrix& target) {
  return std::abs(second_moment(vote, target) - second_moment(vote, source));
}

BoundsReport make_report(const MajorityVote& vote, const LabeledSample& sample,
                         const std::vector<int>* transferred_labels, const PointMatrix* source_points,
                         const PointMatrix* target_points, DivergenceMode mode) {
  sample.validate();
  const Eigen::VectorXd scores = vote.scores(sample.points);
  BoundsReport report;
  report.bayes_risk = from_scores::bayes_risk(scores, sample.labels);
  report.first_moment = from_scores::first_moment(scores, sample.labels);
  report.gibbs_risk = 0.5 * (1.0 - report.first_moment);
  report.second_moment = from_scores::second_moment(scores);
  report.c_bound = from_scores::c_bound(scores, sample.labels);
  if (transferred_labels) {
    report.label_divergence = label_divergence(sample.labels, *transferred_labels, mode);
    if (const auto bound = from_scores::c_bound(scores, *transferred_labels))
      report.da_c_bound = *bound + *report.label_divergence;
  }
  if (source_points && target_points)
    report.domain_disagreement = domain_disagreement(vote, *source_points, *target_points);
  return report;
}

nlohmann::json to_json(const BoundsReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {
      {"bayes_risk", report.bayes_risk},
      {"gibbs_risk", report.gibbs_risk},
      {"first_moment", report.first_moment},
      {"second_moment", report.second_moment},
      {"c_bound", opt(report.c_bound)},
      {"label_divergence", opt(report.label_divergence)},
      {"da_c_bound", opt(report.da_c_bound)},
      {"domain_disagreement", opt(report.domain_disagreement)},
  };
}

}  // namespace pvmincq
