#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "metasdt/binning.hpp"
#include "metasdt/trial_store.hpp"

namespace metasdt {

struct MetricBundle {
  double m_ratio = 0.0;
  double auroc2 = 0.5;
  double ece = 0.0;
  double brier = 0.0;
  double accuracy = 0.0;
  /// |d'| < 0.1 or |m_ratio| > 10.
  bool unstable = false;
};

/// meta-d' / d'. Throws UnstableEstimate when |d'| < 1e-6.
double m_ratio(double meta_d, double d_prime);

/// Instability rule shared by reports and the bootstrap exclusion bound.
bool is_unstable(double d_prime, double m_ratio, double bound = 10.0);

/// P(conf of a random correct trial > conf of a random incorrect trial)
/// + 0.5 * P(tie), computed from mid-ranks (Mann-Whitney U / (n1 * n0)).
/// Confidence is the raw nlp. Throws when either class is empty.
double auroc2(std::span<const TrialRecord> trials);
double auroc2(std::span<const double> confidence, std::span<const bool> correct);

/// Folded-rating variant: area under the Type-2 ROC of confidence level
/// (distance of the rating from the decision boundary, 1..K) separating
/// trials whose Type-1 side matches their class from those where it does not.
double auroc2_folded(const RatingCounts& counts);

/// Probability proxy exp(nlp), clipped to [0, 1].
double confidence_probability(double nlp);

/// Expected calibration error over equal-width probability bins on [0, 1].
double ece(std::span<const TrialRecord> trials, int n_bins = 10);
double brier(std::span<const TrialRecord> trials);
double accuracy(std::span<const TrialRecord> trials);

struct MonotonicityResult {
  std::vector<double> accuracies;
  std::vector<std::size_t> counts;
  bool pass = false;
  std::vector<std::string> warnings;
};

/// Accuracy per nlp quantile group (left-closed groups cut at type-7
/// quantiles); pass iff strictly increasing. Coinciding cut points are merged
/// with a warning.
MonotonicityResult monotonicity_check(std::span<const TrialRecord> trials, int n_quantiles = 4);
bool strictly_increasing(std::span<const double> values);

struct CoveragePoint {
  double coverage = 0.0;
  std::size_t retained = 0;
  double accuracy = 0.0;
};

/// Selective accuracy of the top-coverage fraction by nlp (stable order for
/// ties), for coverage = 1/steps, 2/steps, ..., 1.
std::vector<CoveragePoint> risk_coverage(std::span<const TrialRecord> trials, int steps = 10);

nlohmann::json to_json(const MetricBundle& m);
nlohmann::json to_json(const MonotonicityResult& m);

}  // namespace metasdt
