#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "metasdt/error.hpp"
#include "metasdt/metrics.hpp"
#include "support.hpp"

using namespace metasdt;

namespace {

TrialRecord trial(double nlp, bool correct) {
  TrialRecord t;
  t.nlp = nlp;
  t.correct = correct;
  return t;
}

double brute_auroc(const std::vector<TrialRecord>& trials) {
  double wins = 0, pairs = 0;
  for (const auto& a : trials) {
    if (!a.correct) continue;
    for (const auto& b : trials) {
      if (b.correct) continue;
      pairs += 1;
      wins += a.nlp > b.nlp ? 1.0 : a.nlp == b.nlp ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

}  // namespace

TEST(Metrics, MRatioFromReportedEstimates) {
  EXPECT_NEAR(m_ratio(1.361, 1.597), 0.8522, 5e-5);
  EXPECT_NEAR(m_ratio(1.474, 1.407), 1.0476, 5e-5);
}

TEST(Metrics, MRatioRejectsZeroSensitivity) {
  EXPECT_THROW(m_ratio(1.0, 0.0), UnstableEstimate);
  EXPECT_THROW(m_ratio(1.0, 5e-7), UnstableEstimate);
  EXPECT_NO_THROW(m_ratio(1.0, -2e-6));
}

TEST(Metrics, InstabilityRule) {
  EXPECT_TRUE(is_unstable(0.05, 1.0));
  EXPECT_TRUE(is_unstable(1.0, 10.5));
  EXPECT_TRUE(is_unstable(1.0, NAN));
  EXPECT_FALSE(is_unstable(1.0, -9.5));
  EXPECT_FALSE(is_unstable(0.1, 1.0));
}

TEST(Metrics, AurocMatchesPairwiseCountWithTies) {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<int> level(0, 5);
  std::bernoulli_distribution coin(0.5);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<TrialRecord> trials;
    for (int i = 0; i < 40; ++i) trials.push_back(trial(-0.25 * level(gen), coin(gen)));
    trials.push_back(trial(-3.0, true));
    trials.push_back(trial(-3.0, false));
    EXPECT_NEAR(auroc2(trials), brute_auroc(trials), 1e-12);
  }
}

TEST(Metrics, AurocExtremes) {
  const std::vector<TrialRecord> perfect{trial(-2, false), trial(-1, false), trial(-0.5, true)};
  EXPECT_EQ(auroc2(perfect), 1.0);
  const std::vector<TrialRecord> inverted{trial(-2, true), trial(-1, false)};
  EXPECT_EQ(auroc2(inverted), 0.0);
  const std::vector<TrialRecord> tied{trial(-1, true), trial(-1, false)};
  EXPECT_EQ(auroc2(tied), 0.5);
  const std::vector<TrialRecord> one_class{trial(-1, true), trial(-2, true)};
  EXPECT_THROW(auroc2(one_class), Error);
}

TEST(Metrics, FoldedAurocOnHandCountedTable) {
  // K = 2; level 1 = ratings 2 and 3, level 2 = ratings 1 and 4.
  // Right responses: incorrect at ratings 1-2, correct at ratings 3-4.
  const auto c = testsupport::counts(2, {4, 2, 1, 1}, {1, 1, 2, 6});
  // right: level1 = 2+2 = 4, level2 = 4+6 = 10; wrong: level1 = 1+1 = 2, level2 = 1+1 = 2.
  // wins = 4*(0 + 0.5*2) + 10*(2 + 0.5*2) = 4 + 30 = 34 over 14*4 = 56.
  EXPECT_NEAR(auroc2_folded(c), 34.0 / 56.0, 1e-15);
}

TEST(Metrics, ConfidenceProbabilityClips) {
  EXPECT_EQ(confidence_probability(0.3), 1.0);
  EXPECT_NEAR(confidence_probability(std::log(0.25)), 0.25, 1e-15);
  EXPECT_EQ(confidence_probability(-800.0), 0.0);
}

TEST(Metrics, CalibrationOnHandComputedSample) {
  const std::vector<TrialRecord> trials{trial(std::log(0.95), true), trial(std::log(0.95), false),
                                        trial(std::log(0.15), false),
                                        trial(std::log(0.15), false)};
  // Bin 9: conf 0.95, accuracy 0.5; bin 1: conf 0.15, accuracy 0.
  EXPECT_NEAR(ece(trials), 0.5 * 0.45 + 0.5 * 0.15, 1e-12);
  EXPECT_NEAR(brier(trials), (0.05 * 0.05 + 0.95 * 0.95 + 2 * 0.15 * 0.15) / 4, 1e-12);
  EXPECT_EQ(accuracy(trials), 0.25);
  EXPECT_THROW(ece(trials, 0), std::invalid_argument);
}

TEST(Metrics, PerfectCalibrationHasZeroError) {
  std::vector<TrialRecord> trials;
  for (int i = 0; i < 10; ++i) trials.push_back(trial(std::log(0.55), i < 5 ? false : true));
  for (int i = 0; i < 10; ++i) trials.push_back(trial(std::log(0.55), i < 4 ? false : true));
  // Mean accuracy in the bin is 11/20 = 0.55.
  EXPECT_NEAR(ece(trials), 0.0, 1e-12);
}

TEST(Metrics, StrictMonotonicity) {
  const std::vector<double> reported{0.314, 0.539, 0.690, 0.859};
  EXPECT_TRUE(strictly_increasing(reported));
  const std::vector<double> flat{0.3, 0.5, 0.5, 0.9};
  EXPECT_FALSE(strictly_increasing(flat));
  const std::vector<double> single{0.5};
  EXPECT_FALSE(strictly_increasing(single));
}

TEST(Metrics, MonotonicityGroupsAndAccuracies) {
  std::vector<TrialRecord> trials;
  // Quartile groups of 4 trials each with 1, 2, 3, 4 correct.
  for (int g = 0; g < 4; ++g) {
    for (int i = 0; i < 4; ++i) trials.push_back(trial(-4.0 + g + 0.1 * i, i <= g));
  }
  const auto m = monotonicity_check(trials);
  ASSERT_EQ(m.accuracies.size(), 4u);
  EXPECT_EQ(m.counts, (std::vector<std::size_t>{4, 4, 4, 4}));
  EXPECT_DOUBLE_EQ(m.accuracies[0], 0.25);
  EXPECT_DOUBLE_EQ(m.accuracies[3], 1.0);
  EXPECT_TRUE(m.pass);
}

TEST(Metrics, MonotonicityMergesTiedCuts) {
  std::vector<TrialRecord> trials;
  for (int i = 0; i < 12; ++i) trials.push_back(trial(-1.0, i % 2 == 0));
  for (int i = 0; i < 4; ++i) trials.push_back(trial(-0.1 * i, true));
  const auto m = monotonicity_check(trials);
  EXPECT_FALSE(m.warnings.empty());
  EXPECT_LT(m.accuracies.size(), 4u);
  EXPECT_FALSE(m.pass);
}

TEST(Metrics, RiskCoverageCurve) {
  std::vector<TrialRecord> trials;
  for (int i = 0; i < 10; ++i) trials.push_back(trial(-0.1 * i, i < 3));
  const auto curve = risk_coverage(trials, 5);
  ASSERT_EQ(curve.size(), 5u);
  EXPECT_EQ(curve[0].retained, 2u);
  EXPECT_EQ(curve[0].accuracy, 1.0);
  EXPECT_EQ(curve[1].retained, 4u);
  EXPECT_EQ(curve[1].accuracy, 0.75);
  EXPECT_EQ(curve[4].retained, 10u);
  EXPECT_DOUBLE_EQ(curve[4].accuracy, 0.3);
  EXPECT_EQ(curve[4].coverage, 1.0);
}

TEST(Metrics, RiskCoverageFullCoverageEqualsAccuracy) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd(-1, 1);
  std::bernoulli_distribution coin(0.4);
  std::vector<TrialRecord> trials;
  for (int i = 0; i < 333; ++i) trials.push_back(trial(nd(gen), coin(gen)));
  const auto curve = risk_coverage(trials, 7);
  EXPECT_EQ(curve.back().retained, trials.size());
  EXPECT_DOUBLE_EQ(curve.back().accuracy, accuracy(trials));
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_GT(curve[i].retained, curve[i - 1].retained);
}
