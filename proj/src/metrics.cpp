#include "metasdt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "metasdt/error.hpp"

namespace metasdt {

double m_ratio(double meta_d, double d_prime) {
  if (!(std::fabs(d_prime) >= 1e-6)) {
    throw UnstableEstimate("unstable: |d'| < 1e-6, M-ratio undefined");
  }
  return meta_d / d_prime;
}

bool is_unstable(double d_prime, double m, double bound) {
  return std::fabs(d_prime) < 0.1 || !(std::fabs(m) <= bound);
}

double auroc2(std::span<const double> confidence, std::span<const bool> correct) {
  if (confidence.size() != correct.size()) throw std::invalid_argument("auroc2: size mismatch");
  const std::size_t n = confidence.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return confidence[a] < confidence[b]; });
  // Mid-ranks are multiples of 1/2, so the rank sum is exact in double.
  double rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && confidence[order[j + 1]] == confidence[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (correct[order[t]]) {
        rank_sum += mid;
        n_pos += 1.0;
      }
    }
    i = j + 1;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) {
    throw Error("auroc2 needs at least one correct and one incorrect trial");
  }
  const double u = rank_sum - n_pos * (n_pos + 1.0) / 2.0;
  return u / (n_pos * n_neg);
}

double auroc2(std::span<const TrialRecord> trials) {
  std::vector<double> conf;
  std::vector<char> corr;
  conf.reserve(trials.size());
  corr.reserve(trials.size());
  for (const auto& t : trials) {
    conf.push_back(t.nlp);
    corr.push_back(t.correct);
  }
  std::unique_ptr<bool[]> flags(new bool[corr.size()]);
  for (std::size_t i = 0; i < corr.size(); ++i) flags[i] = corr[i] != 0;
  return auroc2(conf, std::span<const bool>(flags.get(), corr.size()));
}

double auroc2_folded(const RatingCounts& counts) {
  counts.validate();
  const int k = counts.k;
  // Per confidence level: trials with a correct Type-1 side ("hits") and not.
  std::vector<double> right(static_cast<std::size_t>(k), 0.0), wrong(static_cast<std::size_t>(k), 0.0);
  for (int r = 1; r <= 2 * k; ++r) {
    const int level = r <= k ? k + 1 - r : r - k;
    const auto i = static_cast<std::size_t>(r - 1);
    const auto l = static_cast<std::size_t>(level - 1);
    if (r <= k) {
      right[l] += counts.n_r_s1[i];
      wrong[l] += counts.n_r_s2[i];
    } else {
      right[l] += counts.n_r_s2[i];
      wrong[l] += counts.n_r_s1[i];
    }
  }
  const double n_right = std::accumulate(right.begin(), right.end(), 0.0);
  const double n_wrong = std::accumulate(wrong.begin(), wrong.end(), 0.0);
  if (n_right <= 0.0 || n_wrong <= 0.0) {
    throw Error("auroc2_folded needs both correct and incorrect Type-1 responses");
  }
  double wins = 0.0, wrong_below = 0.0;
  for (std::size_t l = 0; l < right.size(); ++l) {
    wins += right[l] * (wrong_below + 0.5 * wrong[l]);
    wrong_below += wrong[l];
  }
  return wins / (n_right * n_wrong);
}

double confidence_probability(double nlp) { return std::clamp(std::exp(nlp), 0.0, 1.0); }

double ece(std::span<const TrialRecord> trials, int n_bins) {
  if (n_bins < 1) throw std::invalid_argument("ece needs at least one bin");
  if (trials.empty()) return 0.0;
  std::vector<double> conf(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<double> hits(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<double> count(static_cast<std::size_t>(n_bins), 0.0);
  for (const auto& t : trials) {
    const double p = confidence_probability(t.nlp);
    const auto b = static_cast<std::size_t>(
        std::min(n_bins - 1, static_cast<int>(std::floor(p * n_bins))));
    conf[b] += p;
    hits[b] += t.correct ? 1.0 : 0.0;
    count[b] += 1.0;
  }
  const double n = static_cast<double>(trials.size());
  double total = 0.0;
  for (std::size_t b = 0; b < count.size(); ++b) {
    if (count[b] == 0.0) continue;
    total += (count[b] / n) * std::fabs(hits[b] / count[b] - conf[b] / count[b]);
  }
  return total;
}

double brier(std::span<const TrialRecord> trials) {
  if (trials.empty()) return 0.0;
  double total = 0.0;
  for (const auto& t : trials) {
    const double d = confidence_probability(t.nlp) - (t.correct ? 1.0 : 0.0);
    total += d * d;
  }
  return total / static_cast<double>(trials.size());
}

double accuracy(std::span<const TrialRecord> trials) {
  if (trials.empty()) return 0.0;
  const auto hits = std::count_if(trials.begin(), trials.end(),
                                  [](const TrialRecord& t) { return t.correct; });
  return static_cast<double>(hits) / static_cast<double>(trials.size());
}

bool strictly_increasing(std::span<const double> values) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) return false;
  }
  return values.size() >= 2;
}

MonotonicityResult monotonicity_check(std::span<const TrialRecord> trials, int n_quantiles) {
  if (n_quantiles < 2) throw std::invalid_argument("monotonicity check needs >= 2 groups");
  if (trials.size() < static_cast<std::size_t>(n_quantiles)) {
    throw Error("monotonicity check needs at least one trial per quantile group");
  }
  std::vector<double> sorted;
  sorted.reserve(trials.size());
  for (const auto& t : trials) sorted.push_back(t.nlp);
  std::sort(sorted.begin(), sorted.end());

  MonotonicityResult out;
  std::vector<double> cuts;
  for (int j = 1; j < n_quantiles; ++j) {
    const double q = sorted_quantile(sorted, static_cast<double>(j) / n_quantiles);
    if (!cuts.empty() && q <= cuts.back()) {
      std::ostringstream msg;
      msg << "quantile cut " << j << " coincides with the previous one; groups merged";
      out.warnings.push_back(msg.str());
      continue;
    }
    cuts.push_back(q);
  }
  const std::size_t groups = cuts.size() + 1;
  std::vector<double> hits(groups, 0.0);
  out.counts.assign(groups, 0);
  for (const auto& t : trials) {
    const auto g = static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), t.nlp) -
                                            cuts.begin());
    out.counts[g] += 1;
    hits[g] += t.correct ? 1.0 : 0.0;
  }
  for (std::size_t g = 0; g < groups; ++g) {
    out.accuracies.push_back(out.counts[g] ? hits[g] / static_cast<double>(out.counts[g]) : 0.0);
  }
  out.pass = groups == static_cast<std::size_t>(n_quantiles) &&
             std::all_of(out.counts.begin(), out.counts.end(), [](std::size_t c) { return c > 0; }) &&
             strictly_increasing(out.accuracies);
  return out;
}

std::vector<CoveragePoint> risk_coverage(std::span<const TrialRecord> trials, int steps) {
  if (trials.size() < 2) throw std::invalid_argument("risk_coverage needs at least 2 trials");
  if (steps < 1) throw std::invalid_argument("risk_coverage needs steps >= 1");
  std::vector<std::size_t> order(trials.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return trials[a].nlp > trials[b].nlp;
  });
  std::vector<double> cumulative(trials.size() + 1, 0.0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    cumulative[i + 1] = cumulative[i] + (trials[order[i]].correct ? 1.0 : 0.0);
  }
  const double n = static_cast<double>(trials.size());
  std::vector<CoveragePoint> curve;
  for (int s = 1; s <= steps; ++s) {
    const double coverage = static_cast<double>(s) / steps;
    auto m = static_cast<std::size_t>(std::llround(coverage * n));
    m = std::clamp<std::size_t>(m, 1, trials.size());
    if (s == steps) m = trials.size();
    curve.push_back({coverage, m, cumulative[m] / static_cast<double>(m)});
  }
  return curve;
}

nlohmann::json to_json(const MetricBundle& m) {
  return {{"m_ratio", m.m_ratio}, {"auroc2", m.auroc2},     {"ece", m.ece},
          {"brier", m.brier},     {"accuracy", m.accuracy}, {"unstable", m.unstable}};
}

nlohmann::json to_json(const MonotonicityResult& m) {
  return {{"accuracies", m.accuracies},
          {"counts", m.counts},
          {"pass", m.pass},
          {"warnings", m.warnings}};
}

}  // namespace metasdt
