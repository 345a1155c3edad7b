#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "metasdt/trial_store.hpp"

namespace metasdt {

struct BootstrapParams {
  int n_resamples = 10000;
  std::uint64_t seed = 42;
  double level = 0.95;
  /// Resamples whose statistic exceeds this magnitude are dropped.
  double exclusion_bound = 10.0;
  /// Worker threads; 0 uses the hardware concurrency. Output does not depend
  /// on this value.
  unsigned threads = 0;
};

struct BootstrapResult {
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  int n_resamples = 0;
  int n_excluded = 0;
  std::uint64_t seed = 42;
  /// One value per resample in resample order; NaN marks an excluded resample.
  std::vector<double> replicates;

  std::vector<double> retained() const;
  bool operator==(const BootstrapResult&) const = default;
};

struct ContrastResult {
  double delta = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool excludes_zero = false;
  int n_excluded = 0;
};

/// Statistic over a resample given as indices into the original sample.
/// Returning nullopt (or throwing metasdt::Error) marks the resample failed.
using IndexStatistic = std::function<std::optional<double>(std::span<const std::uint32_t>)>;
/// Several statistics computed from the same resample.
using MultiStatistic =
    std::function<std::optional<std::vector<double>>(std::span<const std::uint32_t>)>;
using TrialStatistic = std::function<std::optional<double>(std::span<const TrialRecord>)>;

/// Percentile bootstrap. Resample r draws n indices with replacement from
/// SubstreamRng(seed, stream, r), so results are identical for any thread
/// count. Resamples whose statistic fails, is non-finite, or exceeds
/// exclusion_bound in magnitude are excluded; more than half excluded throws.
BootstrapResult bootstrap(std::size_t n, const IndexStatistic& statistic,
                          const BootstrapParams& params, std::uint64_t stream = 0);

/// Convenience form that materialises each resample as trial records.
BootstrapResult bootstrap(std::span<const TrialRecord> trials, const TrialStatistic& statistic,
                          const BootstrapParams& params, std::uint64_t stream = 0);

/// Multi-statistic bootstrap sharing one set of resamples. The exclusion rule
/// is evaluated on statistic `gate` and applied to all statistics.
std::vector<BootstrapResult> bootstrap_multi(std::size_t n, const MultiStatistic& statistic,
                                             std::size_t n_stats, const BootstrapParams& params,
                                             std::uint64_t stream = 0, std::size_t gate = 0);

/// Percentile interval of the retained values of `values` (NaNs skipped).
std::pair<double, double> percentile_interval(std::span<const double> values, double level);

/// Contrast of two independently resampled cells, resample-wise a - b.
ContrastResult contrast(const BootstrapResult& a, const BootstrapResult& b, double level);

ContrastResult pairwise_contrast(std::size_t n_a, const IndexStatistic& stat_a, std::size_t n_b,
                                 const IndexStatistic& stat_b, const BootstrapParams& params);
ContrastResult pairwise_contrast(std::span<const TrialRecord> a, std::span<const TrialRecord> b,
                                 const TrialStatistic& statistic, const BootstrapParams& params);

struct TostPair {
  std::string a;
  std::string b;
  double delta = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool equivalent = false;
};

struct TostResult {
  bool pass = false;
  double max_range = 0.0;
  std::vector<TostPair> pairs;
};

/// Bootstrap TOST: every pair of conditions must have the (1 - 2*alpha)
/// percentile interval of its resample-wise difference strictly inside
/// (-delta, delta), alpha = 1 - level (level 0.95 -> 90% interval).
TostResult tost_equivalence(const std::map<std::string, BootstrapResult>& by_condition,
                            double delta = 0.3, double level = 0.95);

/// Spearman rank correlation with average ranks for ties.
double spearman_rho(std::span<const double> x, std::span<const double> y);

/// H1 decision rule: the interval's upper bound lies below 1.
bool h1_test(const BootstrapResult& m_ratio);

nlohmann::json to_json(const BootstrapResult& r);
nlohmann::json to_json(const ContrastResult& r);
nlohmann::json to_json(const TostResult& r);

}  // namespace metasdt
