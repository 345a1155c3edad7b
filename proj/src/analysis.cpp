#include "metasdt/analysis.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "metasdt/error.hpp"
#include "metasdt/metrics.hpp"

namespace metasdt {

CellEstimate estimate_from_counts(const RatingCounts& raw, std::optional<double> s,
                                  const MetaDOptions& options) {
  CellEstimate e;
  e.raw = raw;
  e.corrected = hautus_correct(raw);
  e.fit = s ? fit_meta_d_uv(e.corrected, *s, options) : fit_meta_d(e.corrected, options);
  e.type1 = compute_type1(e.corrected);
  e.m_ratio = m_ratio(e.fit.meta_d, e.fit.d_prime);
  e.unstable = is_unstable(e.fit.d_prime, e.m_ratio);
  return e;
}

CellEstimate estimate_cell(std::span<const TrialRecord> trials, const BinningScheme& scheme,
                           std::optional<double> s, const MetaDOptions& options) {
  return estimate_from_counts(build_counts(trials, scheme), s, options);
}

RatingCounts RatedTrials::counts() const {
  std::vector<std::uint32_t> all(size());
  std::iota(all.begin(), all.end(), 0u);
  return counts(all);
}

RatingCounts RatedTrials::counts(std::span<const std::uint32_t> idx) const {
  // Integer tallies first: the doubles in RatingCounts then hold exact counts.
  std::vector<std::uint32_t> tally(static_cast<std::size_t>(4 * k), 0);
  const std::size_t width = static_cast<std::size_t>(2 * k);
  for (auto i : idx) {
    tally[(correct[i] ? width : 0) + rating[i] - 1u] += 1;
  }
  RatingCounts out = RatingCounts::zeros(k);
  for (std::size_t r = 0; r < width; ++r) {
    out.n_r_s1[r] = tally[r];
    out.n_r_s2[r] = tally[width + r];
  }
  return out;
}

RatedTrials rate_trials(std::span<const TrialRecord> trials, const BinningScheme& scheme) {
  if (scheme.k > 127) throw std::invalid_argument("K too large for compact ratings");
  RatedTrials out;
  out.k = scheme.k;
  out.rating.reserve(trials.size());
  out.correct.reserve(trials.size());
  for (const auto& t : trials) {
    out.rating.push_back(static_cast<std::uint8_t>(assign_rating(t.nlp, scheme)));
    out.correct.push_back(t.correct ? 1 : 0);
  }
  return out;
}

CellBootstrap bootstrap_cell(const RatedTrials& rated, const BootstrapParams& params,
                             std::uint64_t stream, std::optional<double> s,
                             const MetaDOptions& options) {
  MultiStatistic stat =
      [&](std::span<const std::uint32_t> idx) -> std::optional<std::vector<double>> {
    const CellEstimate e = estimate_from_counts(rated.counts(idx), s, options);
    return std::vector<double>{e.m_ratio, e.fit.meta_d, e.fit.d_prime};
  };
  auto res = bootstrap_multi(rated.size(), stat, 3, params, stream, 0);
  return {std::move(res[0]), std::move(res[1]), std::move(res[2])};
}

bool underpowered(const RatingCounts& raw, int min_trials) {
  const double incorrect = std::accumulate(raw.n_r_s1.begin(), raw.n_r_s1.end(), 0.0);
  const double correct = std::accumulate(raw.n_r_s2.begin(), raw.n_r_s2.end(), 0.0);
  return incorrect < min_trials || correct < min_trials;
}

nlohmann::json to_json(const CellEstimate& e) {
  return {{"counts", to_json(e.raw)},
          {"type1", to_json(e.type1)},
          {"fit", to_json(e.fit)},
          {"m_ratio", e.m_ratio},
          {"unstable", e.unstable}};
}

nlohmann::json to_json(const CellBootstrap& b) {
  return {{"m_ratio", to_json(b.m_ratio)},
          {"meta_d", to_json(b.meta_d)},
          {"d_prime", to_json(b.d_prime)}};
}

}  // namespace metasdt
