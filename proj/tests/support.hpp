#pragma once

#include <span>
#include <vector>

#include "metasdt/analysis.hpp"
#include "metasdt/simulator.hpp"

namespace testsupport {

inline metasdt::ObserverSpec observer(double d_gen, double sigma_meta, std::size_t n,
                                      std::uint64_t seed, double sigma_ratio = 1.0) {
  metasdt::ObserverSpec s;
  s.d_gen = d_gen;
  s.sigma_meta = sigma_meta;
  s.sigma_ratio = sigma_ratio;
  s.n = n;
  s.seed = seed;
  return s;
}

// Bins on the sample itself (quantile, K) and returns the full estimate.
inline metasdt::CellEstimate estimate_sample(std::span<const metasdt::TrialRecord> trials,
                                             int k = 4,
                                             std::optional<double> s = std::nullopt) {
  const auto scheme = metasdt::fit_bins(trials, k, metasdt::BinStrategy::kQuantile);
  return metasdt::estimate_cell(trials, scheme, s);
}

inline metasdt::RatingCounts counts(int k, std::vector<double> s1, std::vector<double> s2,
                                    bool corrected = false) {
  metasdt::RatingCounts c;
  c.k = k;
  c.n_r_s1 = std::move(s1);
  c.n_r_s2 = std::move(s2);
  c.corrected = corrected;
  return c;
}

}  // namespace testsupport
