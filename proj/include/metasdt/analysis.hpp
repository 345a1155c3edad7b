#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "metasdt/binning.hpp"
#include "metasdt/inference.hpp"
#include "metasdt/metad.hpp"
#include "metasdt/type1.hpp"

namespace metasdt {

// One cell of the pipeline: raw counts through the M-ratio.
struct CellEstimate {
  RatingCounts raw;
  RatingCounts corrected;
  Type1Stats type1;
  MetaDFit fit;
  double m_ratio = 0.0;
  bool unstable = false;
};

// `s` empty means the equal-variance fit.
CellEstimate estimate_from_counts(const RatingCounts& raw, std::optional<double> s = {},
                                  const MetaDOptions& options = {});
CellEstimate estimate_cell(std::span<const TrialRecord> trials, const BinningScheme& scheme,
                           std::optional<double> s = {}, const MetaDOptions& options = {});

// Trials reduced to (rating, correct) so that resamples can be re-counted
// without re-binning.
struct RatedTrials {
  int k = 4;
  std::vector<std::uint8_t> rating;  // 1..2K
  std::vector<std::uint8_t> correct;

  std::size_t size() const { return rating.size(); }
  RatingCounts counts() const;
  RatingCounts counts(std::span<const std::uint32_t> idx) const;
};

RatedTrials rate_trials(std::span<const TrialRecord> trials, const BinningScheme& scheme);

// Bootstrap of a cell with the binning scheme held fixed. Every resample
// recomputes counts, correction, Type-1 statistics and the meta-d' fit.
// Exclusion is decided on the M-ratio.
struct CellBootstrap {
  BootstrapResult m_ratio;
  BootstrapResult meta_d;
  BootstrapResult d_prime;
};

CellBootstrap bootstrap_cell(const RatedTrials& rated, const BootstrapParams& params,
                             std::uint64_t stream = 0, std::optional<double> s = {},
                             const MetaDOptions& options = {});

// Fewer than `min_trials` trials in either accuracy class.
bool underpowered(const RatingCounts& raw, int min_trials);

nlohmann::json to_json(const CellEstimate& e);
nlohmann::json to_json(const CellBootstrap& b);

}  // namespace metasdt
