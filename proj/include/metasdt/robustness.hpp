#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "metasdt/binning.hpp"
#include "metasdt/metad.hpp"
#include "metasdt/trial_store.hpp"

namespace metasdt {

// Shared settings of the primary analysis that every check perturbs.
// Cells are (model, dataset) at the reference temperature.
struct RobustnessSettings {
  int k = 4;
  BinStrategy strategy = BinStrategy::kQuantile;
  double reference_temperature = 1.0;
  MetaDOptions fit;
  std::uint64_t seed = 42;
  // Share of the trial mass below which an equal-width bin is flagged.
  double sparse_share = 0.01;
};

struct RobustnessCell {
  std::string model_id;
  std::string dataset_id;
  std::string variant;  // e.g. "K=3", "s=0.57", "equal_width", "matched"
  std::optional<double> primary_m;
  std::optional<double> m_ratio;
  std::optional<double> delta;
  std::size_t n_trials = 0;
  std::vector<std::string> warnings;
  std::optional<std::string> error;
};

struct RobustnessReport {
  std::string check_id;
  nlohmann::json settings = nlohmann::json::object();
  std::vector<RobustnessCell> cells;
  double max_perturbation = 0.0;
  // Empty when fewer than two cells of a variant have estimates.
  std::optional<bool> ordering_preserved;
  std::vector<std::string> warnings;
};

// Re-bins at each K (all >= 3) and refits.
RobustnessReport run_r1(std::span<const TrialRecord> trials, std::span<const int> k_values,
                        const RobustnessSettings& settings = {});

// Unequal-variance refit. With `supplied_s` empty, s is estimated per cell
// from its zROC slope; a supplied s must be positive.
RobustnessReport run_r2(std::span<const TrialRecord> trials, std::optional<double> supplied_s,
                        const RobustnessSettings& settings = {});

// Equal-width bins instead of quantile bins.
RobustnessReport run_r3(std::span<const TrialRecord> trials,
                        const RobustnessSettings& settings = {});

// Difficulty-matched subsampling across models within each dataset.
struct MatchedSample {
  std::vector<TrialRecord> trials;  // all models, original order preserved
  std::vector<std::string> warnings;
  std::size_t shared_questions = 0;
};

// Per-question difficulty is the pooled accuracy over the models sharing the
// question; questions fall into `strata` equal-width difficulty bands on
// [0, 1]. Within each (band, correctness) stratum every model is subsampled
// to the smallest count among models. Strata empty for some model are
// dropped with a warning. Throws when no question id is shared by all models.
MatchedSample difficulty_match(std::span<const TrialRecord> trials, int strata,
                               std::uint64_t seed);

RobustnessReport run_r6(std::span<const TrialRecord> trials, int strata = 10,
                        const RobustnessSettings& settings = {});

nlohmann::json to_json(const RobustnessReport& r);

}  // namespace metasdt
