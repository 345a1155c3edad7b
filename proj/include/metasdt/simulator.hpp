#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "metasdt/inference.hpp"
#include "metasdt/trial_store.hpp"

namespace metasdt {

/// Generative SDT observer.
///
/// Each trial draws its class (correct with probability base_rate) and Type-1
/// evidence x ~ N(+d_gen/2, (1/sigma_ratio)^2) when correct, N(-d_gen/2, 1)
/// otherwise. The confidence copy of the evidence is y = x + N(0, sigma_meta^2).
/// The emitted nlp keeps the Type-1 side of x relative to c_gen and takes its
/// distance from c_gen from the confidence copy:
///     nlp = c_gen + sign(x - c_gen) * |y - c_gen|
/// With sigma_meta = 0 this is nlp = x (an ideal observer, meta-d' = d');
/// larger sigma_meta degrades only the within-side ordering, so M-ratio < 1.
/// sigma_ratio is the zROC slope the data exhibit (estimate_s recovers it).
struct ObserverSpec {
  double d_gen = 1.5;
  double c_gen = 0.0;
  double sigma_ratio = 1.0;
  double sigma_meta = 0.0;
  double base_rate = 0.5;
  std::size_t n = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Grouping metadata stamped on simulated trials.
struct TrialLabels {
  std::string model_id = "sim";
  std::string dataset_id = "sim";
  std::string domain = "all";
  double temperature = 1.0;
  std::string question_prefix = "q";
  std::size_t question_offset = 0;
};

std::vector<TrialRecord> simulate(const ObserverSpec& spec, const TrialLabels& labels = {});

/// Proportion of trials whose Type-1 side (nlp > criterion) agrees with their
/// class.
double decision_accuracy(std::span<const TrialRecord> trials, double criterion);

/// Expected decision_accuracy of a spec:
///   base_rate * Phi((d_gen/2 - c_gen) * sigma_ratio) + (1 - base_rate) * Phi(d_gen/2 + c_gen)
double expected_decision_accuracy(const ObserverSpec& spec);

/// One block of a simulation grid document.
struct GridCell {
  ObserverSpec spec;
  TrialLabels labels;
};

std::vector<GridCell> grid_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ObserverSpec& spec);
ObserverSpec observer_from_json(const nlohmann::json& j, const ObserverSpec& defaults = {});
std::vector<TrialRecord> simulate_grid(std::span<const GridCell> grid);

struct RecoverySettings {
  int k = 4;
  int replicates = 20;
  BootstrapParams bootstrap{.n_resamples = 1000};
  /// Size of the reference simulation used to find the implied meta-d' of a
  /// spec with sigma_meta > 0 (no closed form exists for that case).
  std::size_t reference_n = 1000000;
};

struct RecoveryRow {
  ObserverSpec spec;
  double target_meta_d = 0.0;
  double target_m_ratio = 1.0;
  int replicates = 0;
  int failed = 0;
  double mean_meta_d = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double mean_m_ratio = 0.0;
  double ci_coverage = 0.0;
  long long total_excluded = 0;
};

/// For each spec: `replicates` runs of simulate -> bins -> fit -> bootstrap,
/// summarised as bias/SD of meta-d' and CI coverage of the target M-ratio.
std::vector<RecoveryRow> recovery_study(std::span<const ObserverSpec> grid,
                                        const RecoverySettings& settings);

nlohmann::json to_json(const RecoveryRow& row);

}  // namespace metasdt
