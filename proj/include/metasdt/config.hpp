#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "metasdt/binning.hpp"
#include "metasdt/inference.hpp"

namespace metasdt {

struct RobustnessConfig {
  std::vector<std::string> checks{"R1", "R2", "R3", "R6"};
  std::vector<int> r1_k{3, 6};
  // Empty: estimate s per cell from the zROC slope.
  std::optional<double> r2_s;
  int r6_strata = 10;
};

struct RunConfig {
  int k = 4;
  BinStrategy bin_strategy = BinStrategy::kQuantile;
  double reference_temperature = 1.0;
  BootstrapParams bootstrap;
  double tost_delta = 0.3;
  double similarity_threshold = 0.85;
  std::vector<double> temperatures_h3{0.3, 0.5, 0.7, 1.0};
  int min_cell_trials = 50;
  int ece_bins = 10;
  std::string rng_family;
  // "raw" ranks trial-level nlp; "folded" uses the folded confidence ratings.
  std::string auroc2_variant = "raw";
  RobustnessConfig robustness;

  RunConfig();
  // Throws ConfigError describing the first violated constraint.
  void validate() const;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

}  // namespace metasdt
